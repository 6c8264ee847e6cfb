"""
Learning and inference for Gaussian graphical models with a small feedback vertex set.
"""
__version__ = "1.0.0"
