"""
Tasks module initialization.
"""
