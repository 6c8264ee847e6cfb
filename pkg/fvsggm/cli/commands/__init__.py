"""
Command groups, one module per top-level command.
"""
