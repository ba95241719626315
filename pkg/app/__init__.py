"""
Exact Shimura curve signatures over Q and real quadratic fields.
"""
__version__ = "0.1.0"
