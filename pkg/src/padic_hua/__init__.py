"""p-adic Hua measures on matrix spaces."""

__version__ = "0.1.0"
