"""Zero-shot speech translation laboratory on a synthetic corpus."""
__version__ = "0.1.0"
