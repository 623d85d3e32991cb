"""umbra: flat shadow boundaries, cubic-form reconstruction and related combinatorics."""

__version__ = "0.1.0"
