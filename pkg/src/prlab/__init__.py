"""prlab: pseudorandomness statistics for arithmetic sequences."""

__version__ = "0.1.0"
