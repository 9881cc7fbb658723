"""Moment stability of linear SDEs with multiplicative noise."""

__version__ = "0.1.0"
