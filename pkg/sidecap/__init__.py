"""sidecap: capacity of the Gaussian channel with correlated two-sided state information."""

__version__ = "0.1.0"
