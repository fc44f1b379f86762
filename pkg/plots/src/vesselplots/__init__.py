"""Figure rendering for vesselprior experiment outputs."""

__version__ = "0.1.0"
