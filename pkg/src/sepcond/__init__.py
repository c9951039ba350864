"""Event-level Stern-Gerlach and EPRB simulation with reconstruction of the
source matrix, beam projectors and parameter evolution from event statistics."""

__version__ = "0.1.0"
