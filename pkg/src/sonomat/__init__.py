"""Mobile phased-array mid-air haptics: simulator, field solver and control service."""

__version__ = "0.1.0"
