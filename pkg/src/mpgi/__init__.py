"""Multi-resolution progressive computational ghost imaging in simulation."""
__version__ = "0.1.0"
