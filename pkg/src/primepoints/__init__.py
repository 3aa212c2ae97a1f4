"""Circle-method laboratory for prime points on integer hypersurfaces."""

__version__ = "0.1.0"
