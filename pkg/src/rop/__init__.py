"""Street-level road-object placement at intersections."""

__version__ = "0.1.0"
