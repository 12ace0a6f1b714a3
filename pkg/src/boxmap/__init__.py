"""Complex box mappings: construction, puzzle combinatorics, measurement."""

__version__ = "0.1.0"
