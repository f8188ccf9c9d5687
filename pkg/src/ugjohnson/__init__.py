"""Affine Unique Games on Johnson graphs: relaxation, rounding, verification."""

__version__ = "0.1.0"
