"""Semiclassical spectral toolkit for the guiding-center drift of a charged
particle in a strong magnetic field and a weak periodic electric potential."""

__version__ = "0.1.0"
