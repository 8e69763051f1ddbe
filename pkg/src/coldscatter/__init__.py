"""Coupled-dipole light scattering from dense, cold Gaussian atomic clouds."""

__version__ = "0.1.0"
