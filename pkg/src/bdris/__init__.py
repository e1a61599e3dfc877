"""Closed-form optimal scattering matrices for multi-operator RIS systems."""

__version__ = "0.1.0"
