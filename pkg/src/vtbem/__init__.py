"""Nyström boundary integral solver for Helmholtz problems with visco-thermal boundary conditions."""

from .params import PhysicalParams, standard_params

__all__ = ["PhysicalParams", "standard_params"]
__version__ = "0.1.0"
