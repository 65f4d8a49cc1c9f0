"""Physical inputs and the derived boundary-layer coefficients."""

import cmath
import math
from dataclasses import dataclass, field

from .errors import BranchDegenerate, NonPhysical


def derive_coefficients(delta_v, delta_t, gamma, k):
    """Return ``(c1, c2)`` for the visco-thermal boundary condition.

    ``c1 = -delta_v (i - 1) / 2`` and ``c2 = delta_t k^2 (gamma - 1) (i - 1) / 2``.
    """
    if delta_v < 0 or delta_t < 0:
        raise NonPhysical("boundary layer thicknesses must be non-negative")
    if gamma < 1:
        raise NonPhysical(f"specific heat ratio must be >= 1, got {gamma}")
    if not k > 0:
        raise NonPhysical("wavenumber must be positive")
    c1 = -delta_v * (1j - 1) / 2
    c2 = delta_t * k * k * (gamma - 1) * (1j - 1) / 2
    return complex(c1), complex(c2)


def surface_wavenumber(c1, c2):
    """Surface wavenumber ``sqrt((1 + c1 c2) / c1^2)`` on the branch with positive imaginary part."""
    if c1 == 0:
        raise ZeroDivisionError("surface wavenumber undefined for c1 = 0")
    root = cmath.sqrt((1 + c1 * c2) / (c1 * c1))
    if root.imag == 0:
        raise BranchDegenerate(f"surface wavenumber {root} is real; no branch has Im > 0")
    return root if root.imag > 0 else -root


@dataclass(frozen=True)
class PhysicalParams:
    """Frequency-domain inputs; everything downstream reads ``k``, ``c1``, ``c2``, ``k_gamma``.

    ``robin`` is the coefficient ``a`` of the Robin condition ``a u + du/dn = g``.
    """

    wavelength: float
    delta_v: float
    delta_t: float
    gamma: float = 1.4
    robin: complex = None
    k: float = field(init=False)
    c1: complex = field(init=False)
    c2: complex = field(init=False)
    k_gamma: complex = field(init=False)

    def __post_init__(self):
        if not self.wavelength > 0:
            raise NonPhysical("wavelength must be positive")
        k = 2 * math.pi / self.wavelength
        c1, c2 = derive_coefficients(self.delta_v, self.delta_t, self.gamma, k)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "c1", c1)
        object.__setattr__(self, "c2", c2)
        kg = surface_wavenumber(c1, c2) if c1 != 0 else complex("nan")
        object.__setattr__(self, "k_gamma", kg)
        if self.robin is None:
            object.__setattr__(self, "robin", 1j * k)
        else:
            object.__setattr__(self, "robin", complex(self.robin))

    def with_robin(self, a):
        return PhysicalParams(self.wavelength, self.delta_v, self.delta_t, self.gamma, robin=a)


def standard_params(robin=None):
    """Representative air-like values: delta_v = delta_t = 1/160, gamma = 1.4, wavelength 1.1."""
    return PhysicalParams(1.1, 1 / 160, 1 / 160, 1.4, robin=robin)
