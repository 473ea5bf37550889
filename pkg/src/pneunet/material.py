"""Third-order Yeoh model for the silicone body, linear-elastic fabric layer.

Incompressible, so the strain energy depends on the first invariant only:

    W(I1) = C10 (I1 - 3) + C20 (I1 - 3)^2 + C30 (I1 - 3)^3

Stress units follow the coefficient units (kPa by default) and must match the
pressure units used by the actuator surrogate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_I1_SLACK = 1e-12


@dataclass(frozen=True)
class YeohCoefficients:
    c10: float
    c20: float = 0.0
    c30: float = 0.0
    unit: str = "kPa"

    def __post_init__(self):
        if not self.c10 > 0:
            raise ValueError(f"c10 must be positive, got {self.c10}")
        if self.unit not in ("kPa", "MPa"):
            raise ValueError(f"unit must be 'kPa' or 'MPa', got {self.unit!r}")

    @property
    def shear_modulus(self) -> float:
        return 2.0 * self.c10

    def in_kpa(self) -> "YeohCoefficients":
        if self.unit == "kPa":
            return self
        return YeohCoefficients(self.c10 * 1e3, self.c20 * 1e3, self.c30 * 1e3, "kPa")


# Ecoflex 00-50 fit valid past 500 % strain
ECOFLEX_00_50 = YeohCoefficients(c10=1.9e2, c20=9e-4, c30=-4.75e-6)


@dataclass(frozen=True)
class FabricElastic:
    youngs_modulus: float = 6.5  # GPa
    poisson_ratio: float = 0.2

    def __post_init__(self):
        if not self.youngs_modulus > 0:
            raise ValueError("Young's modulus must be positive")
        if not 0 <= self.poisson_ratio < 0.5:
            raise ValueError("Poisson ratio must lie in [0, 0.5)")


COTTON_FABRIC = FabricElastic()


def _shifted_invariant(i1):
    i1 = np.asarray(i1, dtype=float)
    if np.any(i1 < 3.0 - _I1_SLACK):
        raise ValueError("first invariant below 3 is not attainable for an "
                         "incompressible material")
    return np.maximum(i1 - 3.0, 0.0)


def yeoh_energy(i1, c: YeohCoefficients):
    """Strain energy density at first invariant ``i1`` (scalar or array)."""
    x = _shifted_invariant(i1)
    w = x * (c.c10 + x * (c.c20 + x * c.c30))
    return w if w.ndim else float(w)


def yeoh_dw_di1(i1, c: YeohCoefficients):
    x = _shifted_invariant(i1)
    d = c.c10 + x * (2.0 * c.c20 + 3.0 * c.c30 * x)
    return d if d.ndim else float(d)


def uniaxial_first_invariant(stretch):
    lam = np.asarray(stretch, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("stretch must be positive")
    i1 = lam**2 + 2.0 / lam
    return i1 if i1.ndim else float(i1)


def uniaxial_energy(stretch, c: YeohCoefficients):
    """W along the incompressible uniaxial path, as a function of stretch."""
    return yeoh_energy(uniaxial_first_invariant(stretch), c)


def nominal_stress_kernel(lam: np.ndarray, c: YeohCoefficients) -> np.ndarray:
    """Unchecked uniaxial nominal stress for stretches known to be >= 1."""
    x = lam * lam + 2.0 / lam - 3.0
    return 2.0 * (lam - 1.0 / (lam * lam)) * (c.c10 + x * (2.0 * c.c20 + 3.0 * c.c30 * x))


def uniaxial_nominal_stress(stretch, c: YeohCoefficients):
    """First Piola (nominal) stress in incompressible uniaxial tension, dW/dλ."""
    lam = np.asarray(stretch, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("stretch must be positive")
    p = 2.0 * (lam - lam**-2) * yeoh_dw_di1(uniaxial_first_invariant(lam), c)
    return p if np.ndim(p) else float(p)
