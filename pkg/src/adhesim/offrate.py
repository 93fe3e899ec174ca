"""Off-rate laws: how fast a bond of elongation u unbinds.

Every family is even in u, bounded below by its value at zero elongation and
globally Lipschitz, which is what the mass and stability estimates consume.
Each spec also carries affine-minorant data (intercept, slope at zero) used by
the detachment-time certificate: intercept + slope*u <= zeta(u) on the stated
validity range of the family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FAMILIES = ("constant", "affine", "saturating", "clipped_bell")


@dataclass(frozen=True)
class OffRateSpec:
    """Parametric off-rate zeta(u) with queryable analysis constants.

    zeta0 is the value at u = 0 and the global minimum for all families.
    `exploratory` marks laws (the capped exponential) whose growth sits at the
    edge of what the Lipschitz-based diagnostics cover.
    """

    family: str
    zeta0: float
    slope: float = 0.0
    u_sat: float = 0.0
    u_cap: float = 0.0
    exploratory: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown off-rate family {self.family!r}")
        if self.zeta0 <= 0.0:
            raise ValueError("off-rate must have a strictly positive minimum")
        if self.slope < 0.0:
            raise ValueError("off-rate growth slope must be nonnegative")
        if self.family == "saturating" and self.u_sat <= 0.0:
            raise ValueError("saturating off-rate needs u_sat > 0")
        if self.family == "clipped_bell" and self.u_cap <= 0.0:
            raise ValueError("capped exponential off-rate needs u_cap > 0")

    # -- constructors --------------------------------------------------------

    @classmethod
    def constant(cls, zeta0: float) -> "OffRateSpec":
        return cls("constant", zeta0)

    @classmethod
    def affine(cls, zeta0: float, slope: float) -> "OffRateSpec":
        """zeta(u) = zeta0 + slope*|u|."""
        return cls("affine", zeta0, slope=slope)

    @classmethod
    def saturating(cls, zeta0: float, slope: float, u_sat: float) -> "OffRateSpec":
        """zeta(u) = zeta0 + slope*min(|u|, u_sat)."""
        return cls("saturating", zeta0, slope=slope, u_sat=u_sat)

    @classmethod
    def clipped_bell(cls, zeta0: float, u_cap: float) -> "OffRateSpec":
        """zeta(u) = zeta0 * exp(min(|u|, u_cap)); flagged exploratory."""
        return cls("clipped_bell", zeta0, u_cap=u_cap, exploratory=True)

    # -- evaluation -----------------------------------------------------------

    def __call__(self, u):
        mag = np.abs(np.asarray(u, dtype=float))
        if self.family == "constant":
            out = np.full_like(mag, self.zeta0)
        elif self.family == "affine":
            out = self.zeta0 + self.slope * mag
        elif self.family == "saturating":
            out = self.zeta0 + self.slope * np.minimum(mag, self.u_sat)
        else:
            out = self.zeta0 * np.exp(np.minimum(mag, self.u_cap))
        if out.ndim == 0:
            return float(out)
        return out

    # -- analysis constants ---------------------------------------------------

    @property
    def zeta_min(self) -> float:
        return self.zeta0

    @property
    def zeta_at_zero(self) -> float:
        return self.zeta0

    @property
    def lipschitz(self) -> float:
        if self.family == "constant":
            return 0.0
        if self.family in ("affine", "saturating"):
            return self.slope
        return self.zeta0 * math.exp(self.u_cap)

    @property
    def convex_intercept(self) -> float:
        """Value at zero of the convex minorant zeta_c."""
        return self.zeta0

    @property
    def convex_slope(self) -> float:
        """Slope at zero of the convex minorant zeta_c.

        Zero for the constant and saturating families: no affine function with
        positive slope stays below a bounded law for all u >= 0.
        """
        if self.family == "affine":
            return self.slope
        if self.family == "clipped_bell":
            return self.zeta0
        return 0.0

    def convex_minorant(self, u):
        """Evaluate the convex comparison function zeta_c.

        For the capped exponential this is zeta0*exp(u), a minorant only up to
        the cap; callers working past u_cap are outside the certified range.
        """
        arr = np.asarray(u, dtype=float)
        if self.family == "affine":
            out = self.zeta0 + self.slope * arr
        elif self.family == "clipped_bell":
            out = self.zeta0 * np.exp(arr)
        else:
            out = np.full_like(arr, self.zeta0)
        if out.ndim == 0:
            return float(out)
        return out
