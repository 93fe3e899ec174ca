"""Input-function presets: time-dependent rates/forces and initial age profiles.

The analysis consumes bounds (min, max, Lipschitz constant of f) as data, so
every preset knows its own bounds analytically; tabulated inputs must declare
theirs explicitly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

_FINE = 4096  # sample count for numerical fallbacks on the clamped sinusoid


@dataclass(frozen=True)
class TimeFunction:
    """Scalar function of time with queryable bounds and derivative data.

    Kinds: constant, linear, clamped_sine, tabulated.
      constant      c0
      linear        c0 + c1*t
      clamped_sine  max(c0 + c1*sin(omega*t), floor)   (floor optional)
      tabulated     linear interpolation of (table_t, table_v); value and
                    derivative ranges must be supplied by the caller
    """

    kind: str
    c0: float = 0.0
    c1: float = 0.0
    omega: float = 0.0
    floor: float | None = None
    table_t: tuple = ()
    table_v: tuple = ()
    declared_value_range: tuple | None = None
    declared_derivative_range: tuple | None = None

    @classmethod
    def constant(cls, value: float) -> "TimeFunction":
        return cls("constant", c0=value)

    @classmethod
    def linear(cls, intercept: float, slope: float) -> "TimeFunction":
        return cls("linear", c0=intercept, c1=slope)

    @classmethod
    def clamped_sine(cls, offset: float, amplitude: float, omega: float,
                     floor: float | None = None) -> "TimeFunction":
        if amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        return cls("clamped_sine", c0=offset, c1=amplitude, omega=omega, floor=floor)

    @classmethod
    def tabulated(cls, times, values, value_range, derivative_range) -> "TimeFunction":
        times = tuple(float(t) for t in times)
        values = tuple(float(v) for v in values)
        if len(times) != len(values) or len(times) < 2:
            raise ValueError("tabulated input needs >= 2 aligned samples")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("tabulated times must increase strictly")
        return cls("tabulated", table_t=times, table_v=values,
                   declared_value_range=(float(value_range[0]), float(value_range[1])),
                   declared_derivative_range=(float(derivative_range[0]),
                                              float(derivative_range[1])))

    # -- evaluation -----------------------------------------------------------

    def value(self, t: float) -> float:
        if self.kind == "constant":
            return self.c0
        if self.kind == "linear":
            return self.c0 + self.c1 * t
        if self.kind == "clamped_sine":
            raw = self.c0 + self.c1 * math.sin(self.omega * t)
            return raw if self.floor is None else max(raw, self.floor)
        return float(np.interp(t, self.table_t, self.table_v))

    def derivative(self, t: float) -> float:
        if self.kind == "constant":
            return 0.0
        if self.kind == "linear":
            return self.c1
        if self.kind == "clamped_sine":
            raw = self.c0 + self.c1 * math.sin(self.omega * t)
            if self.floor is not None and raw < self.floor:
                return 0.0
            return self.c1 * self.omega * math.cos(self.omega * t)
        return self._table_slope(t)

    def _table_slope(self, t: float) -> float:
        ts, vs = self.table_t, self.table_v
        if t <= ts[0]:
            return 0.0
        if t >= ts[-1]:
            return 0.0
        i = int(np.searchsorted(ts, t, side="right")) - 1
        return (vs[i + 1] - vs[i]) / (ts[i + 1] - ts[i])

    # -- analytic bounds ------------------------------------------------------

    def value_range(self, t0: float, t1: float) -> tuple[float, float]:
        """Valid (possibly conservative) bounds for the value on [t0, t1]."""
        if self.kind == "constant":
            return (self.c0, self.c0)
        if self.kind == "linear":
            a, b = self.value(t0), self.value(t1)
            return (min(a, b), max(a, b))
        if self.kind == "clamped_sine":
            lo = self.c0 - self.c1
            if self.floor is not None:
                lo = max(lo, self.floor)
            return (lo, self.c0 + self.c1)
        return self.declared_value_range

    def derivative_range(self, t0: float, t1: float) -> tuple[float, float]:
        if self.kind == "constant":
            return (0.0, 0.0)
        if self.kind == "linear":
            return (self.c1, self.c1)
        if self.kind == "clamped_sine":
            m = self.c1 * abs(self.omega)
            lo = -m if self.floor is None else min(-m, 0.0)
            return (lo, m)
        return self.declared_derivative_range

    def derivative_sup(self, t0: float, t1: float) -> float:
        lo, hi = self.derivative_range(t0, t1)
        return max(abs(lo), abs(hi))

    def abs_derivative_integral(self, t0: float, t1: float) -> float:
        """Integral of |d/dt value| over [t0, t1]."""
        if t1 <= t0 or self.kind == "constant":
            return 0.0
        if self.kind == "linear":
            return abs(self.c1) * (t1 - t0)
        if self.kind == "tabulated":
            total = 0.0
            ts, vs = self.table_t, self.table_v
            for i in range(len(ts) - 1):
                lo, hi = max(ts[i], t0), min(ts[i + 1], t1)
                if hi > lo:
                    slope = (vs[i + 1] - vs[i]) / (ts[i + 1] - ts[i])
                    total += abs(slope) * (hi - lo)
            return total
        tt = np.linspace(t0, t1, _FINE)
        dd = np.abs([self.derivative(t) for t in tt])
        return float(np.trapz(dd, tt))

    def shifted(self, delta: float) -> "TimeFunction":
        """Same function plus a constant (derivative data unchanged)."""
        if self.kind == "tabulated":
            return replace(self, table_v=tuple(v + delta for v in self.table_v),
                           declared_value_range=(self.declared_value_range[0] + delta,
                                                 self.declared_value_range[1] + delta))
        return replace(self, c0=self.c0 + delta)


@dataclass(frozen=True)
class AgeProfile:
    """Initial-data profile over age.

    Kinds: zero, constant (c0), linear (c0 * a), exponential
    (c0 * c1 * exp(-c1 * a), total integral c0), uniform (c0 / c1 on [0, c1)).
    """

    kind: str
    c0: float = 0.0
    c1: float = 0.0

    @classmethod
    def zero(cls) -> "AgeProfile":
        return cls("zero")

    @classmethod
    def constant(cls, value: float) -> "AgeProfile":
        return cls("constant", c0=value)

    @classmethod
    def linear(cls, slope: float) -> "AgeProfile":
        return cls("linear", c0=slope)

    @classmethod
    def exponential(cls, mass: float, rate: float) -> "AgeProfile":
        if rate <= 0:
            raise ValueError("exponential profile needs rate > 0")
        return cls("exponential", c0=mass, c1=rate)

    @classmethod
    def uniform(cls, mass: float, width: float) -> "AgeProfile":
        if width <= 0:
            raise ValueError("uniform profile needs width > 0")
        return cls("uniform", c0=mass, c1=width)

    def __call__(self, a):
        arr = np.asarray(a, dtype=float)
        if self.kind == "zero":
            out = np.zeros_like(arr)
        elif self.kind == "constant":
            out = np.full_like(arr, self.c0)
        elif self.kind == "linear":
            out = self.c0 * arr
        elif self.kind == "exponential":
            out = self.c0 * self.c1 * np.exp(-self.c1 * arr)
        else:
            out = np.where(arr < self.c1, self.c0 / self.c1, 0.0)
        if out.ndim == 0:
            return float(out)
        return out

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (self.kind in ("constant", "linear") and self.c0 == 0.0)

    def support_bound(self, tol: float) -> float:
        """Age past which the profile stays below tol (inf if it never does)."""
        if self.is_zero:
            return 0.0
        if self.kind == "exponential":
            peak = self.c0 * self.c1
            if peak <= tol:
                return 0.0
            return math.log(peak / tol) / self.c1
        if self.kind == "uniform":
            return self.c1
        return math.inf
