"""Elongation transport with the three right-hand-side variants.

The source g(t) divides the forcing-plus-tension balance by the total mass;
the cut-off variants replace 1/mu0 by 1/max(mu0, mu_floor) and optionally
clamp the tension integral to [-p_cap, p_cap], which is what makes the
fixed-point construction contract.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import errors
from .model import Grid, ModelParams, StateFields, weighted_sup_norm
from .offrate import OffRateSpec

VARIANTS = ("full", "double_cutoff", "simple_cutoff")


@dataclass(frozen=True)
class RhsMode:
    """Right-hand-side variant plus its cut-off constants."""

    variant: str
    mu_floor: float | None = None
    p_cap: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown rhs variant {self.variant!r}")
        if self.variant != "full":
            if self.mu_floor is not None and self.mu_floor <= 0:
                raise ValueError("mu_floor must be positive")
            if self.variant == "double_cutoff" and self.p_cap is not None \
                    and self.p_cap <= 0:
                raise ValueError("p_cap must be positive")

    @classmethod
    def resolve(cls, mode, params: ModelParams) -> "RhsMode":
        """Accept a variant name or a partially filled mode; fill cut-offs."""
        if isinstance(mode, str):
            mode = cls(mode)
        mu = mode.mu_floor if mode.mu_floor is not None else params.mu_floor
        cap = mode.p_cap if mode.p_cap is not None else params.p_cap
        return cls(mode.variant, mu_floor=mu, p_cap=cap)


@dataclass(frozen=True)
class RhsValue:
    """One evaluation of the source term with its audit flags."""

    g: float
    tension: float
    tension_abs: float
    clamped: bool
    floored: bool


def linkage_tension(rho: np.ndarray, v: np.ndarray, grid: Grid,
                    offrate: OffRateSpec, absolute: bool = False) -> float:
    """Quadrature of zeta(v)*v*rho (signed) or zeta(v)*|v|*rho (absolute)."""
    zeta = offrate(v)
    vv = np.abs(v) if absolute else v
    return grid.quadrature(zeta * vv * rho)


def build_rhs(state: StateFields, force_rate: float, mode: RhsMode,
              offrate: OffRateSpec) -> RhsValue:
    """Evaluate g(t) from the current fields under the requested variant."""
    grid = state.grid
    zeta = offrate(state.v)
    weighted = zeta * state.rho
    tension = grid.quadrature(weighted * state.v)
    tension_abs = grid.quadrature(weighted * np.abs(state.v))
    eps_rate = grid.eps * force_rate

    if mode.variant == "full":
        if state.mu0 <= 0.0:
            raise errors.DivisionByZeroMass(
                "source evaluated at zero bond mass (tear-off)")
        return RhsValue((eps_rate + tension) / state.mu0, tension,
                        tension_abs, clamped=False, floored=False)

    floored = state.mu0 < mode.mu_floor
    denom = max(state.mu0, mode.mu_floor)
    if mode.variant == "double_cutoff":
        clamped = abs(tension) > mode.p_cap
        eff = min(mode.p_cap, max(-mode.p_cap, tension))
        return RhsValue((eps_rate + eff) / denom, tension, tension_abs,
                        clamped=clamped, floored=floored)
    return RhsValue((eps_rate + tension) / denom, tension, tension_abs,
                    clamped=False, floored=floored)


def step_v(state: StateFields, g_t: float, dt: float) -> np.ndarray:
    """Shift the elongation one cell up in age and add the accumulated source.

    Exact for sources that are constant on each step, because on the aligned
    grid the characteristic through a node passes through the previous node.
    """
    grid = state.grid
    if abs(dt - grid.dt) > 1e-12 * grid.dt:
        raise errors.MisalignedGrid("step dt must match the grid dt")
    out = np.empty_like(state.v)
    out[0] = 0.0
    out[1:] = state.v[:-1] + grid.da * g_t
    if not np.all(np.isfinite(out)):
        raise errors.NonFiniteElongation("elongation became non-finite")
    return out


def xnorm_bound_check(trajectory, g_norm: float | None = None,
                      v_init_norm: float | None = None) -> float:
    """Margin of the weighted-transport ceiling over a whole run.

    The weighted slice norm of v is bounded by (T/(T+eps))*sup|g| plus the
    weighted norm of the initial profile. Returns the minimum over recorded
    times of bound minus measured; nonnegative means the ceiling held.
    """
    t = trajectory.t
    if g_norm is None:
        g = trajectory.column("g")
        finite = g[np.isfinite(g)]
        g_norm = float(np.max(np.abs(finite))) if finite.size else 0.0
    if v_init_norm is None:
        v_init_norm = trajectory.meta["v_init_wnorm"]
    horizon = float(t[-1]) if t.size else 0.0
    eps = trajectory.params.eps
    bound = horizon / (horizon + eps) * g_norm + v_init_norm if horizon > 0 \
        else v_init_norm
    measured = trajectory.column("v_wnorm")
    return float(np.min(bound - measured))
