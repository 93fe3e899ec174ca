"""Bond-density transport: renewal boundary, moments, and independent oracles.

One step moves every node one cell up in age (exact transport on the aligned
grid) and multiplies by the decay accumulated along the characteristic
segment; the newborn boundary value is closed implicitly against the updated
total mass, which keeps the scheme unconditionally stable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import errors
from .model import Grid, ModelParams, StateFields

_ORACLE_SUBDIV = 512


@dataclass
class KineticsStepInput:
    """Inputs for one density step.

    beta_next is the on-rate at the end of the step, where the newborn
    boundary value lives.
    """

    state: StateFields
    zeta_field: np.ndarray
    beta_next: float
    dt: float


@dataclass
class KineticsStepResult:
    rho: np.ndarray
    mu0: float
    dropped: float


def advance_density(rho: np.ndarray, zeta: np.ndarray, beta_next: float,
                    grid: Grid) -> KineticsStepResult:
    """March the density one aligned step.

    Interior nodes j >= 1 receive rho[j-1] decayed by the trapezoidal average
    of the off-rate over the segment. The boundary value beta*(1 - mu0_new)
    involves the new mass including itself; the scalar closure
    mu0 = (S + w0*beta) / (1 + w0*beta) with S the quadrature over shifted
    nodes resolves it exactly.
    """
    da = grid.da
    decay = np.exp(-0.5 * (zeta[:-1] + zeta[1:]) * da)
    core = rho[:-1] * decay
    w = grid.quad_w
    interior = float(w[1:] @ core)
    if interior >= 1.0:
        raise errors.MassBlowup(
            f"interior mass {interior} >= 1 after one step")
    w0 = w[0]
    mu0 = (interior + w0 * beta_next) / (1.0 + w0 * beta_next)
    if mu0 >= 1.0:
        raise errors.MassBlowup(f"updated mass {mu0} >= 1")
    out = np.empty_like(rho)
    out[1:] = core
    out[0] = beta_next * (1.0 - mu0)
    if not (math.isfinite(mu0) and np.all(np.isfinite(core))):
        raise errors.NonFiniteDensity("density became non-finite")
    dropped = da * rho[-1] * math.exp(-zeta[-1] * da)
    return KineticsStepResult(rho=out, mu0=mu0, dropped=dropped)


def step_rho(inp: KineticsStepInput) -> KineticsStepResult:
    """Advance the density held in inp.state (the state is not mutated)."""
    grid = inp.state.grid
    if abs(inp.dt - grid.dt) > 1e-12 * grid.dt:
        raise errors.MisalignedGrid("step dt must match the grid dt")
    return advance_density(inp.state.rho, np.asarray(inp.zeta_field, dtype=float),
                           inp.beta_next, grid)


def moment(rho: np.ndarray, grid: Grid, p: int) -> float:
    """Trapezoid quadrature of a^p * rho over the age grid."""
    if p < 0:
        raise ValueError("moment order must be nonnegative")
    if p == 0:
        return grid.quadrature(rho)
    return grid.quadrature(grid.ages ** p * rho)


def moment_bound(params: ModelParams, p: int,
                 initial_moments=None) -> float:
    """Closed-form ceiling for the p-th moment along any admissible run.

    sum_{l=0..p} p!/(l! zmin^(p-l)) * mu_l(0) + p!/zmin^p * bmax/(bmin+zmin).
    """
    if p < 1:
        raise ValueError("moment bound defined for p >= 1")
    mus = initial_moments if initial_moments is not None else params.initial_moments
    if mus is None or len(mus) <= p:
        raise ValueError(f"need initial moments up to order {p}")
    zmin = params.offrate.zeta_min
    b_lo, b_hi = params.birth_bounds()
    pf = math.factorial(p)
    total = sum(pf / (math.factorial(l) * zmin ** (p - l)) * mus[l]
                for l in range(p + 1))
    total += pf / zmin ** p * b_hi / (b_lo + zmin)
    return total


def _history_value(mu0_history, t: float, atol: float) -> float:
    if callable(mu0_history):
        return float(mu0_history(t))
    times, values = mu0_history
    times = np.asarray(times, dtype=float)
    i = int(np.searchsorted(times, t))
    for j in (i - 1, i, i + 1):
        if 0 <= j < times.size and abs(times[j] - t) <= atol:
            return float(np.asarray(values)[j])
    raise errors.HistoryGap(f"mass history does not cover t = {t}")


def rho_closed_form(params: ModelParams, mu0_history, zeta_char: Callable,
                    t: float, a: float, n_sub: int = _ORACLE_SUBDIV) -> float:
    """Evaluate the two-branch characteristics solution at (t, a).

    Ages below t/eps were born at the boundary: on-rate times the saturation
    factor at the birth time, decayed by the off-rate accumulated along the
    characteristic. Older ages transport the initial profile. zeta_char(tt, aa)
    must return the off-rate field at times tt and ages aa (arrays of equal
    shape); mu0_history is a callable or a (times, values) series.

    Independent of the marching scheme: the decay exponent is integrated on
    its own fine subdivision.
    """
    if a < 0:
        raise errors.NegativeAge(f"age must be nonnegative, got {a}")
    eps = params.eps
    shift = t / eps
    atol = 1e-6 * params.grid.dt + 1e-12
    if a < shift - 1e-12:
        birth_t = t - eps * a
        mu_b = _history_value(mu0_history, birth_t, atol)
        ages = np.linspace(0.0, a, max(2, n_sub))
        zz = zeta_char(birth_t + eps * ages, ages)
        expo = float(np.trapz(zz, ages))
        return params.birth.value(birth_t) * (1.0 - mu_b) * math.exp(-expo)
    a0 = a - shift
    ages = np.linspace(a0, a, max(2, n_sub))
    zz = zeta_char(t - eps * (a - ages), ages)
    expo = float(np.trapz(zz, ages))
    return float(params.rho_init(a0)) * math.exp(-expo)


@dataclass(frozen=True)
class SpaceTimeFunction:
    """Smooth test function phi(t, a) with its partial derivatives."""

    value: Callable
    time_slope: Callable
    age_slope: Callable


def weak_form_residual(trajectory, phi: SpaceTimeFunction,
                       T: float | None = None) -> float:
    """Discrete defect of the integrated-by-parts transport identity.

    Space-time quadrature of rho*(eps*phi_t + phi_a - zeta(v)*phi) plus the
    final-time, inflow-boundary and initial-time terms; zero in the continuum,
    O(dt + da) for the marched fields. Snapshot slices are linearly
    interpolated in time, so the time integral is a trapezoid over the stored
    snapshot times.
    """
    snaps = trajectory.snapshots
    if len(snaps) < 2:
        raise errors.MissingSnapshots(
            "weak-form residual needs stored field snapshots")
    params = trajectory.params
    grid = params.grid
    eps = params.eps
    ages = grid.ages
    w = grid.quad_w

    if T is None:
        T = snaps[-1].t
    chosen = [s for s in snaps if s.t <= T + 1e-12]
    if len(chosen) < 2 or abs(chosen[-1].t - T) > 1e-9 * max(1.0, T):
        raise errors.MissingSnapshots(
            f"snapshots do not cover [0, {T}] up to the final time")

    t_snap = np.array([s.t for s in chosen])
    inner = np.empty(t_snap.size)
    for i, s in enumerate(chosen):
        zeta = params.offrate(s.v)
        integrand = s.rho * (eps * phi.time_slope(s.t, ages)
                             + phi.age_slope(s.t, ages)
                             - zeta * phi.value(s.t, ages))
        inner[i] = float(integrand @ w)
    term_bulk = float(np.trapz(inner, t_snap))

    last = chosen[-1]
    term_final = -eps * float((last.rho * phi.value(last.t, ages)) @ w)

    tt = trajectory.t
    keep = tt <= T + 1e-12
    rho_b = trajectory.column("rho_boundary")[keep]
    phi_b = np.array([phi.value(t, 0.0) for t in tt[keep]])
    term_boundary = float(np.trapz(rho_b * phi_b, tt[keep]))

    first = chosen[0]
    term_initial = eps * float((first.rho * phi.value(first.t, ages)) @ w)

    return term_bulk + term_final + term_boundary + term_initial
