"""Binding-site position via the delay integral equation, and the v <-> z bridge.

The force balance (1/eps) * integral (z(t) - z(t - eps*a)) rho(t,a) da = f(t)
is solved for z(t) directly on the aligned grid: the lags t - eps*a_j land on
earlier grid times, so the history buffer holds plain nodal values and the
balance is satisfied to round-off by construction. Elongation follows as the
scaled history difference, which lets the same kinetics march run on either
route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import errors
from .coupling import _interp_crossing, _row_values
from .kinetics import advance_density
from .model import Grid, ModelParams, initial_state, validate_params, weighted_sup_norm
from .record import Recorder, TrajectoryRecord

_DENOM_TINY = 1e-300


@dataclass(frozen=True)
class PastPosition:
    """Known positions for t <= 0 with a declared Lipschitz bound."""

    fn: Callable
    z0: float
    lipschitz: float

    def value(self, t):
        out = np.asarray(self.fn(np.asarray(t, dtype=float)), dtype=float)
        if out.ndim == 0:
            return float(out)
        return out

    @classmethod
    def from_v_init(cls, v_init, eps: float, z0: float = 0.0,
                    lipschitz: float | None = None) -> "PastPosition":
        """Past positions consistent with an initial elongation profile.

        v(0, a) = (z(0) - z(-eps*a))/eps forces z(s) = z0 - eps*v_init(-s/eps)
        for s <= 0.
        """
        def fn(s):
            return z0 - eps * np.asarray(v_init(np.asarray(s) / -eps))
        if lipschitz is None:
            ages = np.linspace(0.0, 64.0, 2049)
            vals = np.asarray(v_init(ages))
            slopes = np.abs(np.diff(eps * vals) / (eps * np.diff(ages)))
            lipschitz = float(np.max(slopes)) if slopes.size else 0.0
        return cls(fn=fn, z0=z0, lipschitz=lipschitz)


def check_history_compatibility(past: PastPosition, v_init, eps: float,
                                grid: Grid, tol: float = 1e-8) -> None:
    """Require v_init(a) == (z0 - past(-eps*a))/eps on the grid nodes."""
    implied = (past.z0 - past.value(-eps * grid.ages)) / eps
    given = np.asarray(v_init(grid.ages), dtype=float)
    gap = float(np.max(np.abs(implied - given)))
    if gap > tol * max(1.0, float(np.max(np.abs(given))) if given.size else 1.0):
        raise errors.IncompatibleHistory(
            f"past positions imply an initial elongation off by {gap:g}")


def solve_z_step(z_lagged: np.ndarray, rho: np.ndarray, f_t: float,
                 mu0: float, eps: float, grid: Grid) -> float:
    """Solve the discrete force balance for the current position.

    z_lagged[j] holds z(t - j*dt) for j >= 1 (entry 0 is ignored: it is the
    unknown). The j = 0 quadrature term contains z(t) itself, so the balance
    is a scalar linear equation solved exactly.
    """
    w = grid.quad_w
    if mu0 <= 0.0:
        raise errors.ZeroMass("no bond mass left; the position equation degenerates")
    denom = mu0 - w[0] * rho[0]
    if denom <= _DENOM_TINY:
        raise errors.ZeroMass("interior bond mass vanished; cannot solve for z")
    lagged_sum = float((w[1:] * rho[1:]) @ z_lagged[1:])
    return (eps * f_t + lagged_sum) / denom


def v_from_z(z_series, z_past: PastPosition, eps: float, grid: Grid,
             t: float) -> np.ndarray:
    """Reconstruct the elongation slice v(t, a_j) = (z(t) - z(t - eps*a_j))/eps.

    z_series is a (times, values) pair of solved positions at grid times;
    negative lags fall through to the past-position function.
    """
    times, values = z_series
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    dt = grid.dt
    atol = 1e-6 * dt + 1e-12

    idx_now = np.searchsorted(times, t)
    ok = False
    for j in (idx_now - 1, idx_now, idx_now + 1):
        if 0 <= j < times.size and abs(times[j] - t) <= atol:
            idx_now, ok = j, True
            break
    if not ok:
        raise errors.HistoryGap(f"position series does not contain t = {t}")
    z_now = values[idx_now]

    lag_times = t - eps * grid.ages
    out = np.empty(grid.ages.size)
    for j, s in enumerate(lag_times):
        if s >= -atol:
            k = idx_now - j
            if k < 0 or abs(times[k] - s) > atol:
                raise errors.HistoryGap(f"position series misses lag time {s}")
            z_lag = values[k]
        else:
            z_lag = z_past.value(s)
        out[j] = (z_now - z_lag) / eps
    return out


def force_balance_residual(rho: np.ndarray, v: np.ndarray, f_t: float,
                           grid: Grid) -> float:
    """|quadrature(rho * v) - f(t)|, the defect of the elastic force balance."""
    return abs(grid.quadrature(rho * v) - f_t)


def march_zroute(params: ModelParams, T: float | None = None,
                 past: PastPosition | None = None,
                 snapshot_stride: int | None = None) -> TrajectoryRecord:
    """March the delay-equation route: kinetics driven by the history-derived v.

    Without an explicit past, positions are synthesised from the initial
    elongation profile (z0 = 0). Sequencing matches march_coupled: the
    off-rate field lags one step behind the newly solved position, so route
    differences against the transport solver isolate discretisation error.
    """
    if not params.validated:
        params = validate_params(params)
    grid = params.grid
    dt = grid.dt
    eps = params.eps
    n_steps = grid.n_t if T is None else int(math.ceil(T / dt - 1e-9))
    if n_steps > grid.n_t:
        raise errors.AgeGridTooShort(
            f"horizon {T} exceeds the grid horizon {grid.t_final}")
    stride = params.snapshot_stride if snapshot_stride is None else snapshot_stride

    if past is None:
        past = PastPosition.from_v_init(params.v_init, eps)
    else:
        check_history_compatibility(past, params.v_init, eps, grid)

    state = initial_state(params)
    # z at the current and the n_a most recent grid times, newest first
    zbuf = past.value(-eps * grid.ages)
    zbuf = np.atleast_1d(zbuf).astype(float)

    rec = Recorder(params, coupling="delay", variant="full")
    rec.meta["v_init_wnorm"] = weighted_sup_norm(state.v, grid)
    rec.meta["detect_threshold"] = params.detection_threshold()
    rec.add_row(**_row_values(params, 0.0, state.rho, state.v, state.mu0,
                              g=math.nan, clamp=False, floor=False,
                              dropped_cum=0.0, cum_abs_rate=0.0,
                              force_rate=params.force.derivative(0.0),
                              z=zbuf[0]))
    if stride > 0:
        rec.snapshot(0, 0.0, state.rho, state.v)

    threshold = params.detection_threshold()
    dropped_cum = 0.0
    cum_abs_rate = 0.0
    tearoff_time = None
    terminated = "completed"

    for n in range(n_steps):
        t_next = (n + 1) * dt
        zeta = params.offrate(state.v)
        step = advance_density(state.rho, zeta, params.birth.value(t_next), grid)
        dropped_cum += step.dropped
        if dropped_cum > params.tail_budget:
            raise errors.TailBudgetExceeded(
                f"cumulative dropped mass {dropped_cum:g} over budget")

        if step.mu0 < threshold:
            tearoff_time = _interp_crossing(n * dt, state.mu0, t_next, step.mu0,
                                            threshold)
            state.torn_off = True
            terminated = "tearoff"
            break

        # lag j at t_next is the (j-1)-th newest stored value
        lagged = np.empty_like(zbuf)
        lagged[1:] = zbuf[:-1]
        try:
            z_new = solve_z_step(lagged, step.rho, params.force.value(t_next),
                                 step.mu0, eps, grid)
        except errors.ZeroMass:
            tearoff_time = t_next
            state.torn_off = True
            terminated = "tearoff"
            break
        lagged[0] = z_new
        zbuf = lagged

        v_new = (z_new - zbuf) / eps
        v_new[0] = 0.0

        state.rho = step.rho
        state.mu0 = step.mu0
        state.v = v_new
        state.t = t_next
        rate_mid = params.force.derivative(t_next - 0.5 * dt)
        cum_abs_rate += abs(rate_mid) * dt

        rec.add_row(**_row_values(params, t_next, state.rho, state.v, state.mu0,
                                  g=math.nan, clamp=False, floor=False,
                                  dropped_cum=dropped_cum,
                                  cum_abs_rate=cum_abs_rate,
                                  force_rate=rate_mid, z=z_new))
        if stride > 0 and ((n + 1) % stride == 0 or n + 1 == n_steps):
            rec.snapshot(n + 1, t_next, state.rho, state.v)

    return rec.finish(tearoff_time=tearoff_time, terminated=terminated)
