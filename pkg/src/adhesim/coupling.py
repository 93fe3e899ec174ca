"""Coupled marching of density and elongation.

Two drivers share the same per-step kinetics:

march_coupled
    Fast explicit co-marching. Each step evaluates the off-rate from the
    current elongation, advances the density, builds the source from the
    updated density and the lagged elongation, then transports.

picard_march / picard_window
    Windowed successive substitution for the stabilized (cut-off) system.
    Each pass freezes the off-rate field at the previous iterate, re-solves
    the density, rebuilds the source at matching time levels and transports.
    The converged window solves the implicit-in-source discrete system, so
    the explicit lag of march_coupled is removed. Empirical contraction
    ratios are recorded per window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import errors
from .elongation import RhsMode, build_rhs, step_v
from .kinetics import advance_density, moment
from .model import (ModelParams, StateFields, initial_state, validate_params,
                    weighted_sup_norm)
from .record import Recorder, TrajectoryRecord

_RATIO_FLOOR = 1e-12


@dataclass(frozen=True)
class PicardConfig:
    """Window length, convergence tolerance and iteration budget."""

    window: float
    tol: float = 1e-9
    max_iter: int = 40
    mode: object = "double_cutoff"

    def __post_init__(self):
        if self.window <= 0:
            raise ValueError("window length must be positive")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class IterationTrace:
    """Per-iteration weighted-norm differences of successive iterates."""

    diffs: list
    ratios: list
    converged: bool
    iterations: int
    c_hat: float | None


@dataclass
class WindowSolution:
    """Converged fields over one window (slice 0 is the start state)."""

    times: np.ndarray
    rho: list
    v: list
    mu0: np.ndarray
    g: np.ndarray
    clamped: np.ndarray
    floored: np.ndarray
    dropped: np.ndarray


def _row_values(params, t, rho, v, mu0, *, g, clamp, floor,
                dropped_cum, cum_abs_rate, force_rate, z=math.nan):
    grid = params.grid
    zeta = params.offrate(v)
    weighted = zeta * rho
    rho_v = rho * v
    f_t = params.force.value(t)
    balance = grid.quadrature(rho_v)
    return dict(
        t=t, mu0=mu0,
        mu1=moment(rho, grid, 1), mu2=moment(rho, grid, 2),
        rho_boundary=rho[0], rho_min=float(np.min(rho)),
        tension=grid.quadrature(weighted * v),
        tension_abs=grid.quadrature(weighted * np.abs(v)),
        rho_v_abs=grid.quadrature(np.abs(rho_v)),
        rho_v_min=float(np.min(rho_v)),
        v_wnorm=weighted_sup_norm(v, grid), v_boundary=v[0],
        g=g, force=f_t, force_rate=force_rate,
        force_rate_cum_abs=cum_abs_rate, dropped_cum=dropped_cum,
        clamp_flag=float(clamp), floor_flag=float(floor),
        z=z, balance_residual=abs(balance - f_t),
    )


def _resolve_steps(params, T):
    grid = params.grid
    if T is None:
        return grid.n_t
    n = int(math.ceil(T / grid.dt - 1e-9))
    if n > grid.n_t:
        raise errors.AgeGridTooShort(
            f"horizon {T} exceeds the grid horizon {grid.t_final}")
    return n


def _interp_crossing(t0, m0, t1, m1, level):
    if m0 == m1:
        return t1
    return t0 + (t1 - t0) * (level - m0) / (m1 - m0)


def march_coupled(params: ModelParams, mode="full", T: float | None = None,
                  snapshot_stride: int | None = None) -> TrajectoryRecord:
    """Explicit co-marching until T, tear-off or error.

    Tear-off (mass under the detection threshold) ends full-variant runs
    normally, with the crossing time stored on the record; the cut-off
    variants keep the dynamics bounded, so they run to T.
    """
    if not params.validated:
        params = validate_params(params)
    mode = RhsMode.resolve(mode, params)
    grid = params.grid
    dt = grid.dt
    n_steps = _resolve_steps(params, T)
    stride = params.snapshot_stride if snapshot_stride is None else snapshot_stride

    state = initial_state(params)
    rec = Recorder(params, coupling="march", variant=mode.variant)
    rec.meta["v_init_wnorm"] = weighted_sup_norm(state.v, grid)
    rec.meta["detect_threshold"] = params.detection_threshold()

    rhs0 = build_rhs(state, params.force.derivative(0.0), mode, params.offrate)
    rec.add_row(**_row_values(params, 0.0, state.rho, state.v, state.mu0,
                              g=rhs0.g, clamp=rhs0.clamped, floor=rhs0.floored,
                              dropped_cum=0.0, cum_abs_rate=0.0,
                              force_rate=params.force.derivative(0.0)))
    if stride > 0:
        rec.snapshot(0, 0.0, state.rho, state.v)

    threshold = params.detection_threshold()
    dropped_cum = 0.0
    cum_abs_rate = 0.0
    tearoff_time = None
    terminated = "completed"

    for n in range(n_steps):
        t = n * dt
        t_next = t + dt
        zeta = params.offrate(state.v)
        step = advance_density(state.rho, zeta, params.birth.value(t_next), grid)
        dropped_cum += step.dropped
        if dropped_cum > params.tail_budget:
            raise errors.TailBudgetExceeded(
                f"cumulative mass {dropped_cum:g} dropped past a_max exceeds "
                f"the budget {params.tail_budget:g}")

        if mode.variant == "full" and step.mu0 < threshold:
            tearoff_time = _interp_crossing(t, state.mu0, t_next, step.mu0,
                                            threshold)
            state.torn_off = True
            terminated = "tearoff"
            break

        state.rho = step.rho
        state.mu0 = step.mu0
        rate_mid = params.force.derivative(t + 0.5 * dt)
        try:
            rhs = build_rhs(state, rate_mid, mode, params.offrate)
        except errors.DivisionByZeroMass:
            tearoff_time = t_next
            state.torn_off = True
            terminated = "tearoff"
            break
        state.v = step_v(state, rhs.g, dt)
        state.t = t_next
        cum_abs_rate += abs(rate_mid) * dt

        rec.add_row(**_row_values(params, t_next, state.rho, state.v, state.mu0,
                                  g=rhs.g, clamp=rhs.clamped, floor=rhs.floored,
                                  dropped_cum=dropped_cum,
                                  cum_abs_rate=cum_abs_rate,
                                  force_rate=rate_mid))
        if stride > 0 and ((n + 1) % stride == 0 or n + 1 == n_steps):
            rec.snapshot(n + 1, t_next, state.rho, state.v)

    return rec.finish(tearoff_time=tearoff_time, terminated=terminated)


def picard_window(params: ModelParams, start_state: StateFields, dT: float,
                  config: PicardConfig):
    """Solve one window by successive substitution; returns (solution, trace).

    Raises NoContraction when the iterate differences stop decreasing within
    the iteration budget (callers shrink the window and retry).
    """
    mode = RhsMode.resolve(config.mode, params)
    if mode.variant == "full":
        raise ValueError("the fixed-point driver needs a cut-off variant")
    grid = params.grid
    dt = grid.dt
    m = int(round(dT / dt))
    if m < 1:
        raise errors.WindowUnderflow(
            f"window {dT:g} is shorter than one step {dt:g}")

    t0 = start_state.t
    times = t0 + np.arange(m + 1) * dt
    n_nodes = grid.ages.size

    v_iter = np.empty((m + 1, n_nodes))
    v_iter[0] = start_state.v
    for i in range(m):
        v_iter[i + 1, 0] = 0.0
        v_iter[i + 1, 1:] = v_iter[i, :-1]

    omega = 1.0 / (1.0 + grid.ages)
    diffs: list[float] = []
    ratios: list[float] = []
    converged = False
    last = None

    for _ in range(config.max_iter):
        rho = [start_state.rho]
        mu0 = np.empty(m + 1)
        mu0[0] = start_state.mu0
        g_used = np.empty(m)
        clamped = np.zeros(m)
        floored = np.zeros(m)
        dropped = np.empty(m)
        v_next = np.empty_like(v_iter)
        v_next[0] = start_state.v

        for i in range(m):
            zeta = params.offrate(v_iter[i])
            step = advance_density(rho[i], zeta, params.birth.value(times[i + 1]),
                                   grid)
            rho.append(step.rho)
            mu0[i + 1] = step.mu0
            dropped[i] = step.dropped

            probe = StateFields(grid=grid, t=times[i + 1], rho=step.rho,
                                v=v_iter[i + 1], mu0=step.mu0)
            rhs = build_rhs(probe, params.force.derivative(times[i] + 0.5 * dt),
                            mode, params.offrate)
            g_used[i] = rhs.g
            clamped[i] = float(rhs.clamped)
            floored[i] = float(rhs.floored)
            v_next[i + 1, 0] = 0.0
            v_next[i + 1, 1:] = v_next[i, :-1] + grid.da * rhs.g

        diff = float(np.max(np.abs(v_next[1:] - v_iter[1:]) * omega)) if m else 0.0
        floor_level = _RATIO_FLOOR * max(1.0, diffs[0] if diffs else diff)
        if diffs and diffs[-1] > floor_level:
            ratios.append(diff / diffs[-1])
        diffs.append(diff)
        v_iter = v_next
        last = WindowSolution(times=times, rho=rho, v=[v_next[i] for i in range(m + 1)],
                              mu0=mu0, g=g_used, clamped=clamped, floored=floored,
                              dropped=dropped)
        if diff <= config.tol:
            converged = True
            break
        if len(ratios) >= 2 and ratios[-1] >= 1.0 and ratios[-2] >= 1.0:
            break

    c_hat = None
    if ratios:
        c_hat = ratios[0] * params.eps / (m * dt)
    trace = IterationTrace(diffs=diffs, ratios=ratios, converged=converged,
                           iterations=len(diffs), c_hat=c_hat)
    if not converged:
        raise errors.NoContraction(
            f"no contraction over window {dT:g} after {len(diffs)} iterations")
    return last, trace


def window_schedule(params: ModelParams, T: float, config: PicardConfig) -> list:
    """Partition [0, T] into windows of the configured length.

    Returns (start_time, steps) pairs; the driver may still shrink windows
    adaptively when a solve fails to contract.
    """
    dt = params.grid.dt
    m = int(round(config.window / dt))
    if m < 1:
        raise errors.WindowUnderflow(
            f"window {config.window:g} is shorter than one step {dt:g}")
    total = _resolve_steps(params, T)
    plan = []
    cursor = 0
    while cursor < total:
        take = min(m, total - cursor)
        plan.append((cursor * dt, take))
        cursor += take
    return plan


def picard_march(params: ModelParams, config: PicardConfig,
                 T: float | None = None,
                 snapshot_stride: int | None = None):
    """Cover [0, T] window by window; returns (record, window traces).

    On NoContraction the current window is halved (in steps) and retried;
    WindowUnderflow is raised when a single step still fails.
    """
    if not params.validated:
        params = validate_params(params)
    mode = RhsMode.resolve(config.mode, params)
    grid = params.grid
    dt = grid.dt
    total = _resolve_steps(params, T)
    stride = params.snapshot_stride if snapshot_stride is None else snapshot_stride

    m_cur = int(round(config.window / dt))
    if m_cur < 1:
        raise errors.WindowUnderflow(
            f"window {config.window:g} is shorter than one step {dt:g}")

    state = initial_state(params)
    rec = Recorder(params, coupling="picard", variant=mode.variant)
    rec.meta["v_init_wnorm"] = weighted_sup_norm(state.v, grid)
    rec.meta["detect_threshold"] = params.detection_threshold()

    rhs0 = build_rhs(state, params.force.derivative(0.0), mode, params.offrate)
    rec.add_row(**_row_values(params, 0.0, state.rho, state.v, state.mu0,
                              g=rhs0.g, clamp=rhs0.clamped, floor=rhs0.floored,
                              dropped_cum=0.0, cum_abs_rate=0.0,
                              force_rate=params.force.derivative(0.0)))
    if stride > 0:
        rec.snapshot(0, 0.0, state.rho, state.v)

    traces = []
    cursor = 0
    dropped_cum = 0.0
    cum_abs_rate = 0.0
    while cursor < total:
        m = min(m_cur, total - cursor)
        try:
            sol, trace = picard_window(params, state, m * dt, config)
        except errors.NoContraction:
            if m_cur <= 1:
                raise errors.WindowUnderflow(
                    "fixed-point iteration fails to contract on a single step")
            m_cur = max(1, m_cur // 2)
            continue
        traces.append({"start": cursor * dt, "steps": m, "trace": trace})

        for i in range(1, m + 1):
            step_index = cursor + i
            dropped_cum += sol.dropped[i - 1]
            if dropped_cum > params.tail_budget:
                raise errors.TailBudgetExceeded(
                    f"cumulative dropped mass {dropped_cum:g} over budget")
            rate_mid = params.force.derivative(sol.times[i - 1] + 0.5 * dt)
            cum_abs_rate += abs(rate_mid) * dt
            rec.add_row(**_row_values(
                params, sol.times[i], sol.rho[i], sol.v[i], sol.mu0[i],
                g=sol.g[i - 1], clamp=sol.clamped[i - 1], floor=sol.floored[i - 1],
                dropped_cum=dropped_cum, cum_abs_rate=cum_abs_rate,
                force_rate=rate_mid))
            if stride > 0 and (step_index % stride == 0 or step_index == total):
                rec.snapshot(step_index, sol.times[i], sol.rho[i], sol.v[i])

        state = StateFields(grid=grid, t=sol.times[-1], rho=sol.rho[-1],
                            v=sol.v[-1].copy(), mu0=sol.mu0[-1])
        cursor += m

    return rec.finish(), traces
