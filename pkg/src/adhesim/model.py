"""Core types: aligned characteristic grid, validated parameters, weighted norm.

The grid enforces da = dt/eps exactly, so the transport operator
eps*d/dt + d/da maps nodes to nodes and the only discretisation errors are
quadrature and the decay integration along characteristic segments.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import errors
from .functions import AgeProfile, TimeFunction
from .offrate import OffRateSpec

_ALIGN_RTOL = 1e-9


def weight(a):
    """Age weight omega(a) = 1/(1+a); strictly decreasing, in (0, 1]."""
    arr = np.asarray(a, dtype=float)
    if np.any(arr < 0):
        raise errors.NegativeAge(f"age must be nonnegative, got {arr.min()}")
    out = 1.0 / (1.0 + arr)
    if out.ndim == 0:
        return float(out)
    return out


def weighted_sup_norm(field, grid) -> float:
    """max_j |field[j]| * omega(a_j): one time slice of the weighted sup norm.

    The norm over a trajectory is the running max of this over slices.
    """
    field = np.asarray(field, dtype=float)
    if field.size == 0:
        return 0.0
    ages = grid.ages[: field.size]
    return float(np.max(np.abs(field) * weight(ages)))


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform age/time grid with the characteristic alignment da = dt/eps."""

    dt: float
    eps: float
    a_max: float
    horizon: float

    def __post_init__(self):
        if self.dt <= 0 or self.eps <= 0:
            raise errors.MisalignedGrid("dt and eps must be positive")
        if self.a_max <= 0 or self.horizon <= 0:
            raise errors.MisalignedGrid("a_max and horizon must be positive")
        da = self.dt / self.eps
        n_a = int(math.ceil(self.a_max / da - 1e-9))
        n_t = int(math.ceil(self.horizon / self.dt - 1e-9))
        object.__setattr__(self, "da", da)
        object.__setattr__(self, "n_a", n_a)
        object.__setattr__(self, "n_t", n_t)
        object.__setattr__(self, "ages", np.arange(n_a + 1) * da)
        w = np.full(n_a + 1, da)
        w[0] = w[-1] = 0.5 * da
        object.__setattr__(self, "quad_w", w)

    @classmethod
    def with_age_step(cls, dt: float, eps: float, da: float,
                      a_max: float, horizon: float) -> "Grid":
        """Build a grid from an explicit age step, checking alignment."""
        if abs(da * eps - dt) > _ALIGN_RTOL * max(dt, 1e-300):
            raise errors.MisalignedGrid(
                f"da*eps = {da * eps!r} must equal dt = {dt!r}")
        return cls(dt=dt, eps=eps, a_max=a_max, horizon=horizon)

    @property
    def t_final(self) -> float:
        return self.n_t * self.dt

    def times(self) -> np.ndarray:
        return np.arange(self.n_t + 1) * self.dt

    def quadrature(self, values) -> float:
        """Composite trapezoid over the age nodes."""
        return float(np.asarray(values, dtype=float) @ self.quad_w)


def suggest_age_cap(rho_init: AgeProfile, offrate: OffRateSpec,
                    horizon: float, eps: float, tail_tol: float = 1e-12) -> float:
    """Age cap keeping both the transported support and the decay tail below tol.

    Along characteristics the density decays at least like exp(-zeta_min * a),
    so the cap is where that factor (and the initial profile) drop below tol,
    shifted by the horizon worth of transport.
    """
    decay_reach = math.log(1.0 / tail_tol) / offrate.zeta_min
    support = rho_init.support_bound(tail_tol)
    if not math.isfinite(support):
        raise errors.AgeGridTooShort(
            "initial density has unbounded support; use a decaying profile")
    return math.ceil(max(support, decay_reach) + horizon / eps)


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Validated problem data for one simulation.

    `initial_moments` is filled by validate_params (age moments 0..3 of the
    initial density by grid quadrature).
    """

    eps: float
    offrate: OffRateSpec
    birth: TimeFunction
    force: TimeFunction
    rho_init: AgeProfile
    v_init: AgeProfile
    grid: Grid
    mu_floor: float = 0.05
    p_cap: float = 10.0
    tail_budget: float = 1e-9
    tail_tol: float = 1e-12
    mu_detect: float = 1e-4
    snapshot_stride: int = 0
    auto_shift_force: bool = False
    initial_moments: tuple | None = None

    @property
    def validated(self) -> bool:
        return self.initial_moments is not None

    @property
    def mu0_init(self) -> float:
        if self.initial_moments is None:
            raise errors.SimulationError("params not validated yet")
        return self.initial_moments[0]

    def birth_bounds(self) -> tuple[float, float]:
        return self.birth.value_range(0.0, self.grid.t_final)

    def force_bounds(self) -> tuple[float, float]:
        return self.force.value_range(0.0, self.grid.t_final)

    def force_rate_sup(self) -> float:
        return self.force.derivative_sup(0.0, self.grid.t_final)

    def detection_threshold(self) -> float:
        """Mass level below which the run is declared torn off.

        Near detachment the remaining mass concentrates in a boundary layer a
        few age cells wide, so the discrete mass stalls at the da scale; the
        threshold sits one order above that stall (and above the configured
        floor) and still vanishes under refinement.
        """
        return max(self.mu_detect, 10.0 * self.grid.da)


def validate_params(params: ModelParams) -> ModelParams:
    """Check all admissibility conditions and cache the initial moments.

    Returns an equivalent params object (idempotent on already-valid input).
    Raises the specific error for the first violated condition.
    """
    grid = params.grid
    if abs(params.eps - grid.eps) > _ALIGN_RTOL * params.eps:
        raise errors.MisalignedGrid("params.eps disagrees with grid.eps")

    b_lo, b_hi = params.birth_bounds()
    if b_lo <= 0.0 or b_lo > b_hi:
        raise errors.BadBirthRateBounds(
            f"need 0 < beta_min <= beta_max, got [{b_lo}, {b_hi}]")

    rho0 = params.rho_init(grid.ages)
    if np.any(rho0 < 0.0):
        raise errors.NegativeInitialDensity("initial density has negative values")
    mass = grid.quadrature(rho0)
    if not (0.0 < mass < 1.0):
        raise errors.InitialMassOutOfRange(
            f"initial mass must lie in (0, 1), got {mass}")

    if params.mu_floor <= 0.0:
        raise errors.BadBirthRateBounds("mass cut-off mu_floor must be positive")
    if params.p_cap <= 0.0:
        raise errors.BadBirthRateBounds("tension cut-off p_cap must be positive")

    support = params.rho_init.support_bound(params.tail_tol)
    needed = support + grid.t_final / params.eps
    if grid.n_a * grid.da < needed - 1e-9:
        raise errors.AgeGridTooShort(
            f"a_max {grid.n_a * grid.da:g} < initial support {support:g} "
            f"plus horizon transport {grid.t_final / params.eps:g}")

    moments = tuple(
        grid.quadrature(grid.ages ** p * rho0) for p in range(4))

    force = params.force
    v0 = params.v_init(grid.ages)
    balance0 = grid.quadrature(rho0 * v0)
    gap = force.value(0.0) - balance0
    # tolerance tracks the trapezoid error of the balance quadrature
    compat_tol = max(1e-8, grid.da ** 2) * max(1.0, abs(balance0))
    if abs(gap) > compat_tol:
        if params.auto_shift_force:
            force = force.shifted(-gap)
        else:
            warnings.warn(
                f"force(0) = {force.value(0.0):g} does not equal the initial "
                f"elastic balance {balance0:g}; the force-balance residual "
                "will carry this offset", stacklevel=2)

    return replace(params, force=force, initial_moments=moments)


@dataclass(eq=False)
class StateFields:
    """Current density and elongation samples; owned by a single run loop."""

    grid: Grid
    t: float
    rho: np.ndarray
    v: np.ndarray
    mu0: float
    torn_off: bool = False


def initial_state(params: ModelParams) -> StateFields:
    grid = params.grid
    rho = params.rho_init(grid.ages).astype(float)
    v = params.v_init(grid.ages).astype(float)
    return StateFields(grid=grid, t=0.0, rho=rho, v=v, mu0=grid.quadrature(rho))
