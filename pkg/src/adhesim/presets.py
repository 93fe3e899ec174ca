"""Shipped scenarios covering both regimes plus the verification workhorses."""
from __future__ import annotations

from dataclasses import dataclass, field

from .functions import AgeProfile, TimeFunction
from .model import Grid, ModelParams, suggest_age_cap
from .offrate import OffRateSpec


@dataclass
class Scenario:
    """A named, runnable configuration."""

    name: str
    params: ModelParams
    coupling: str = "march"          # march | picard | delay
    variant: str = "full"            # full | double_cutoff | simple_cutoff
    picard: dict = field(default_factory=dict)
    diagnostics: object = "auto"


def _build(eps, offrate, birth, force, rho_init, v_init, dt, T, *,
           mu_floor=0.05, p_cap=10.0, stride=0, a_max=None,
           mu_detect=1e-4) -> ModelParams:
    if a_max is None:
        a_max = suggest_age_cap(rho_init, offrate, T, eps)
    grid = Grid(dt=dt, eps=eps, a_max=a_max, horizon=T)
    return ModelParams(eps=eps, offrate=offrate, birth=birth, force=force,
                       rho_init=rho_init, v_init=v_init, grid=grid,
                       mu_floor=mu_floor, p_cap=p_cap,
                       snapshot_stride=stride, mu_detect=mu_detect)


def constant_zeta_oracle(dt: float = 1e-3, T: float = 0.5,
                         eps: float = 0.1) -> Scenario:
    """Constant off-rate: the kinetics decouple and the scalar mass equation
    has a closed form, making this the reference oracle run."""
    params = _build(
        eps, OffRateSpec.constant(1.0), TimeFunction.constant(1.0),
        TimeFunction.constant(0.0), AgeProfile.exponential(0.2, 2.0),
        AgeProfile.zero(), dt, T)
    return Scenario(name="constant_zeta_oracle", params=params)


def global_preset(dt: float = 2e-3, T: float | None = None,
                  eps: float = 0.1) -> Scenario:
    """Attached regime: birth-rate floor above the off-rate ceiling, so the
    mass stays above an explicit floor for all time."""
    if T is None:
        T = 20.0 * eps
    birth = TimeFunction.clamped_sine(2.0, 0.5, 12.566370614359172)
    params = _build(
        eps, OffRateSpec.affine(1.0, 1.0), birth,
        TimeFunction.constant(0.0), AgeProfile.exponential(0.5, 1.0),
        AgeProfile.zero(), dt, T)
    return Scenario(name="global_preset", params=params)


def tearoff_preset(dt: float = 1e-4, T: float = 0.12,
                   eps: float = 0.1) -> Scenario:
    """Detachment regime: increasing force with a slope condition that forces
    the mass to zero no later than an explicit time t0 (about 0.0611 here)."""
    params = _build(
        eps, OffRateSpec.affine(1.0, 1.0), TimeFunction.constant(0.5),
        TimeFunction.linear(1.0, 1.0), AgeProfile.exponential(0.5, 1.0),
        AgeProfile.linear(2.0), dt, T, mu_floor=0.01, stride=20)
    return Scenario(name="tearoff_preset", params=params)


def picard_contraction_demo(dt: float = 5e-4, T: float = 0.3,
                            eps: float = 0.1) -> Scenario:
    """Genuinely coupled run for the windowed fixed-point driver; the cap is
    set above the certified tension ceiling so the clamp never fires."""
    params = _build(
        eps, OffRateSpec.affine(1.0, 1.0), TimeFunction.constant(1.0),
        TimeFunction.linear(0.5, 0.25), AgeProfile.exponential(0.4, 1.0),
        AgeProfile.linear(1.25), dt, T, mu_floor=0.1, p_cap=20.0)
    return Scenario(name="picard_contraction_demo", params=params,
                    coupling="picard", variant="double_cutoff",
                    picard={"window": eps / 10.0, "tol": 1e-9, "max_iter": 50})


def bell_exploratory(dt: float = 5e-4, T: float = 0.3,
                     eps: float = 0.1) -> Scenario:
    """Capped exponential off-rate under a gentle force ramp. Exploratory:
    the growth law sits at the edge of the Lipschitz-based certificates."""
    params = _build(
        eps, OffRateSpec.clipped_bell(0.8, 2.0), TimeFunction.constant(1.2),
        TimeFunction.linear(0.0, 0.1), AgeProfile.exponential(0.4, 1.0),
        AgeProfile.zero(), dt, T)
    return Scenario(name="bell_exploratory", params=params)


PRESETS = {
    "constant_zeta_oracle": constant_zeta_oracle,
    "global_preset": global_preset,
    "tearoff_preset": tearoff_preset,
    "picard_contraction_demo": picard_contraction_demo,
    "bell_exploratory": bell_exploratory,
}
