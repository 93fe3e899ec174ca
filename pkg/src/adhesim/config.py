"""Scenario loading: preset names or JSON config files.

Config schema (version "1"), all keys at the top level unless noted:

    {
      "schema_version": "1",
      "name": "my_run",
      "eps": 0.1,
      "offrate":  {"family": "affine", "zeta0": 1.0, "slope": 1.0},
      "birth":    {"kind": "constant", "value": 1.0},
      "force":    {"kind": "linear", "intercept": 1.0, "slope": 1.0},
      "rho_init": {"kind": "exponential", "mass": 0.5, "rate": 1.0},
      "v_init":   {"kind": "linear", "slope": 2.0},
      "grid":     {"dt": 1e-4, "T": 0.12, "a_max": 30.0},   # a_max optional
      "mu_floor": 0.05, "p_cap": 10.0,                        # optional
      "coupling": "march", "variant": "full",                 # optional
      "snapshot_stride": 0,                                   # optional
      "picard": {"window": 0.01, "tol": 1e-9, "max_iter": 50},
      "diagnostics": "auto"                                   # or a name list
    }

Off-rate families: constant (zeta0), affine (zeta0, slope), saturating
(zeta0, slope, u_sat), clipped_bell (zeta0, u_cap). Time-function kinds:
constant (value), linear (intercept, slope), clamped_sine (offset, amplitude,
omega, floor), tabulated (times, values, value_range, derivative_range).
Age-profile kinds: zero, constant (value), linear (slope), exponential
(mass, rate), uniform (mass, width).
"""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from . import errors
from .functions import AgeProfile, TimeFunction
from .model import Grid, ModelParams, suggest_age_cap
from .offrate import OffRateSpec
from .presets import PRESETS, Scenario

SCHEMA_VERSION = "1"


def _offrate_from(cfg: dict) -> OffRateSpec:
    family = cfg.get("family")
    try:
        if family == "constant":
            return OffRateSpec.constant(cfg["zeta0"])
        if family == "affine":
            return OffRateSpec.affine(cfg["zeta0"], cfg["slope"])
        if family == "saturating":
            return OffRateSpec.saturating(cfg["zeta0"], cfg["slope"], cfg["u_sat"])
        if family == "clipped_bell":
            return OffRateSpec.clipped_bell(cfg["zeta0"], cfg["u_cap"])
    except KeyError as exc:
        raise errors.ConfigInvalid(f"offrate missing key {exc}") from exc
    raise errors.ConfigInvalid(f"unknown off-rate family {family!r}")


def _timefun_from(cfg: dict, what: str) -> TimeFunction:
    kind = cfg.get("kind")
    try:
        if kind == "constant":
            return TimeFunction.constant(cfg["value"])
        if kind == "linear":
            return TimeFunction.linear(cfg["intercept"], cfg["slope"])
        if kind == "clamped_sine":
            return TimeFunction.clamped_sine(cfg["offset"], cfg["amplitude"],
                                             cfg["omega"], cfg.get("floor"))
        if kind == "tabulated":
            return TimeFunction.tabulated(cfg["times"], cfg["values"],
                                          cfg["value_range"],
                                          cfg["derivative_range"])
    except KeyError as exc:
        raise errors.ConfigInvalid(f"{what} missing key {exc}") from exc
    raise errors.ConfigInvalid(f"unknown {what} kind {kind!r}")


def _profile_from(cfg: dict, what: str) -> AgeProfile:
    kind = cfg.get("kind")
    try:
        if kind == "zero":
            return AgeProfile.zero()
        if kind == "constant":
            return AgeProfile.constant(cfg["value"])
        if kind == "linear":
            return AgeProfile.linear(cfg["slope"])
        if kind == "exponential":
            return AgeProfile.exponential(cfg["mass"], cfg["rate"])
        if kind == "uniform":
            return AgeProfile.uniform(cfg["mass"], cfg["width"])
    except KeyError as exc:
        raise errors.ConfigInvalid(f"{what} missing key {exc}") from exc
    raise errors.ConfigInvalid(f"unknown {what} kind {kind!r}")


def scenario_from_dict(cfg: dict, fallback_name: str = "scenario") -> Scenario:
    version = cfg.get("schema_version")
    if version != SCHEMA_VERSION:
        raise errors.ConfigInvalid(
            f"schema_version must be {SCHEMA_VERSION!r}, got {version!r}")
    for key in ("eps", "offrate", "birth", "force", "rho_init", "v_init", "grid"):
        if key not in cfg:
            raise errors.ConfigInvalid(f"config missing required key {key!r}")

    eps = float(cfg["eps"])
    offrate = _offrate_from(cfg["offrate"])
    birth = _timefun_from(cfg["birth"], "birth")
    force = _timefun_from(cfg["force"], "force")
    rho_init = _profile_from(cfg["rho_init"], "rho_init")
    v_init = _profile_from(cfg["v_init"], "v_init")

    gcfg = cfg["grid"]
    try:
        dt = float(gcfg["dt"])
        horizon = float(gcfg["T"])
    except KeyError as exc:
        raise errors.ConfigInvalid(f"grid missing key {exc}") from exc
    a_max = gcfg.get("a_max")
    if a_max is None:
        a_max = suggest_age_cap(rho_init, offrate, horizon, eps)
    if "da" in gcfg:
        grid = Grid.with_age_step(dt, eps, float(gcfg["da"]), float(a_max),
                                  horizon)
    else:
        grid = Grid(dt=dt, eps=eps, a_max=float(a_max), horizon=horizon)

    params = ModelParams(
        eps=eps, offrate=offrate, birth=birth, force=force,
        rho_init=rho_init, v_init=v_init, grid=grid,
        mu_floor=float(cfg.get("mu_floor", 0.05)),
        p_cap=float(cfg.get("p_cap", 10.0)),
        snapshot_stride=int(cfg.get("snapshot_stride", 0)),
        mu_detect=float(cfg.get("mu_detect", 1e-4)),
        auto_shift_force=bool(cfg.get("auto_shift_force", False)))

    return Scenario(name=cfg.get("name", fallback_name), params=params,
                    coupling=cfg.get("coupling", "march"),
                    variant=cfg.get("variant", "full"),
                    picard=cfg.get("picard", {}),
                    diagnostics=cfg.get("diagnostics", "auto"))


def load_scenario(ref: str, dt: float | None = None, T: float | None = None,
                  coupling: str | None = None,
                  variant: str | None = None) -> Scenario:
    """Resolve a preset name or a JSON config path, applying CLI overrides."""
    if ref in PRESETS:
        kwargs = {}
        if dt is not None:
            kwargs["dt"] = dt
        if T is not None:
            kwargs["T"] = T
        scenario = PRESETS[ref](**kwargs)
    else:
        path = Path(ref)
        if not path.is_file():
            raise errors.ConfigNotFound(
                f"{ref!r} is neither a preset name nor a config file")
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise errors.ConfigInvalid(f"{path}: {exc}") from exc
        if dt is not None:
            cfg.setdefault("grid", {})["dt"] = dt
        if T is not None:
            cfg.setdefault("grid", {})["T"] = T
        scenario = scenario_from_dict(cfg, fallback_name=path.stem)

    if coupling is not None:
        scenario.coupling = coupling
    if variant is not None:
        scenario.variant = variant
    if scenario.coupling == "picard" and not scenario.picard:
        scenario.picard = {"window": scenario.params.eps / 4.0}
    if scenario.coupling == "picard" and scenario.variant == "full":
        scenario.variant = "double_cutoff"
    return scenario
