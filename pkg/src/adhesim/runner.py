"""Batch execution: run scenarios to disk artifacts, refinement studies.

Artifacts per run directory: trajectory.csv (fixed schema), report.json and
report.txt, optional fields_####.csv snapshots, picard_trace.csv for
fixed-point runs. Outputs are deterministic: same config, same bytes.
"""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import errors
from .coupling import PicardConfig, march_coupled, picard_march
from .diagnostics import DiagnosticsReport, build_report
from .model import ModelParams, validate_params, weight
from .position import march_zroute
from .presets import Scenario
from .record import TrajectoryRecord

STUDY_SCHEMA = "adhesim-study-v1"


@dataclass
class RunResult:
    exit_code: int
    report: DiagnosticsReport
    trajectory: TrajectoryRecord
    traces: list | None
    out_dir: Path


def execute(scenario: Scenario):
    """Run the scenario's coupling; returns (trajectory, picard traces or None)."""
    params = validate_params(scenario.params)
    if scenario.coupling == "march":
        return march_coupled(params, mode=scenario.variant), None
    if scenario.coupling == "picard":
        cfg = PicardConfig(
            window=scenario.picard.get("window", params.eps / 4.0),
            tol=scenario.picard.get("tol", 1e-9),
            max_iter=scenario.picard.get("max_iter", 40),
            mode=scenario.variant)
        return picard_march(params, cfg)
    if scenario.coupling == "delay":
        return march_zroute(params), None
    raise errors.ConfigInvalid(f"unknown coupling {scenario.coupling!r}")


def _write_picard_trace(path: Path, traces) -> None:
    lines = ["# schema: adhesim-picard-trace-v1",
             "window,iteration,xnorm_diff,ratio"]
    for w, item in enumerate(traces):
        tr = item["trace"]
        for i, d in enumerate(tr.diffs):
            ratio = tr.ratios[i - 1] if 1 <= i <= len(tr.ratios) else math.nan
            lines.append(",".join((str(w), str(i),
                                   format(d, ".17g"), format(ratio, ".17g"))))
    path.write_text("\n".join(lines) + "\n")


def run_scenario(scenario: Scenario, out_dir) -> RunResult:
    """Run one scenario and write its artifacts.

    Exit code 0 when every diagnostic passed, 2 otherwise; solver errors
    propagate to the caller (the CLI maps them to exit code 3).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trajectory, traces = execute(scenario)
    report = build_report(
        trajectory.params, trajectory, coupling=scenario.coupling,
        variant=scenario.variant, scenario_name=scenario.name,
        picard_traces=traces, selection=scenario.diagnostics)

    trajectory.write_csv(out_dir / "trajectory.csv")
    if trajectory.snapshots:
        trajectory.write_field_files(out_dir)
    if traces is not None:
        _write_picard_trace(out_dir / "picard_trace.csv", traces)
    (out_dir / "report.json").write_text(report.to_json())
    (out_dir / "report.txt").write_text(report.to_text())

    return RunResult(exit_code=0 if report.all_passed else 2, report=report,
                     trajectory=trajectory, traces=traces, out_dir=out_dir)


def run_many(scenarios, out_root, max_workers: int = 4) -> list:
    """Fan independent scenarios out across worker threads."""
    out_root = Path(out_root)
    if len(scenarios) == 1:
        return [run_scenario(scenarios[0], out_root / scenarios[0].name)]
    with ThreadPoolExecutor(max_workers=min(max_workers, len(scenarios))) as pool:
        futures = [pool.submit(run_scenario, s, out_root / s.name)
                   for s in scenarios]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# refinement studies
# ---------------------------------------------------------------------------

def _with_dt(params: ModelParams, dt: float) -> ModelParams:
    grid = params.grid
    fresh = dataclasses.replace(
        params,
        grid=type(grid)(dt=dt, eps=grid.eps, a_max=grid.a_max,
                        horizon=grid.horizon),
        initial_moments=None)
    return validate_params(fresh)


def route_equivalence_gap(params: ModelParams, T: float | None = None,
                          samples: int = 50) -> float:
    """Max weighted-norm gap between the transport-route and delay-route v.

    Both routes run with the full right-hand side on the same grid; slices
    are compared at sampled snapshot times.
    """
    n_t = params.grid.n_t
    stride = max(1, n_t // samples)
    pde = march_coupled(params, mode="full", T=T, snapshot_stride=stride)
    dde = march_zroute(params, T=T, snapshot_stride=stride)
    omega = weight(params.grid.ages)
    gap = 0.0
    for sp, sz in zip(pde.snapshots, dde.snapshots):
        if abs(sp.t - sz.t) > 1e-12:
            raise errors.GridMismatch("route snapshots out of step")
        gap = max(gap, float(np.max(np.abs(sp.v - sz.v) * omega)))
    return gap


@dataclass
class StudyResult:
    scenario: str
    rows: list
    mu0_orders: list
    exact: bool

    def to_text(self) -> str:
        head = (f"{'level':>5} {'dt':>12} {'mu0_err':>12} {'order':>7} "
                f"{'fb_resid':>12} {'route_gap':>12}")
        lines = [f"refinement study: {self.scenario}", head]
        for r in self.rows:
            order = f"{r['mu0_order']:7.2f}" if r["mu0_order"] is not None \
                else "    ---"
            route = f"{r['route_gap']:12.4e}" if r["route_gap"] is not None \
                else "         ---"
            lines.append(f"{r['level']:>5} {r['dt']:12.4e} "
                         f"{r['mu0_err']:12.4e} {order} "
                         f"{r['fb_resid']:12.4e} {route}")
        if self.exact:
            lines.append("errors at round-off: transport is exact here")
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        lines = [f"# schema: {STUDY_SCHEMA}",
                 "level,dt,mu0_err,mu0_order,fb_resid,route_gap"]
        for r in self.rows:
            order = "" if r["mu0_order"] is None else format(r["mu0_order"], ".17g")
            route = "" if r["route_gap"] is None else format(r["route_gap"], ".17g")
            lines.append(",".join((str(r["level"]), format(r["dt"], ".17g"),
                                   format(r["mu0_err"], ".17g"), order,
                                   format(r["fb_resid"], ".17g"), route)))
        Path(path).write_text("\n".join(lines) + "\n")


def refinement_study(scenario: Scenario, levels: int,
                     with_route_gap: bool | None = None) -> StudyResult:
    """Rerun with dt halved per level; report observed orders.

    The mass error per level is measured against the finest level on the
    shared (nested) time nodes; force-balance residual and, for full-variant
    runs, the route-equivalence gap are reported per level. Expected order
    is >= 1; exact-transport cases are flagged instead of ordered.
    """
    if levels < 2:
        raise errors.InsufficientLevels("need at least two grid levels")
    base = validate_params(scenario.params)
    if with_route_gap is None:
        with_route_gap = scenario.variant == "full" and scenario.coupling != "picard"

    runs = []
    dts = []
    for lev in range(levels):
        dt = base.grid.dt / 2 ** lev
        params = _with_dt(base, dt)
        traj = march_coupled(params, mode=scenario.variant, snapshot_stride=0)
        gap = route_equivalence_gap(params) if with_route_gap else None
        runs.append((params, traj, gap))
        dts.append(dt)

    finest = runs[-1][1].mu0
    rows = []
    errs = []
    for lev, (params, traj, gap) in enumerate(runs):
        stride = 2 ** (levels - 1 - lev)
        n = traj.mu0.size
        aligned = finest[::stride][:n]
        m = min(aligned.size, n)
        err = float(np.max(np.abs(traj.mu0[:m] - aligned[:m]))) if lev < levels - 1 \
            else math.nan
        errs.append(err)
        rows.append({
            "level": lev, "dt": dts[lev], "mu0_err": err, "mu0_order": None,
            "fb_resid": float(np.max(traj.column("balance_residual"))),
            "route_gap": gap,
        })

    scale = max(1.0, float(np.max(np.abs(finest))))
    exact = all(not math.isfinite(e) or e < 1e-12 * scale for e in errs[:-1])
    orders = []
    if not exact:
        for lev in range(levels - 2):
            if errs[lev + 1] > 0:
                order = math.log2(errs[lev] / errs[lev + 1])
                rows[lev + 1]["mu0_order"] = order
                orders.append(order)

    return StudyResult(scenario=scenario.name, rows=rows, mu0_orders=orders,
                       exact=exact)
