"""Trajectory storage: per-step scalar observables plus optional field snapshots.

The CSV schema is versioned and column order is fixed so that identical runs
produce byte-identical files.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TRAJECTORY_SCHEMA = "adhesim-trajectory-v1"
FIELDS_SCHEMA = "adhesim-fields-v1"

# Fixed column order. `g` is the source used over the step ending at t;
# tension columns are recomputed from the recorded slice itself.
COLUMNS = (
    "t",
    "mu0",
    "mu1",
    "mu2",
    "rho_boundary",
    "rho_min",
    "tension",
    "tension_abs",
    "rho_v_abs",
    "rho_v_min",
    "v_wnorm",
    "v_boundary",
    "g",
    "force",
    "force_rate",
    "force_rate_cum_abs",
    "dropped_cum",
    "clamp_flag",
    "floor_flag",
    "z",
    "balance_residual",
)


@dataclass
class Snapshot:
    step: int
    t: float
    rho: np.ndarray
    v: np.ndarray


@dataclass(eq=False)
class TrajectoryRecord:
    """Time series of scalar observables for one run."""

    params: object
    coupling: str
    variant: str
    data: dict
    snapshots: list
    tearoff_time: float | None
    terminated: str
    meta: dict

    @property
    def t(self) -> np.ndarray:
        return self.data["t"]

    @property
    def mu0(self) -> np.ndarray:
        return self.data["mu0"]

    def column(self, name: str) -> np.ndarray:
        return self.data[name]

    @property
    def n_rows(self) -> int:
        return self.data["t"].size

    def write_csv(self, path) -> None:
        path = Path(path)
        lines = [f"# schema: {TRAJECTORY_SCHEMA}", ",".join(COLUMNS)]
        cols = [self.data[c] for c in COLUMNS]
        for i in range(self.n_rows):
            lines.append(",".join(format(col[i], ".17g") for col in cols))
        path.write_text("\n".join(lines) + "\n")

    def write_field_files(self, out_dir) -> list:
        out_dir = Path(out_dir)
        paths = []
        ages = self.params.grid.ages
        for k, snap in enumerate(self.snapshots):
            p = out_dir / f"fields_{k:04d}.csv"
            lines = [f"# schema: {FIELDS_SCHEMA} t={format(snap.t, '.17g')}",
                     "a,rho,v"]
            for j in range(ages.size):
                lines.append(",".join(format(x, ".17g")
                                      for x in (ages[j], snap.rho[j], snap.v[j])))
            p.write_text("\n".join(lines) + "\n")
            paths.append(p)
        return paths


class Recorder:
    """Accumulates rows and snapshots while a run marches."""

    def __init__(self, params, coupling: str, variant: str):
        self.params = params
        self.coupling = coupling
        self.variant = variant
        self._rows = {name: [] for name in COLUMNS}
        self._snapshots: list[Snapshot] = []
        self.meta = {}

    def add_row(self, **values) -> None:
        for name in COLUMNS:
            self._rows[name].append(float(values.get(name, np.nan)))

    def snapshot(self, step: int, t: float, rho: np.ndarray, v: np.ndarray) -> None:
        self._snapshots.append(Snapshot(step, t, rho.copy(), v.copy()))

    def finish(self, tearoff_time: float | None = None,
               terminated: str = "completed") -> TrajectoryRecord:
        data = {name: np.asarray(col, dtype=float)
                for name, col in self._rows.items()}
        return TrajectoryRecord(
            params=self.params, coupling=self.coupling, variant=self.variant,
            data=data, snapshots=self._snapshots, tearoff_time=tearoff_time,
            terminated=terminated, meta=self.meta)
