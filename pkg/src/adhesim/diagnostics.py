"""Runtime diagnostics: every closed-form bound the analysis provides, checked
against simulated trajectories, plus the regime classifier (attached vs torn
off vs inconclusive).

Margins are reported raw (bound minus measured, so nonnegative is good) and
each check carries the absolute tolerance it was judged against; the default
slack is 5*dt times the scale of the bound, matching the first-order accuracy
of the marched quantities.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .elongation import xnorm_bound_check
from .kinetics import advance_density, moment_bound
from .model import Grid, ModelParams, validate_params, weighted_sup_norm
from .offrate import OffRateSpec

REPORT_SCHEMA = "adhesim-report-v1"
_SAFETY = 0.99  # strict-inequality constants are reported at this fraction


def _slack(dt: float, scale: float) -> float:
    return 5.0 * dt * max(1.0, abs(scale))


# ---------------------------------------------------------------------------
# density-difference functionals and their envelopes
# ---------------------------------------------------------------------------

def h_functional(rho_hat: np.ndarray, grid: Grid, k: int) -> float:
    """Weighted L1-type functional of a density difference.

    k = 0: integral of |rho_hat| plus |integral of rho_hat|.
    k >= 1: integral of (1+a)^k |rho_hat|.
    """
    if k < 0:
        raise ValueError("functional order must be nonnegative")
    if k == 0:
        return grid.quadrature(np.abs(rho_hat)) + abs(grid.quadrature(rho_hat))
    return grid.quadrature((1.0 + grid.ages) ** k * np.abs(rho_hat))


def stability_envelope_constants(params: ModelParams) -> dict:
    """Constants c0, h1, h2 in front of the decaying stability envelopes.

    c0 = (2/zmin) * L * mu1_max; the higher constants follow the recursion
    h_k = (k*h_{k-1} + beta_max*c0 + L*C_{k+1}) / zmin with C_m the binomial
    combination of moment ceilings bounding the (1+a)^m integral.
    """
    zmin = params.offrate.zeta_min
    lip = params.offrate.lipschitz
    _, b_hi = params.birth_bounds()
    mu_max = [min(1.0, params.initial_moments[0]
                  + b_hi / (params.birth_bounds()[0] + zmin))]
    for p in (1, 2, 3):
        mu_max.append(moment_bound(params, p))

    def weighted_cap(m: int) -> float:
        return sum(math.comb(m, j) * mu_max[j] for j in range(m + 1))

    c0 = 2.0 / zmin * lip * mu_max[1]
    h1 = (1.0 * c0 + b_hi * c0 + lip * weighted_cap(2)) / zmin
    h2 = (2.0 * h1 + b_hi * c0 + lip * weighted_cap(3)) / zmin
    return {"c0": c0, "h1": h1, "h2": h2}


@dataclass
class StabilityResult:
    margins: dict
    constants: dict
    w_gap_norm: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(m >= -self.tolerance for m in self.margins.values())


def stability_pair_check(params: ModelParams, w1, w2,
                         T: float | None = None) -> StabilityResult:
    """Continuous dependence of the density on the off-rate field.

    Marches the kinetics twice with frozen elongation fields w1(t, a) and
    w2(t, a), sharing birth rate and initial data, and checks that the
    difference functionals H_k stay below their decaying envelopes
    h_k * (1 - exp(-zmin t/eps)) * ||w2 - w1||_{X_t} for k in {0, 1, 2}.
    Returns the worst margin per k.
    """
    if not params.validated:
        params = validate_params(params)
    grid = params.grid
    dt = grid.dt
    n_steps = grid.n_t if T is None else int(math.ceil(T / dt - 1e-9))
    zmin = params.offrate.zeta_min
    eps = params.eps

    consts = stability_envelope_constants(params)
    env_coef = {0: consts["c0"], 1: consts["h1"], 2: consts["h2"]}

    rho_a = params.rho_init(grid.ages).astype(float)
    rho_b = rho_a.copy()
    if rho_a.shape != np.asarray(w1(0.0, grid.ages)).shape:
        raise errors.GridMismatch("elongation field does not match the grid")

    w_gap = weighted_sup_norm(
        np.asarray(w2(0.0, grid.ages)) - np.asarray(w1(0.0, grid.ages)), grid)
    h_series = {k: [0.0] for k in env_coef}
    env_series = {k: [0.0] for k in env_coef}

    for n in range(n_steps):
        t1 = (n + 1) * dt
        beta_next = params.birth.value(t1)
        za = params.offrate(np.asarray(w1(n * dt, grid.ages), dtype=float))
        zb = params.offrate(np.asarray(w2(n * dt, grid.ages), dtype=float))
        rho_a = advance_density(rho_a, za, beta_next, grid).rho
        rho_b = advance_density(rho_b, zb, beta_next, grid).rho

        gap_slice = np.asarray(w2(t1, grid.ages)) - np.asarray(w1(t1, grid.ages))
        w_gap = max(w_gap, weighted_sup_norm(gap_slice, grid))
        decay = 1.0 - math.exp(-zmin * t1 / eps)
        rho_hat = rho_b - rho_a
        for k in env_coef:
            h_series[k].append(h_functional(rho_hat, grid, k))
            env_series[k].append(env_coef[k] * decay * w_gap)

    margins = {}
    for k in env_coef:
        h_arr = np.asarray(h_series[k])
        env_arr = np.asarray(env_series[k])
        margins[k] = float(np.min(env_arr - h_arr))
    tol = _slack(dt, max(env_series[k][-1] for k in env_coef))
    return StabilityResult(margins=margins, constants=consts,
                           w_gap_norm=w_gap, tolerance=tol)


# ---------------------------------------------------------------------------
# a-priori estimates
# ---------------------------------------------------------------------------

def apriori_estimate_check(trajectory) -> float:
    """Stretch-budget margin: weighted stretch mass vs its transported budget.

    The bound says integral rho|v| at time t never exceeds its initial value
    plus the accumulated |df/dt|. Returns the minimum over recorded times of
    bound + slack - measured; nonnegative passes.
    """
    dt = trajectory.params.grid.dt
    measured = trajectory.column("rho_v_abs")
    budget = measured[0] + trajectory.column("force_rate_cum_abs")
    slack = _slack(dt, float(np.max(budget)))
    return float(np.min(budget + slack - measured))


def riccati_bound(A: float, B: float, C: float, y0: float) -> float:
    """Ceiling max(y0, y+) for eps*y' <= -A y^2 + B y + C with y(0) = y0.

    y+ is the larger root of the steady-state quadratic; when the
    discriminant is negative the right-hand side is always negative and the
    initial value is the ceiling.
    """
    if A <= 0.0:
        raise errors.BadCoefficients("quadratic coefficient must be positive")
    disc = B * B + 4.0 * A * C
    if disc < 0.0:
        return y0
    y_plus = (B + math.sqrt(disc)) / (2.0 * A)
    return max(y0, y_plus)


def apriori_stretch_budget(params: ModelParams, T: float) -> float:
    """Closed-form ceiling for integral rho|v|: initial value plus total |df/dt|."""
    grid = params.grid
    rho0 = params.rho_init(grid.ages)
    v0 = params.v_init(grid.ages)
    return grid.quadrature(rho0 * np.abs(v0)) \
        + params.force.abs_derivative_integral(0.0, T)


def tension_constants(params: ModelParams, T: float | None = None) -> dict:
    """Constants of the tension comparison: gamma1, h, gamma2 and the ceiling.

    1/gamma1 is the stretch budget; h collects the forcing contribution; the
    ceiling gamma2/mu_floor dominates the absolute tension integral p(t) for
    the stabilized dynamics.
    """
    if T is None:
        T = params.grid.t_final
    grid = params.grid
    rho0 = params.rho_init(grid.ages)
    v0 = params.v_init(grid.ages)
    p_init = grid.quadrature(params.offrate(v0) * np.abs(v0) * rho0)
    inv_gamma1 = apriori_stretch_budget(params, T)
    rate_sup = params.force.derivative_sup(0.0, T)
    lip = params.offrate.lipschitz
    z0 = params.offrate.zeta_at_zero
    if inv_gamma1 > 0.0:
        gamma1 = 1.0 / inv_gamma1
        h = params.eps * rate_sup * (2.0 * lip * inv_gamma1 + z0)
        gamma2 = riccati_bound(gamma1, 1.0, h, p_init)
    else:
        gamma1 = math.inf
        h = 0.0
        gamma2 = p_init
    return {"p_init": p_init, "inv_gamma1": inv_gamma1, "gamma1": gamma1,
            "h": h, "gamma2": gamma2,
            "ceiling": gamma2 / params.mu_floor}


@dataclass
class TensionResult:
    margin: float
    gamma2: float
    ceiling: float
    clamp_count: int
    budget_exceeded: bool
    tolerance: float


def tension_bound_check(trajectory, params: ModelParams) -> TensionResult:
    """Check p(t) <= gamma2/mu_floor and audit the clamp flags.

    Also flags runs whose measured stretch mass exceeds the budget 1/gamma1
    that gamma2 was derived from (which would void the ceiling).
    """
    consts = tension_constants(params)
    dt = params.grid.dt
    p_series = trajectory.column("tension_abs")
    margin = float(np.min(consts["ceiling"] - p_series))
    clamp_count = int(np.nansum(trajectory.column("clamp_flag")))
    measured_budget = float(np.max(trajectory.column("rho_v_abs")))
    exceeded = measured_budget > consts["inv_gamma1"] + _slack(dt, consts["inv_gamma1"])
    return TensionResult(margin=margin, gamma2=consts["gamma2"],
                         ceiling=consts["ceiling"], clamp_count=clamp_count,
                         budget_exceeded=exceeded,
                         tolerance=_slack(dt, consts["ceiling"]))


# ---------------------------------------------------------------------------
# mass bounds
# ---------------------------------------------------------------------------

def admissible_gamma0_ceiling(params: ModelParams) -> float:
    zmin = params.offrate.zeta_min
    _, b_hi = params.birth_bounds()
    return min(1.0 - params.mu0_init, zmin / (zmin + b_hi))


def default_gamma0(params: ModelParams) -> float:
    return 0.5 * admissible_gamma0_ceiling(params)


def mass_upper_gap_check(trajectory, gamma0: float) -> float:
    """Margin of mu0(t) < 1 - gamma0 over the run."""
    params = trajectory.params
    ceiling = admissible_gamma0_ceiling(params)
    if not (0.0 < gamma0 < ceiling):
        raise errors.BadGamma0(
            f"gamma0 = {gamma0} not in (0, {ceiling})")
    return float(np.min((1.0 - gamma0) - trajectory.mu0))


def normalized_offrate_mean(params: ModelParams) -> float:
    """zeta_bar: off-rate at zero plus its mean against the normalized data."""
    grid = params.grid
    rho0 = params.rho_init(grid.ages)
    v0 = params.v_init(grid.ages)
    return params.offrate.zeta_at_zero \
        + grid.quadrature(params.offrate(v0) * rho0) / params.mu0_init


@dataclass
class MassFloorResult:
    mu_min: float
    lambda_bar: float
    gamma0: float
    margin: float | None
    tolerance: float


def mass_lower_bound(params: ModelParams, g_norm: float, T: float,
                     gamma0: float | None = None,
                     trajectory=None) -> MassFloorResult:
    """Mass floor for runs driven by a bounded source of known sup norm.

    lambda_bar = zeta_bar + L * ||g|| * min(2/(gamma0*beta_min), T/eps) caps
    the normalized off-rate mean, and the floor is (just under)
    min(mu0(0), beta_min/(beta_min + lambda_bar)). If a trajectory is given
    the margin of mu0 >= mu_min is evaluated on it.
    """
    if gamma0 is None:
        gamma0 = default_gamma0(params)
    ceiling = admissible_gamma0_ceiling(params)
    if not (0.0 < gamma0 < ceiling):
        raise errors.BadGamma0(f"gamma0 = {gamma0} not in (0, {ceiling})")
    b_lo, _ = params.birth_bounds()
    lam = normalized_offrate_mean(params) + params.offrate.lipschitz * g_norm \
        * min(2.0 / (gamma0 * b_lo), T / params.eps)
    mu_min = _SAFETY * min(params.mu0_init, b_lo / (b_lo + lam))
    margin = None
    if trajectory is not None:
        margin = float(np.min(trajectory.mu0 - mu_min))
    return MassFloorResult(mu_min=mu_min, lambda_bar=lam, gamma0=gamma0,
                           margin=margin, tolerance=5.0 * params.grid.dt)


def local_existence_window(params: ModelParams,
                           mu_floor: float | None = None) -> dict:
    """Guaranteed time during which the mass stays above the cut-off level.

    T = (eps/gamma3) * (beta_min*mu_floor - (beta_min + zeta_bar)*mu_floor^2)
    with gamma3 = L * (eps*sup|df/dt| + gamma2). Infinite when gamma3 = 0
    (constant off-rate: no feedback). Raises NonPositiveWindow when the
    formula gives T <= 0.
    """
    mu_floor = params.mu_floor if mu_floor is None else mu_floor
    if not (0.0 < mu_floor < 1.0):
        raise errors.HypothesisViolated("mu_floor must lie in (0, 1)")
    if mu_floor >= params.mu0_init:
        raise errors.HypothesisViolated("mu_floor must be below the initial mass")
    consts = tension_constants(params)
    gamma3 = params.offrate.lipschitz * (
        params.eps * params.force.derivative_sup(0.0, params.grid.t_final)
        + consts["gamma2"])
    b_lo, _ = params.birth_bounds()
    zbar = normalized_offrate_mean(params)
    numer = b_lo * mu_floor - (b_lo + zbar) * mu_floor ** 2
    if numer <= 0.0:
        raise errors.NonPositiveWindow(
            f"cut-off level {mu_floor} too high: window formula is nonpositive")
    window = math.inf if gamma3 == 0.0 else params.eps / gamma3 * numer
    return {"window": window, "gamma3": gamma3, "zeta_bar": zbar,
            "gamma2": consts["gamma2"]}


# ---------------------------------------------------------------------------
# regime classification
# ---------------------------------------------------------------------------

@dataclass
class RegimeResult:
    classification: str
    zeta_breve: float
    mu_min: float | None
    margin: float | None
    tolerance: float


def global_regime_check(params: ModelParams, trajectory=None) -> RegimeResult:
    """Attached-regime test: birth rate floor above the off-rate ceiling.

    zeta_breve = zeta(0) + L*(integral rho_I|v_I| + total |df/dt|) bounds the
    mean off-rate along the run; when beta_min exceeds it the mass stays above
    (just under) min(1 - zeta_breve/beta_min, mu0(0)) for all time.
    """
    T = params.grid.t_final
    zeta_breve = params.offrate.zeta_at_zero \
        + params.offrate.lipschitz * apriori_stretch_budget(params, T)
    b_lo, _ = params.birth_bounds()
    if b_lo <= zeta_breve:
        return RegimeResult("inconclusive", zeta_breve, None, None,
                            tolerance=5.0 * params.grid.dt)
    mu_min = _SAFETY * min(1.0 - zeta_breve / b_lo, params.mu0_init)
    margin = None
    if trajectory is not None:
        margin = float(np.min(trajectory.mu0 - mu_min))
    return RegimeResult("global", zeta_breve, mu_min, margin,
                        tolerance=5.0 * params.grid.dt)


@dataclass
class TearoffResult:
    t0: float
    gamma6: float
    detected: float | None
    margins: dict
    tolerances: dict
    notes: list

    @property
    def passed(self) -> bool:
        return all(self.margins[k] >= -self.tolerances.get(k, 0.0)
                   for k in self.margins)


def tearoff_certificate(params: ModelParams, trajectory) -> TearoffResult:
    """Certify finite-time detachment and verify its quantitative content.

    Preconditions (HypothesisViolated names the failing one): nonnegative
    initial elongation, strictly increasing force, and the slope condition
    beta_max < zeta_c'(0) * f_min. Then the detachment time is at most

        t0 = eps/(beta_min + zc0) * log(1 + mu0(0)(beta_min + zc0)/(s*f_min - beta_max))

    and the run must show: nonnegative rho*v; mass below the secant
    (1 - t/t0)*mu0(0); detection time t* <= t0*(1+5%) + 2dt; and the
    logarithmic elongation floor with gamma6 = t0*inf(df/dt)/mu0(0).
    """
    grid = params.grid
    dt = grid.dt
    eps = params.eps
    T = grid.t_final

    v0 = params.v_init(grid.ages)
    if np.any(v0 < 0.0):
        raise errors.HypothesisViolated("initial elongation must be nonnegative")
    d_lo, _ = params.force.derivative_range(0.0, T)
    if d_lo <= 0.0:
        raise errors.HypothesisViolated("force must be strictly increasing")
    slope = params.offrate.convex_slope
    zc0 = params.offrate.convex_intercept
    f_lo, _ = params.force_bounds()
    b_lo, b_hi = params.birth_bounds()
    drive = slope * f_lo - b_hi
    if drive <= 0.0:
        raise errors.HypothesisViolated(
            f"slope condition fails: beta_max = {b_hi} >= "
            f"zeta_c'(0)*f_min = {slope * f_lo}")

    k = b_lo + zc0
    mu_init = params.mu0_init
    t0 = eps / k * math.log(1.0 + mu_init * k / drive)
    gamma6 = t0 * d_lo / mu_init

    margins = {}
    tolerances = {}
    notes = []

    margins["sign"] = float(np.min(trajectory.column("rho_v_min")))
    tolerances["sign"] = 1e-12

    tt = trajectory.t
    secant = (1.0 - tt / t0) * mu_init
    margins["decay"] = float(np.min(secant + 5.0 * dt - trajectory.mu0))
    tolerances["decay"] = 0.0

    detected = trajectory.tearoff_time
    if detected is None:
        margins["time"] = -math.inf
        notes.append("no detachment recorded despite a valid certificate")
    else:
        margins["time"] = t0 * 1.05 + 2.0 * dt - detected
    tolerances["time"] = 0.0

    profile_margin = math.inf
    slices = 0
    for snap in trajectory.snapshots:
        t = snap.t
        if t <= 0.0 or t0 - t <= 1e-12:
            continue
        if detected is not None and t >= detected:
            continue
        bound = eps * gamma6 * np.log1p(np.minimum(t, eps * grid.ages) / (t0 - t))
        slack = 5.0 * dt * np.maximum(1.0, bound)
        profile_margin = min(profile_margin,
                             float(np.min(snap.v + slack - bound)))
        slices += 1
    if slices == 0:
        notes.append("profile floor not evaluated (no usable snapshots)")
    else:
        margins["profile"] = profile_margin
        tolerances["profile"] = 0.0

    return TearoffResult(t0=t0, gamma6=gamma6, detected=detected,
                         margins=margins, tolerances=tolerances, notes=notes)


def convexity_minorant_check(offrate: OffRateSpec, rho: np.ndarray,
                             v: np.ndarray, grid: Grid) -> float:
    """Slice margin of the convexity inequality for the minorant zeta_c.

    slope(0)*integral(v rho) <= integral(zeta_c(v) rho) - zeta_c(0)*mu0.
    Meaningful on slices with v >= 0; affine laws saturate it to equality.
    """
    lhs = offrate.convex_slope * grid.quadrature(v * rho)
    rhs = grid.quadrature(offrate.convex_minorant(v) * rho) \
        - offrate.convex_intercept * grid.quadrature(rho)
    return rhs - lhs


def picard_contraction_margin(traces) -> float:
    """1 - max recorded ratio over all windows (vacuously 1.0 if none)."""
    worst = 0.0
    seen = False
    for item in traces:
        for r in item["trace"].ratios:
            worst = max(worst, r)
            seen = True
    return 1.0 - worst if seen else 1.0


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    check: str
    anchor: str
    passed: bool
    margin: float
    tolerance: float
    note: str = ""


@dataclass
class DiagnosticsReport:
    scenario: str
    coupling: str
    variant: str
    regime: str
    terminated: str
    tearoff_time: float | None
    constants: dict
    checks: list
    notes: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json_dict(self) -> dict:
        def clean(x):
            if isinstance(x, float) and not math.isfinite(x):
                return None
            return x
        return {
            "schema_version": REPORT_SCHEMA,
            "scenario": self.scenario,
            "coupling": self.coupling,
            "variant": self.variant,
            "regime": self.regime,
            "terminated": self.terminated,
            "tearoff_time": clean(self.tearoff_time),
            "constants": {k: clean(v) for k, v in sorted(self.constants.items())},
            "checks": [
                {"check": c.check, "anchor": c.anchor, "pass": c.passed,
                 "margin": clean(c.margin), "tolerance": clean(c.tolerance),
                 "note": c.note}
                for c in self.checks
            ],
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"scenario: {self.scenario}  [{self.coupling}/{self.variant}]",
                 f"regime: {self.regime}   terminated: {self.terminated}"]
        if self.tearoff_time is not None:
            lines.append(f"tear-off detected at t* = {self.tearoff_time:.6g}")
        lines.append("checks:")
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            line = (f"  [{status}] {c.check:28s} anchor={c.anchor:24s} "
                    f"margin={c.margin:+.3e} tol={c.tolerance:.1e}")
            if c.note:
                line += f"  ({c.note})"
            lines.append(line)
        if self.constants:
            lines.append("constants:")
            for k in sorted(self.constants):
                v = self.constants[k]
                lines.append(f"  {k} = {v:.6g}" if isinstance(v, float)
                             else f"  {k} = {v}")
        for n in self.notes:
            lines.append(f"note: {n}")
        return "\n".join(lines) + "\n"


def build_report(params: ModelParams, trajectory, *, coupling: str,
                 variant: str, scenario_name: str = "",
                 picard_traces=None, selection="auto") -> DiagnosticsReport:
    """Evaluate the applicable checks for one finished trajectory.

    selection="auto" runs everything whose preconditions hold; otherwise pass
    an iterable of check names to restrict.
    """
    grid = params.grid
    dt = grid.dt
    checks: list[CheckResult] = []
    constants: dict = {}
    notes: list[str] = []
    wanted = None if selection == "auto" else set(selection)

    def want(name: str) -> bool:
        return wanted is None or name in wanted

    def add(name, anchor, margin, tol, note=""):
        checks.append(CheckResult(check=name, anchor=anchor,
                                  passed=bool(margin >= -tol),
                                  margin=float(margin), tolerance=float(tol),
                                  note=note))

    constants["zeta_min"] = params.offrate.zeta_min
    constants["zeta_lipschitz"] = params.offrate.lipschitz
    constants["mu0_init"] = params.mu0_init
    if params.offrate.exploratory:
        notes.append("exploratory off-rate law: growth sits at the edge of "
                     "the Lipschitz-based certificates")

    if want("density-nonnegative"):
        add("density-nonnegative", "nonneg-density",
            float(np.min(trajectory.column("rho_min"))), 1e-13)

    if want("mass-below-one"):
        add("mass-below-one", "mass-ceiling",
            1.0 - float(np.max(trajectory.mu0)), 0.0)

    for p in (1, 2):
        name = f"moment-ceiling-{p}"
        if want(name):
            bound = moment_bound(params, p)
            constants[f"moment_bound_{p}"] = bound
            measured = float(np.max(trajectory.column(f"mu{p}")))
            add(name, "moment-ceiling", bound - measured, _slack(dt, bound))

    if want("boundary-elongation-zero"):
        vb = trajectory.column("v_boundary")
        worst = float(np.max(np.abs(vb[1:]))) if vb.size > 1 else 0.0
        add("boundary-elongation-zero", "zero-inflow-elongation",
            -worst, 1e-14)

    if want("weighted-transport-ceiling"):
        g = trajectory.column("g")
        finite = g[np.isfinite(g)]
        if finite.size:
            g_norm = float(np.max(np.abs(finite)))
            constants["g_sup"] = g_norm
            add("weighted-transport-ceiling", "weighted-transport-estimate",
                xnorm_bound_check(trajectory), 1e-12 * max(1.0, g_norm))

    if want("weighted-stretch-budget"):
        add("weighted-stretch-budget", "stretch-budget",
            apriori_estimate_check(trajectory), 0.0,
            note="slack folded into the margin")

    if variant == "double_cutoff" and want("cutoff-rhs-ceiling"):
        g = trajectory.column("g")
        finite = np.abs(g[np.isfinite(g)])
        ceiling = (params.eps * params.force_rate_sup() + params.p_cap) \
            / params.mu_floor
        constants["g_ceiling"] = ceiling
        add("cutoff-rhs-ceiling", "cutoff-rhs-bound",
            ceiling - (float(np.max(finite)) if finite.size else 0.0), 1e-12)

    if variant in ("double_cutoff", "simple_cutoff"):
        if want("tension-riccati-ceiling"):
            result = tension_bound_check(trajectory, params)
            constants["gamma2"] = result.gamma2
            constants["tension_ceiling"] = result.ceiling
            note = "stretch budget exceeded" if result.budget_exceeded else ""
            add("tension-riccati-ceiling", "tension-riccati",
                result.margin, result.tolerance, note)
            if want("clamp-audit"):
                if params.p_cap > result.ceiling:
                    add("clamp-audit", "clamp-inactivity",
                        0.5 - result.clamp_count, 0.0,
                        note=f"clamp fired {result.clamp_count} times")
                else:
                    notes.append("clamp audit skipped: cap below the "
                                 "certified tension ceiling")

    if want("mass-upper-gap"):
        gamma0 = default_gamma0(params)
        constants["gamma0"] = gamma0
        add("mass-upper-gap", "mass-gap-upper",
            mass_upper_gap_check(trajectory, gamma0), 5.0 * dt)

    if want("mass-lower-floor") and trajectory.terminated == "completed":
        g = trajectory.column("g")
        finite = g[np.isfinite(g)]
        if finite.size:
            floor = mass_lower_bound(params, float(np.max(np.abs(finite))),
                                     grid.t_final, trajectory=trajectory)
            constants["lambda_bar"] = floor.lambda_bar
            constants["mu_min_kinetic"] = floor.mu_min
            add("mass-lower-floor", "mass-floor-kinetic",
                floor.margin, floor.tolerance)

    if want("local-window-floor"):
        try:
            win = local_existence_window(params)
            constants["zeta_bar"] = win["zeta_bar"]
            constants["gamma3"] = win["gamma3"]
            constants["t_local_window"] = win["window"]
            horizon = min(win["window"], float(trajectory.t[-1]))
            inside = trajectory.t <= horizon + 1e-12
            margin = float(np.min(trajectory.mu0[inside] - params.mu_floor))
            add("local-window-floor", "local-window", margin, 5.0 * dt)
        except errors.NonPositiveWindow as exc:
            notes.append(f"local window unavailable: {exc}")
        except errors.HypothesisViolated as exc:
            notes.append(f"local window not applicable: {exc}")

    regime = "inconclusive"
    reg = global_regime_check(params, trajectory)
    constants["zeta_breve"] = reg.zeta_breve
    if reg.classification == "global":
        regime = "global"
        constants["mu_min_global"] = reg.mu_min
        if want("global-mass-floor"):
            add("global-mass-floor", "global-mass-floor",
                reg.margin, reg.tolerance)

    try:
        cert = tearoff_certificate(params, trajectory)
        regime = "tear-off"
        constants["t0_detach"] = cert.t0
        constants["gamma6"] = cert.gamma6
        if cert.detected is not None:
            constants["tearoff_detected"] = cert.detected
        notes.extend(cert.notes)
        anchor_map = {"sign": "detach-sign", "decay": "detach-mass-decay",
                      "time": "detach-time", "profile": "detach-profile"}
        for key, margin in cert.margins.items():
            name = f"detach-{key}"
            if want(name):
                add(name, anchor_map[key], margin, cert.tolerances.get(key, 0.0))
    except errors.HypothesisViolated:
        if trajectory.terminated == "tearoff":
            regime = "tear-off"
            notes.append("tear-off observed without a certificate "
                         "(hypotheses not met)")

    if want("convex-minorant-slice") and trajectory.snapshots:
        vals = []
        for snap in trajectory.snapshots:
            if np.min(snap.v) >= -1e-12:
                vals.append(convexity_minorant_check(params.offrate, snap.rho,
                                                     snap.v, grid))
        if vals:
            add("convex-minorant-slice", "convexity-slice",
                float(np.min(vals)), 1e-10)

    if picard_traces is not None and want("picard-contraction"):
        add("picard-contraction", "contraction-ratios",
            picard_contraction_margin(picard_traces), 0.0)
        c_hats = [it["trace"].c_hat for it in picard_traces
                  if it["trace"].c_hat is not None]
        if c_hats:
            constants["c_hat_max"] = float(np.max(c_hats))

    if want("force-balance-residual"):
        if trajectory.terminated == "tearoff":
            notes.append("force-balance check skipped past tear-off dynamics")
        else:
            resid = trajectory.column("balance_residual")
            gap0 = float(resid[0])
            scale = max(1.0, abs(params.force_bounds()[1]))
            if gap0 <= 1e-6 * scale:
                add("force-balance-residual", "force-balance",
                    50.0 * dt * scale - float(np.max(resid)), 0.0)
            else:
                notes.append("force-balance check skipped: initial data are "
                             "not force-compatible")

    return DiagnosticsReport(
        scenario=scenario_name, coupling=coupling, variant=variant,
        regime=regime, terminated=trajectory.terminated,
        tearoff_time=trajectory.tearoff_time, constants=constants,
        checks=checks, notes=notes)
