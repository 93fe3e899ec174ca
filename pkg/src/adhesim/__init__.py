"""Age-structured simulator for adhesion by transient elastic linkages.

Couples the bond age distribution, the elongation field and the binding-site
position on a characteristic-aligned grid, and checks every closed-form bound
the underlying analysis provides as a runtime diagnostic.
"""
from .coupling import (IterationTrace, PicardConfig, WindowSolution,
                       march_coupled, picard_march, picard_window,
                       window_schedule)
from .diagnostics import (DiagnosticsReport, build_report,
                          convexity_minorant_check, global_regime_check,
                          h_functional, local_existence_window,
                          mass_lower_bound, mass_upper_gap_check,
                          riccati_bound, stability_pair_check,
                          tearoff_certificate, tension_bound_check)
from .elongation import (RhsMode, build_rhs, linkage_tension, step_v,
                         xnorm_bound_check)
from .functions import AgeProfile, TimeFunction
from .kinetics import (KineticsStepInput, SpaceTimeFunction, moment,
                       moment_bound, rho_closed_form, step_rho,
                       weak_form_residual)
from .model import (Grid, ModelParams, StateFields, initial_state,
                    suggest_age_cap, validate_params, weight,
                    weighted_sup_norm)
from .offrate import OffRateSpec
from .position import (PastPosition, force_balance_residual, march_zroute,
                       solve_z_step, v_from_z)
from .presets import PRESETS, Scenario
from .record import TrajectoryRecord
from .runner import refinement_study, route_equivalence_gap, run_scenario

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
