"""Anti-plane dynamic perfect plasticity as a constrained Friedrichs system.

Solvers for the visco-plastic model and its perfectly plastic limit with
dissipative (impedance) boundary conditions, together with executable
checks of energy balance, flow rule, comparison, finite speed of
propagation and the dissipative-solution inequality.
"""

from .algebra import (
    AdmissibilityResult,
    ProjectionTriple,
    boundary_quadratic,
    build_anu,
    build_m,
    build_system,
    check_admissible,
    decompose,
)
from .constitutive import (
    INFINITY,
    PsiFamily,
    flow_rule_residual,
    perzyna_rate,
    perzyna_resolvent,
    project_ball,
    psi,
    psi_prime,
    psi_star,
    truncate,
)
from .driver import CFLError, CompatibilityError, NumericalError, stable_dt
from .grid import (
    Box,
    Grid,
    Scenario,
    State,
    check_compatibility,
    div,
    grad,
    pulse_scenario,
    support_bbox,
)
from .kernels import BACKEND
from .plastic import run_limit_study, run_plastic, run_vanishing_viscosity, step_plastic
from .trajectory import EnergyLedger, Trajectory
from .viscoplastic import StepParams, run_viscoplastic, step_viscoplastic

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "INFINITY",
    "AdmissibilityResult",
    "boundary_quadratic",
    "Box",
    "build_anu",
    "build_m",
    "build_system",
    "CFLError",
    "check_admissible",
    "check_compatibility",
    "CompatibilityError",
    "decompose",
    "div",
    "EnergyLedger",
    "flow_rule_residual",
    "grad",
    "Grid",
    "NumericalError",
    "perzyna_rate",
    "perzyna_resolvent",
    "project_ball",
    "ProjectionTriple",
    "psi",
    "psi_prime",
    "psi_star",
    "PsiFamily",
    "pulse_scenario",
    "run_limit_study",
    "run_plastic",
    "run_vanishing_viscosity",
    "run_viscoplastic",
    "Scenario",
    "stable_dt",
    "State",
    "step_plastic",
    "step_viscoplastic",
    "StepParams",
    "support_bbox",
    "Trajectory",
    "truncate",
]
