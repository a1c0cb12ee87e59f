"""Nehari-manifold and continuation solvers for competitive elliptic systems."""
from .errors import (
    BoundGuardTripped,
    ConfigError,
    CriterionFails,
    Divergence,
    NehariError,
    NoZero,
    NonConvergence,
    NotInU,
    SingularJacobian,
    StepFloorReached,
    ZeroComponent,
)
from .grid import Domain
from .nehari import (
    SystemParams,
    energy_J,
    fully_nontrivial_check,
    normalize_to_sphere,
    project_to_nehari,
    psi,
)
from .scaling_map import ScalingCoeffs, degree_sign_check, eval_M, solve_scaling
from .scalar_solver import least_energy_scalar, two_term_scalar
from .sync import sync_criterion, sync_solve, unboundedness_experiment
from .system_solver import (
    ContinuationConfig,
    continue_in_t,
    galerkin_solve,
    lambda_sweep,
    newton_solve,
    verify_solution,
)

__version__ = "0.1.0"
