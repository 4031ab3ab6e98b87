"""Sparse recombination of Lip(gamma) feature combinations on point clouds."""
from .algorithm import Config, Problem, RunResult, extension_step, normalize, run
from .combinatorics import beta, dim_D, enum_ordered, q_count
from .errors import (
    BudgetError,
    EmptySetError,
    HolgrimError,
    IncompatibleError,
    OrderRangeError,
    ParameterRangeError,
    UnsupportedError,
    ValidationError,
)
from .functionals import FunctionalId, FunctionalSet, eval_functional, eval_matrix, max_abs_residual, sigma_star, tau
from .geometry import (
    ThresholdQuery,
    exact_packing,
    greedy_packing,
    grid_cover,
    sandwich_radius,
    solve_r,
    volumetric_bound,
)
from .jets import Domain, JetFunction, SymmetricForm, lambda_l, lip_norm, linear_combination, operator_norm
from .problems import GeneratorSpec, gen_problem, probe_error
from .recombination import ReductionInput, ReductionOutput, recombination_step, reduce

__version__ = "0.1.0"
