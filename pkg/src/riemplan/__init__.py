"""Variational trajectory planning with obstacle costs on Riemannian manifolds.

The package integrates a fourth-order covariant trajectory equation, solves
two-point boundary problems for it, and certifies local optimality of the
resulting curves through linearized perturbation analysis, spectral counts on
finite-dimensional field spaces, and an independent discrete minimizer.
"""

from __future__ import annotations

from .errors import (
    BasisError,
    ChartDomainError,
    ChartEscapeError,
    ConfigError,
    ConstructionError,
    CriticalPointError,
    InjectivityError,
    NonconvergenceError,
    NumericalError,
    PlannerError,
    ResolutionWarning,
)
from .geometry import (
    EuclideanChart,
    Hyperbolic2Chart,
    ManifoldChart,
    NumericChart,
    SO3Chart,
    Sphere2Chart,
    numeric_chart_from_file,
    parallel_transport,
    parse_manifold,
    transport_frame,
)
from .potentials import (
    GaussianObstacle,
    Potential,
    QuadraticWell,
    ScaledPotential,
    SumPotential,
    ZeroPotential,
    potential_from_config,
)
from .dynamics import (
    CurveState,
    Trajectory,
    action,
    first_variation,
    integrate_ivp,
)
from .bvp import (
    BoundaryData,
    ShootingResult,
    biexp,
    biexp_jacobian,
    continuation_sweep,
    multi_seed_scan,
    solve_bvp,
)
from .jacobi import (
    BiconjugateReport,
    JacobiState,
    NegativeDirectionReport,
    biconjugate_scan,
    negative_direction,
    propagate_jacobi,
)
from .index import (
    AdmissibleField,
    IndexReport,
    OptimalityReport,
    decompose,
    extended_index,
    index_form,
    random_field,
    second_variation_fd,
    verdict,
)
from .oracle import (
    DiscretePath,
    check_uniqueness_props,
    compare_with_trajectory,
    discrete_action,
    discrete_gradient,
    minimize_discrete,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "PlannerError",
    "ChartDomainError",
    "ChartEscapeError",
    "InjectivityError",
    "NumericalError",
    "NonconvergenceError",
    "CriticalPointError",
    "ConstructionError",
    "BasisError",
    "ConfigError",
    "ResolutionWarning",
    "ManifoldChart",
    "EuclideanChart",
    "Sphere2Chart",
    "Hyperbolic2Chart",
    "SO3Chart",
    "NumericChart",
    "numeric_chart_from_file",
    "parse_manifold",
    "parallel_transport",
    "transport_frame",
    "Potential",
    "ZeroPotential",
    "GaussianObstacle",
    "QuadraticWell",
    "SumPotential",
    "ScaledPotential",
    "potential_from_config",
    "CurveState",
    "Trajectory",
    "integrate_ivp",
    "action",
    "first_variation",
    "BoundaryData",
    "ShootingResult",
    "biexp",
    "biexp_jacobian",
    "solve_bvp",
    "continuation_sweep",
    "multi_seed_scan",
    "JacobiState",
    "BiconjugateReport",
    "NegativeDirectionReport",
    "propagate_jacobi",
    "biconjugate_scan",
    "negative_direction",
    "AdmissibleField",
    "IndexReport",
    "OptimalityReport",
    "random_field",
    "index_form",
    "decompose",
    "second_variation_fd",
    "extended_index",
    "verdict",
    "DiscretePath",
    "discrete_action",
    "discrete_gradient",
    "minimize_discrete",
    "compare_with_trajectory",
    "check_uniqueness_props",
]
