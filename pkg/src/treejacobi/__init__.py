"""Spectral theory of periodic Jacobi operators on covering trees.

A finite multigraph with symmetric edge couplings and vertex
potentials defines a periodic Jacobi operator on its universal
covering tree.  This package computes the operator's spectral data
through the self-consistent m-function equations: Green's functions,
the Floquet determinant, the density of states with its atoms, gaps,
and gap labels, eigenvector-support classification at atoms, finite
random-lift comparisons, and a population-dynamics solver for the
operator with random potentials.
"""

from .errors import (
    ConvergenceError,
    GraphValidationError,
    NumericalError,
    RefusedClassificationError,
    TreeJacobiError,
)
from .graph import (
    JacobiParams,
    MultiGraph,
    build_complete_bipartite,
    build_cycle,
    build_theta,
    from_edge_list,
    load_graph,
    save_graph,
    spectral_bounds,
    spectral_diameter,
    validate,
    validate_or_raise,
)
from .selfconsistent import MSolution, SolverConfig, solve_batch, solve_m
from .floquet import (
    FloquetValue,
    LogDerivativeReport,
    ids_via_arg,
    log_derivative_check,
    phi_integral,
    phi_product,
)
from .spectral import Atom, DOSResult, Gap, dos_grid, find_atoms, find_gaps
from .aomoto import (
    AomotoReport,
    LocalOrders,
    cc_cross_check,
    classify_sets,
    local_orders,
)
from .lifts import (
    LiftMatrix,
    empirical_ids_distance,
    eigenvalues,
    kernel_dimension,
    random_lift,
)
from .anderson import (
    AndersonConfig,
    DerivativeReport,
    Distribution,
    HalfThoulessEstimate,
    PopulationState,
    constant,
    derivative_identity_check,
    discrete,
    estimate_half_thouless,
    parse_distribution,
    population_run,
    uniform,
    validate_config,
)

__version__ = "0.1.0"

__all__ = [
    "AndersonConfig",
    "AomotoReport",
    "Atom",
    "ConvergenceError",
    "DOSResult",
    "DerivativeReport",
    "Distribution",
    "FloquetValue",
    "Gap",
    "GraphValidationError",
    "HalfThoulessEstimate",
    "JacobiParams",
    "LiftMatrix",
    "LocalOrders",
    "LogDerivativeReport",
    "MSolution",
    "MultiGraph",
    "NumericalError",
    "PopulationState",
    "RefusedClassificationError",
    "SolverConfig",
    "TreeJacobiError",
    "build_complete_bipartite",
    "build_cycle",
    "build_theta",
    "cc_cross_check",
    "classify_sets",
    "derivative_identity_check",
    "dos_grid",
    "eigenvalues",
    "empirical_ids_distance",
    "constant",
    "discrete",
    "estimate_half_thouless",
    "find_atoms",
    "find_gaps",
    "from_edge_list",
    "ids_via_arg",
    "kernel_dimension",
    "load_graph",
    "local_orders",
    "log_derivative_check",
    "parse_distribution",
    "phi_integral",
    "phi_product",
    "population_run",
    "random_lift",
    "save_graph",
    "solve_batch",
    "solve_m",
    "spectral_bounds",
    "spectral_diameter",
    "uniform",
    "validate",
    "validate_config",
    "validate_or_raise",
    "__version__",
]
