"""Coupled-cluster amplitude equations as exact polynomial systems.

Small second-quantized model Hamiltonians (Hubbard chains, pairing models,
or user-supplied integral tables) are turned into the projected
coupled-cluster equations in exact polynomial form, every root is found by
total-degree homotopy continuation, roots are certified against a full-CI
oracle, and a truncation homotopy connects truncated-cluster roots to
full-cluster ones.  Newton-basin scans render the attraction structure of
the same equations.
"""

from .basins import (
    BasinGrid,
    PolynomialParseError,
    basin_scan,
    parse_univariate,
    render_ppm,
    slice_scan,
    write_ppm,
)
from .ccpoly import (
    CCSystem,
    Polynomial,
    PolynomialSystem,
    QuadratizationError,
    RootBounds,
    Workspace,
    cc_system_for_rank,
    energy,
    generate_system,
    jacobian,
    quadratize,
    residuals,
    root_bounds,
)
from .excitations import (
    AmplitudeSplit,
    ExcitationGraph,
    ExcitationIndex,
    build_graph,
    excitation_matrix,
    full_rank,
    split,
)
from .kp import (
    EnergyErrorBundle,
    KPProblem,
    KPState,
    KPTrajectory,
    energy_error_bundle,
    kp_dlam,
    kp_jacobian,
    kp_problem,
    kp_residual,
    kp_track,
    overlap,
    solve_lambda0,
    trajectory_csv,
)
from .model import (
    IntegralFormatError,
    IntegralTable,
    ManyBodyOperator,
    ModelSpec,
    SectorError,
    SymmetryError,
    assemble_hamiltonian,
    aufbau_reference,
    build_hubbard,
    build_pairing,
    enumerate_determinants,
    load_integrals,
    model_from_dict,
    model_to_dict,
    save_integrals,
)
from .oracle import (
    DimensionCapError,
    FCIResult,
    ci_coefficients,
    cluster_from_ci,
    fci_solve,
    intermediately_normalizable,
    match_roots,
    sigma_min,
)
from .tracker import (
    PathBudgetError,
    PathResult,
    Solution,
    SolutionSet,
    TrackOptions,
    gamma_from_seed,
    newton_refine,
    solve_all,
    start_root,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeSplit",
    "BasinGrid",
    "CCSystem",
    "DimensionCapError",
    "EnergyErrorBundle",
    "ExcitationGraph",
    "ExcitationIndex",
    "FCIResult",
    "IntegralFormatError",
    "IntegralTable",
    "KPProblem",
    "KPState",
    "KPTrajectory",
    "ManyBodyOperator",
    "ModelSpec",
    "PathBudgetError",
    "PathResult",
    "Polynomial",
    "PolynomialParseError",
    "PolynomialSystem",
    "QuadratizationError",
    "RootBounds",
    "SectorError",
    "Solution",
    "SolutionSet",
    "SymmetryError",
    "TrackOptions",
    "Workspace",
    "assemble_hamiltonian",
    "aufbau_reference",
    "basin_scan",
    "build_graph",
    "build_hubbard",
    "build_pairing",
    "cc_system_for_rank",
    "ci_coefficients",
    "cluster_from_ci",
    "energy",
    "energy_error_bundle",
    "enumerate_determinants",
    "excitation_matrix",
    "fci_solve",
    "full_rank",
    "gamma_from_seed",
    "generate_system",
    "intermediately_normalizable",
    "jacobian",
    "kp_dlam",
    "kp_jacobian",
    "kp_problem",
    "kp_residual",
    "kp_track",
    "load_integrals",
    "match_roots",
    "model_from_dict",
    "model_to_dict",
    "newton_refine",
    "overlap",
    "parse_univariate",
    "quadratize",
    "render_ppm",
    "residuals",
    "root_bounds",
    "save_integrals",
    "sigma_min",
    "slice_scan",
    "solve_all",
    "solve_lambda0",
    "split",
    "start_root",
    "trajectory_csv",
    "write_ppm",
]
