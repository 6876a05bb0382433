"""Phase-field topology optimization of 2D structures with graded infill."""

from .cases import (
    BenchmarkCase,
    SweepResult,
    cantilever_case,
    get_case,
    list_cases,
    run_sweep,
    simply_supported_case,
)
from .elasticity import (
    BoundaryConditions,
    StateSolution,
    assemble_load,
    assemble_stiffness,
    solve_state,
)
from .linalg import (
    SingularConstraint,
    SolverFailure,
    SparseSymmetricSystem,
    solve_saddle_scalar,
    solve_spd,
)
from .material import (
    InterpolationSpec,
    IsotropicElasticity,
    denergy_dchi_graded,
    denergy_dphi_graded,
    denergy_dphi_single,
    double_well,
    lame_from_E_nu,
    material_tensor_graded,
    material_tensor_single,
)
from .mesh import QuadratureRule, StructuredQuadMesh, build_mesh, shape_functions
from .opt_graded import GradedConfig, GradedOptState, run_graded
from .opt_single import OptConfig, RunRecord, SingleOptState, run_single

__version__ = "0.1.0"

__all__ = [
    "BenchmarkCase",
    "BoundaryConditions",
    "GradedConfig",
    "GradedOptState",
    "InterpolationSpec",
    "IsotropicElasticity",
    "OptConfig",
    "QuadratureRule",
    "RunRecord",
    "SingleOptState",
    "SingularConstraint",
    "SolverFailure",
    "SparseSymmetricSystem",
    "StateSolution",
    "StructuredQuadMesh",
    "SweepResult",
    "assemble_load",
    "assemble_stiffness",
    "build_mesh",
    "cantilever_case",
    "denergy_dchi_graded",
    "denergy_dphi_graded",
    "denergy_dphi_single",
    "double_well",
    "get_case",
    "lame_from_E_nu",
    "list_cases",
    "material_tensor_graded",
    "material_tensor_single",
    "run_graded",
    "run_single",
    "run_sweep",
    "shape_functions",
    "simply_supported_case",
    "solve_saddle_scalar",
    "solve_spd",
    "solve_state",
    "__version__",
]
