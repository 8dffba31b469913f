"""C0 weak Galerkin finite elements for the biharmonic equation on triangles.

The discrete unknown pairs a continuous ``P_{k+2}`` function ``u0`` with a
``P_{k+1}`` normal derivative ``u_n`` on every edge; the scheme seeks
``u_h`` with ``(lap_w u_h, lap_w v) + s(u_h, v) = (f, v0)``.
"""
from .assembly import SparseSystem, assemble_system, dump_system
from .cases import CASE_IDS, ManufacturedCase, get_case, polynomial_case
from .dofs import DofMap, WeakField, build_dof_map, evaluate_field
from .harness import ConvergenceReport, StudyConfig, emit_table, run_study
from .mesh import ElementGeometry, Mesh, MeshError, element_geometry, generate_uniform_mesh, load_mesh, save_mesh
from .norms import ErrorReport, error_report, estimate_rate, fit_rate
from .projections import boundary_projection_Qb, edge_projection_Qn, element_projection_Qhk, project_Qh, scott_zhang
from .solver import NotSPDError, SolveReport, solve_matrix, solve_spd
from .weak_laplacian import ElementOperator, element_operators, local_stabilization, local_stiffness, local_weak_laplacian

__version__ = "0.1.0"

__all__ = [
    "SparseSystem", "assemble_system", "dump_system",
    "CASE_IDS", "ManufacturedCase", "get_case", "polynomial_case",
    "DofMap", "WeakField", "build_dof_map", "evaluate_field",
    "ConvergenceReport", "StudyConfig", "emit_table", "run_study",
    "ElementGeometry", "Mesh", "MeshError", "element_geometry", "generate_uniform_mesh", "load_mesh", "save_mesh",
    "ErrorReport", "error_report", "estimate_rate", "fit_rate",
    "boundary_projection_Qb", "edge_projection_Qn", "element_projection_Qhk", "project_Qh", "scott_zhang",
    "NotSPDError", "SolveReport", "solve_matrix", "solve_spd",
    "ElementOperator", "element_operators", "local_stabilization", "local_stiffness", "local_weak_laplacian",
]
