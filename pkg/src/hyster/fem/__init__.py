from .assembly import assemble, element_matrices
from .linalg import cg_solve
from .mesh import Mesh, generate_square_mesh
from .simulation import (
    Discretization,
    SimConfig,
    SimResult,
    SimState,
    advance_time_step,
    discretization,
    initial_state,
    run_simulation,
)

__all__ = [
    "Mesh",
    "generate_square_mesh",
    "assemble",
    "element_matrices",
    "cg_solve",
    "SimConfig",
    "SimState",
    "SimResult",
    "Discretization",
    "discretization",
    "initial_state",
    "advance_time_step",
    "run_simulation",
]
