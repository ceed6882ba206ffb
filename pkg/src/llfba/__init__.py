"""Loopless flux balance analysis.

Monolithic MIP reformulations (big-M, indicator, convex hull), a
combinatorial Benders decomposition with minimal-infeasible-subsystem cuts,
an enzyme-constrained extension, a loop verifier and a small benchmark
harness. HiGHS (through scipy) is the only solver engine required.
"""

from .backend import BackendError, CapabilityError, HighsBackend, LinearProblem, SolveSettings, get_backend
from .benders import BendersConfig, CutStrategy, InfeasibleSubsystem, SolveReport, solve_llfba_benders
from .enzyme import EnzymeData, build_enzyme_model, generate_enzyme_data, split_reversible
from .formulations import (
    LooplessConfig,
    required_big_M,
    solve_enzyme_fba,
    solve_fba,
    solve_llfba,
    solve_llfba_bigm,
    solve_llfba_hull,
    solve_llfba_indicator,
)
from .io import ParseError, load_model, load_solution, save_model, save_solution
from .model import (
    FluxSolution,
    MetabolicModel,
    Status,
    ValidationError,
    build_example_loop_model,
    build_two_cycle_model,
    internal_submatrix,
    nullspace_basis,
    random_model,
)
from .verifier import Certified, CycleFound, InvalidInput, verify_loopless, verify_via_nullspace

__version__ = "0.1.0"
