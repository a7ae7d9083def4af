"""Adaptive linear finite elements on rectangle unions (the 2d cross-section of a generalized wall)."""

from .adaptive import FeSolution, adapt_nvb, dorfler_mark, run_adaptive
from .assembly import FeProblem, assemble, problem_from_system, solve_fe
from .estimate import TwoLevelEstimate, estimate_error_two_level
from .mesh import BoundaryTag, TriMesh, mesh_brick_union, mesh_rectangles
from .nvb import Refinement, bisect, uniform_refine

__all__ = [
    "BoundaryTag", "FeProblem", "FeSolution", "Refinement", "TriMesh", "TwoLevelEstimate",
    "adapt_nvb", "assemble", "bisect", "dorfler_mark", "estimate_error_two_level", "mesh_brick_union",
    "mesh_rectangles", "problem_from_system", "run_adaptive", "solve_fe", "uniform_refine",
]
