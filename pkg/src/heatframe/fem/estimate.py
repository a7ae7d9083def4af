"""Two-level error estimation against one uniform refinement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import FeProblem, element_energy, qoi_H, solve_fe
from .mesh import TriMesh
from .nvb import Refinement, uniform_refine


@dataclass
class TwoLevelEstimate:
    energy: float
    qoi: float | None
    indicators: np.ndarray  # squared, per coarse triangle
    H_fine: float | None
    fine: Refinement
    u_fine: np.ndarray


def estimate_error_two_level(mesh: TriMesh, u: np.ndarray, problem: FeProblem,
                             H: float | None = None) -> TwoLevelEstimate:
    ref = uniform_refine(mesh)
    u_f, A_f, _ = solve_fe(ref.mesh, problem)
    e = u_f - ref.prolongation() @ u
    energy = float(np.sqrt(max(e @ (A_f @ e), 0.0)))
    local = np.zeros(mesh.n_triangles)
    np.add.at(local, ref.parent, element_energy(ref.mesh, problem, e))
    H_f = qoi_H(ref.mesh, u_f, problem.constants) if problem.constants is not None else None
    q = abs(H_f - H) if H_f is not None and H is not None else None
    return TwoLevelEstimate(energy, q, np.maximum(local, 0.0), H_f, ref, u_f)
