"""Solve, estimate, mark, refine."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import BudgetExceeded
from .assembly import FeProblem, qoi_H, solve_fe
from .estimate import estimate_error_two_level
from .mesh import TriMesh
from .nvb import Refinement, bisect

TOL_QOI = 1e-3
TOL_ENERGY = 1e-3
THETA = 0.5
MAX_DOFS = 200_000


@dataclass
class FeSolution:
    mesh: TriMesh
    u: np.ndarray
    energy_error_estimate: float
    qoi_value: float | None
    qoi_error_estimate: float | None
    energy: float  # |||u_h|||^2
    residual: float
    converged: bool
    log: list[dict] = field(default_factory=list)

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_vertices

    def to_dict(self) -> dict:
        return {"dofs": self.n_dofs, "triangles": self.mesh.n_triangles, "H_h": self.qoi_value,
                "qoi_error_estimate": self.qoi_error_estimate, "energy_error_estimate": self.energy_error_estimate,
                "converged": self.converged, "iterations": self.log}


def dorfler_mark(indicators: np.ndarray, theta: float = THETA) -> np.ndarray:
    """Smallest set of triangles whose indicators sum to at least ``theta`` of the total."""
    total = indicators.sum()
    if total <= 0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(-indicators, kind="stable")
    csum = np.cumsum(indicators[order])
    k = int(np.searchsorted(csum, theta * total * (1 - 1e-14))) + 1
    return np.sort(order[:k])


def adapt_nvb(mesh: TriMesh, indicators: np.ndarray, theta: float = THETA) -> Refinement:
    """Doerfler marking, then all three edges of each marked triangle are cut and the mesh closed."""
    return bisect(mesh, dorfler_mark(indicators, theta), all_edges=True)


def run_adaptive(problem: FeProblem, tol_qoi: float = TOL_QOI, tol_energy: float = TOL_ENERGY,
                 theta: float = THETA, max_dofs: int = MAX_DOFS, max_iter: int = 100) -> FeSolution:
    """Refine until the QoI estimate is below ``tol_qoi |H_h|`` and the squared energy
    estimate is below ``tol_energy`` times the discrete solution energy."""
    mesh = problem.mesh
    log: list[dict] = []
    for it in range(max_iter):
        u, A, residual = solve_fe(mesh, problem)
        H = float(qoi_H(mesh, u, problem.constants)) if problem.constants is not None else None
        est = estimate_error_two_level(mesh, u, problem, H)
        energy = float(u @ (A @ u))
        qoi_ok = bool(est.qoi is None or est.qoi <= tol_qoi * abs(H) or est.qoi <= 1e-14)
        energy_ok = bool(est.energy ** 2 <= tol_energy * energy)
        log.append({"iteration": it, "dofs": mesh.n_vertices, "triangles": mesh.n_triangles, "H_h": H,
                    "qoi_estimate": est.qoi, "energy_estimate": est.energy})
        sol = FeSolution(mesh, u, est.energy, H, est.qoi, energy, residual, qoi_ok and energy_ok, list(log))
        if sol.converged:
            return sol
        nxt = adapt_nvb(mesh, est.indicators, theta).mesh
        if nxt.n_vertices > max_dofs:
            raise BudgetExceeded(f"refinement would exceed {max_dofs} dofs before reaching tolerance", partial=sol)
        mesh = nxt
    raise BudgetExceeded(f"no convergence in {max_iter} iterations", partial=sol)
