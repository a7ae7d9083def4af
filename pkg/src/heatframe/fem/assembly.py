"""P1 assembly, Robin terms, quadrature and the direct solve."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from ..components import System
from ..errors import SingularSystem
from ..genwall import HConstants, evaluate_H_from_field
from ..template import PdeTemplate
from .mesh import TriMesh, mesh_brick_union
from .nvb import edge_structure


@dataclass
class FeProblem:
    mesh: TriMesh  # initial mesh; tags and materials carry the data
    conductivity: np.ndarray  # per material index
    depth: float = 1.0
    source: Callable | None = None  # f(x, y), vectorized
    constants: HConstants | None = None


def problem_from_system(system: System, template: PdeTemplate, constants: HConstants, n: int = 1) -> FeProblem:
    mesh = mesh_brick_union(system, template, n)
    k = np.array([float(c.conductivity) for c in system.components])
    return FeProblem(mesh, k, float(constants.depth), None, constants)


@lru_cache(maxsize=None)
def triangle_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss rule on the reference triangle: barycentric points (q, 3) and weights summing to 1/2."""
    g, w = np.polynomial.legendre.leggauss(n)
    g = 0.5 * (g + 1.0)
    w = 0.5 * w
    s, t = np.meshgrid(g, g, indexing="ij")
    ws, wt = np.meshgrid(w, w, indexing="ij")
    xi = (s * (1.0 - t)).ravel()
    eta = t.ravel()
    weights = (ws * wt * (1.0 - t)).ravel()
    bary = np.stack([1.0 - xi - eta, xi, eta], axis=1)
    return bary, weights


@lru_cache(maxsize=None)
def edge_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss points on [0, 1] and weights summing to 1."""
    g, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (g + 1.0), 0.5 * w


def gradients(mesh: TriMesh) -> tuple[np.ndarray, np.ndarray]:
    """Triangle areas and the constant gradients of the three hat functions, shape (M, 3, 2)."""
    area = mesh.areas()
    p = mesh.vertices[mesh.triangles]
    x, y = p[:, :, 0], p[:, :, 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    grads = np.stack([b, c], axis=2) / (2.0 * area)[:, None, None]
    return area, grads


def local_stiffness(mesh: TriMesh, problem: FeProblem) -> np.ndarray:
    area, grads = gradients(mesh)
    k = problem.conductivity[mesh.material]
    return (k * area)[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)


def _robin_arrays(mesh: TriMesh):
    tags = mesh.tags
    h = np.array([t.h for t in tags])[mesh.bnd_tag]
    robin = np.array([t.is_robin for t in tags])[mesh.bnd_tag]
    return h, robin


def _boundary_load(mesh: TriMesh, nq: int = 4) -> np.ndarray:
    """Per boundary edge, the integrals of (h T_f + g) against the two end hats, shape (B, 2)."""
    L = mesh.edge_lengths()
    out = np.zeros((len(L), 2))
    hTf = np.array([t.h * t.T_f for t in mesh.tags])[mesh.bnd_tag]
    out += (hTf * L / 2.0)[:, None]
    s, w = edge_rule(nq)
    for ti, tag in enumerate(mesh.tags):
        if tag.g is None:
            continue
        sel = np.flatnonzero(mesh.bnd_tag == ti)
        pa = mesh.vertices[mesh.bnd_edges[sel, 0]]
        pb = mesh.vertices[mesh.bnd_edges[sel, 1]]
        pts = pa[:, None, :] * (1.0 - s)[None, :, None] + pb[:, None, :] * s[None, :, None]
        gv = tag.g(pts[..., 0], pts[..., 1])
        out[sel, 0] += np.sum(gv * (1.0 - s) * w, axis=1) * L[sel]
        out[sel, 1] += np.sum(gv * s * w, axis=1) * L[sel]
    return out


def _source_load(mesh: TriMesh, f: Callable, nq: int = 6) -> np.ndarray:
    bary, w = triangle_rule(nq)
    area = mesh.areas()
    p = mesh.vertices[mesh.triangles]
    pts = np.einsum("qi,tid->tqd", bary, p)
    fv = f(pts[..., 0], pts[..., 1])
    return 2.0 * area[:, None] * np.einsum("tq,q,qi->ti", fv, w, bary)


def assemble(mesh: TriMesh, problem: FeProblem) -> tuple[sp.csr_matrix, np.ndarray]:
    """Stiffness plus Robin mass, and the Robin/source load; both scaled by the depth."""
    n = mesh.n_vertices
    Ke = local_stiffness(mesh, problem)
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    vals = Ke.ravel()
    h, robin = _robin_arrays(mesh)
    be = mesh.bnd_edges[robin]
    L = mesh.edge_lengths()[robin]
    hr = h[robin]
    m = (hr * L / 6.0)[:, None] * np.array([2.0, 1.0, 1.0, 2.0])[None, :]
    rows = np.concatenate([rows, be[:, [0, 0, 1, 1]].ravel()])
    cols = np.concatenate([cols, be[:, [0, 1, 0, 1]].ravel()])
    vals = np.concatenate([vals, m.ravel()])
    A = sp.csr_matrix((vals * problem.depth, (rows, cols)), shape=(n, n))
    b = np.zeros(n)
    bl = _boundary_load(mesh)
    np.add.at(b, mesh.bnd_edges[:, 0], bl[:, 0])
    np.add.at(b, mesh.bnd_edges[:, 1], bl[:, 1])
    if problem.source is not None:
        np.add.at(b, mesh.triangles.ravel(), _source_load(mesh, problem.source).ravel())
    return A, b * problem.depth


def solve_fe(mesh: TriMesh, problem: FeProblem) -> tuple[np.ndarray, sp.csr_matrix, float]:
    A, b = assemble(mesh, problem)
    if not any(t.is_robin and t.h > 0 for t in mesh.tags):
        raise SingularSystem("no Robin edge anchors the temperature")
    u = spsolve(A.tocsc(), b)
    if not np.all(np.isfinite(u)):
        raise SingularSystem("finite element system is singular")
    scale = max(np.abs(b).max(), np.abs(A @ np.abs(u)).max(), 1e-300)
    residual = float(np.abs(A @ u - b).max() / scale)
    if residual > 1e-10:
        raise SingularSystem(f"finite element residual {residual:.3g} exceeds 1e-10")
    return u, A, residual


def boundary_owner(mesh: TriMesh) -> np.ndarray:
    """Triangle owning each boundary edge."""
    edges, e2e, codes = edge_structure(mesh.triangles, mesh.n_vertices)
    owner = np.empty(len(edges), dtype=np.int64)
    owner[e2e.ravel()] = np.repeat(np.arange(mesh.n_triangles), 3)
    bs = np.sort(mesh.bnd_edges, axis=1)
    return owner[np.searchsorted(codes, bs[:, 0] * mesh.n_vertices + bs[:, 1])]


def element_energy(mesh: TriMesh, problem: FeProblem, v: np.ndarray) -> np.ndarray:
    """``v^T A v`` split per triangle; Robin edge terms go to the owning triangle."""
    Ke = local_stiffness(mesh, problem)
    vt = v[mesh.triangles]
    eta = np.einsum("ti,tij,tj->t", vt, Ke, vt)
    h, robin = _robin_arrays(mesh)
    if robin.any():
        L = mesh.edge_lengths()
        a, b = v[mesh.bnd_edges[:, 0]], v[mesh.bnd_edges[:, 1]]
        edge_e = np.where(robin, h * L / 3.0 * (a * a + a * b + b * b), 0.0)
        np.add.at(eta, boundary_owner(mesh), edge_e)
    return eta * problem.depth


def qoi_H(mesh: TriMesh, u: np.ndarray, constants: HConstants) -> float:
    e = mesh.edges_of_tag("robin_left")
    L = mesh.edge_lengths(e)
    return evaluate_H_from_field(zip(L, u[e[:, 0]], u[e[:, 1]]), constants)
