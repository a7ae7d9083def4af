"""Smooth manufactured Robin problem on the unit square, with exact error norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import FeProblem, edge_rule, gradients, triangle_rule
from .mesh import BoundaryTag, TriMesh, mesh_rectangles

PI = np.pi


def u_exact(x, y):
    return np.cos(PI * x) * np.cos(PI * y) + x * y


def grad_exact(x, y):
    return (-PI * np.sin(PI * x) * np.cos(PI * y) + y, -PI * np.cos(PI * x) * np.sin(PI * y) + x)


def source(x, y):
    return 2.0 * PI ** 2 * np.cos(PI * x) * np.cos(PI * y)


@dataclass(frozen=True)
class _SideData:
    """Robin data ``k du/dn + h u = g`` on one side of the square."""

    normal: tuple[float, float]
    h: float

    def __call__(self, x, y):
        gx, gy = grad_exact(x, y)
        return self.normal[0] * gx + self.normal[1] * gy + self.h * u_exact(x, y)


def manufactured_problem(n: int = 2, h: float = 1.0) -> FeProblem:
    sides = {"left": (-1.0, 0.0), "right": (1.0, 0.0), "bottom": (0.0, -1.0), "top": (0.0, 1.0)}

    def tag_for(m, orient, x, y):
        if orient == "v":
            name = "left" if x == 0.0 else "right"
        else:
            name = "bottom" if y == 0.0 else "top"
        return BoundaryTag("robin", h, 0.0, _SideData(sides[name], h))

    mesh = mesh_rectangles([(0.0, 1.0, 0.0, 1.0)], n, tag_for, ("square",))
    return FeProblem(mesh, np.array([1.0]), 1.0, source, None)


def error_norms(mesh: TriMesh, u_h: np.ndarray, nq: int = 8) -> tuple[float, float]:
    """Energy norm (gradient plus Robin trace) and L2 norm of ``u - u_h``."""
    bary, w = triangle_rule(nq)
    area, grads = gradients(mesh)
    p = mesh.vertices[mesh.triangles]
    pts = np.einsum("qi,tid->tqd", bary, p)
    x, y = pts[..., 0], pts[..., 1]
    uh = np.einsum("qi,ti->tq", bary, u_h[mesh.triangles])
    guh = np.einsum("ti,tid->td", u_h[mesh.triangles], grads)
    gx, gy = grad_exact(x, y)
    scale = 2.0 * area[:, None] * w[None, :]
    l2 = np.sum(scale * (u_exact(x, y) - uh) ** 2)
    h1 = np.sum(scale * ((gx - guh[:, None, 0]) ** 2 + (gy - guh[:, None, 1]) ** 2))
    s, we = edge_rule(nq)
    e = mesh.bnd_edges
    hs = np.array([t.h for t in mesh.tags])[mesh.bnd_tag]
    pa, pb = mesh.vertices[e[:, 0]], mesh.vertices[e[:, 1]]
    q = pa[:, None, :] * (1.0 - s)[None, :, None] + pb[:, None, :] * s[None, :, None]
    uhe = u_h[e[:, 0]][:, None] * (1.0 - s) + u_h[e[:, 1]][:, None] * s
    L = mesh.edge_lengths()
    rob = np.sum(hs[:, None] * L[:, None] * we[None, :] * (u_exact(q[..., 0], q[..., 1]) - uhe) ** 2)
    return float(np.sqrt(h1 + rob)), float(np.sqrt(l2))
