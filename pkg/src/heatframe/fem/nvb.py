"""Newest-vertex bisection with closure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import TriMesh


def edge_structure(triangles: np.ndarray, n_vertices: int):
    """Unique edges and ``elem2edge[t, i]``, the edge opposite local vertex ``i``."""
    e = np.stack([triangles[:, [1, 2]], triangles[:, [2, 0]], triangles[:, [0, 1]]], axis=1).reshape(-1, 2)
    e = np.sort(e, axis=1)
    codes = e[:, 0] * n_vertices + e[:, 1]
    uniq, inv = np.unique(codes, return_inverse=True)
    edges = np.stack([uniq // n_vertices, uniq % n_vertices], axis=1)
    return edges, inv.reshape(-1, 3), uniq


@dataclass
class Refinement:
    mesh: TriMesh
    parent: np.ndarray  # (M_fine,) coarse triangle of each new triangle
    new_vertex_edges: np.ndarray  # (K, 2) coarse endpoints of each new midpoint, in creation order
    n_coarse_vertices: int

    def prolongation(self) -> sp.csr_matrix:
        """Linear interpolation from the coarse mesh onto the refined one."""
        nc, k = self.n_coarse_vertices, len(self.new_vertex_edges)
        rows = np.concatenate([np.arange(nc), np.repeat(nc + np.arange(k), 2)])
        cols = np.concatenate([np.arange(nc), self.new_vertex_edges.reshape(-1)])
        vals = np.concatenate([np.ones(nc), np.full(2 * k, 0.5)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(nc + k, nc))


def bisect(mesh: TriMesh, marked, all_edges: bool = False) -> Refinement:
    """Refine the marked triangles (bool mask or indices) and close the mesh.

    A marked triangle has its refinement edge cut; ``all_edges`` cuts every
    edge instead, so a fully marked mesh is split into four per triangle.
    """
    tri = mesh.triangles
    nv = mesh.n_vertices
    edges, e2e, codes = edge_structure(tri, nv)
    marked = np.asarray(marked)
    if marked.dtype == bool:
        marked = np.flatnonzero(marked)
    cut = np.zeros(len(edges), dtype=bool)
    if all_edges:
        cut[e2e[marked].reshape(-1)] = True
    else:
        cut[e2e[marked, 0]] = True
    while True:
        need = (cut[e2e[:, 1]] | cut[e2e[:, 2]]) & ~cut[e2e[:, 0]]
        if not need.any():
            break
        cut[e2e[need, 0]] = True

    cut_ids = np.flatnonzero(cut)
    mid = np.full(len(edges), -1, dtype=np.int64)
    mid[cut_ids] = nv + np.arange(len(cut_ids))
    new_xy = 0.5 * (mesh.vertices[edges[cut_ids, 0]] + mesh.vertices[edges[cut_ids, 1]])
    vertices = np.vstack([mesh.vertices, new_xy])

    p0, p1, p2 = tri[:, 0], tri[:, 1], tri[:, 2]
    m = mid[e2e[:, 0]]
    m_left = mid[e2e[:, 2]]  # midpoint of p0 p1
    m_right = mid[e2e[:, 1]]  # midpoint of p2 p0
    idx = np.arange(len(tri))
    split = m >= 0
    pieces = []  # (parent, slot, triangle rows)

    keep = ~split
    pieces.append((idx[keep], np.zeros(keep.sum(), dtype=np.int64), tri[keep]))
    # left child (m, p0, p1), possibly split again at the midpoint of p0 p1
    lone = split & (m_left < 0)
    pieces.append((idx[lone], np.zeros(lone.sum(), dtype=np.int64), np.stack([m, p0, p1], 1)[lone]))
    ltwo = split & (m_left >= 0)
    pieces.append((idx[ltwo], np.zeros(ltwo.sum(), dtype=np.int64), np.stack([m_left, m, p0], 1)[ltwo]))
    pieces.append((idx[ltwo], np.ones(ltwo.sum(), dtype=np.int64), np.stack([m_left, p1, m], 1)[ltwo]))
    # right child (m, p2, p0), possibly split at the midpoint of p2 p0
    rone = split & (m_right < 0)
    pieces.append((idx[rone], np.full(rone.sum(), 2), np.stack([m, p2, p0], 1)[rone]))
    rtwo = split & (m_right >= 0)
    pieces.append((idx[rtwo], np.full(rtwo.sum(), 2), np.stack([m_right, m, p2], 1)[rtwo]))
    pieces.append((idx[rtwo], np.full(rtwo.sum(), 3), np.stack([m_right, p0, m], 1)[rtwo]))

    parent = np.concatenate([p[0] for p in pieces])
    slot = np.concatenate([p[1] for p in pieces])
    rows = np.concatenate([p[2] for p in pieces]).astype(np.int64)
    order = np.lexsort((slot, parent))
    parent, rows = parent[order], rows[order]

    # boundary edges follow their halves
    b = mesh.bnd_edges
    bs = np.sort(b, axis=1)
    bid = np.searchsorted(codes, bs[:, 0] * nv + bs[:, 1])
    bm = mid[bid]
    new_b, new_t = [], []
    for (a, c), t, mm in zip(b, mesh.bnd_tag, bm):
        if mm >= 0:
            new_b.extend(((a, mm), (mm, c)))
            new_t.extend((t, t))
        else:
            new_b.append((a, c))
            new_t.append(t)
    refined = TriMesh(vertices, rows, mesh.material[parent], np.array(new_b, dtype=np.int64).reshape(-1, 2),
                      np.array(new_t, dtype=np.int64), mesh.tags, mesh.materials)
    return Refinement(refined, parent, edges[cut_ids], nv)


def uniform_refine(mesh: TriMesh) -> Refinement:
    """One uniform generation: every triangle bisected twice, halving the mesh size."""
    return bisect(mesh, np.arange(mesh.n_triangles), all_edges=True)
