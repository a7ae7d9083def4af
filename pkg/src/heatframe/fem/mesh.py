"""Triangular meshes of axis-aligned rectangle unions.

Triangles are stored as ``(p0, p1, p2)`` in counter-clockwise order with
``p0`` the newest vertex; the refinement edge is ``p1 p2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..components import System
from ..errors import DegenerateTriangle
from ..genwall import depth_coordinate
from ..template import PdeTemplate


@dataclass(frozen=True)
class BoundaryTag:
    kind: str  # robin_left | robin_right | robin | insulated
    h: float = 0.0
    T_f: float = 0.0
    g: Callable | None = None  # extra boundary flux data, added to h*T_f

    @property
    def is_robin(self) -> bool:
        return self.kind != "insulated"


INSULATED = BoundaryTag("insulated")


@dataclass
class TriMesh:
    vertices: np.ndarray  # (N, 2)
    triangles: np.ndarray  # (M, 3)
    material: np.ndarray  # (M,)
    bnd_edges: np.ndarray  # (B, 2)
    bnd_tag: np.ndarray  # (B,) index into tags
    tags: tuple[BoundaryTag, ...]
    materials: tuple[str, ...] = ()

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def areas(self) -> np.ndarray:
        a = self.signed_areas()
        if np.any(a <= 0):
            raise DegenerateTriangle(f"triangle {int(np.argmin(a))} has non-positive area {a.min():.3g}")
        return a

    def edge_lengths(self, edges: np.ndarray | None = None) -> np.ndarray:
        e = self.bnd_edges if edges is None else edges
        d = self.vertices[e[:, 1]] - self.vertices[e[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def edges_of_tag(self, kind: str) -> np.ndarray:
        ids = [i for i, t in enumerate(self.tags) if t.kind == kind]
        return self.bnd_edges[np.isin(self.bnd_tag, ids)]

    def min_angles(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        out = np.full(len(p), np.pi)
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            cosang = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            out = np.minimum(out, np.arccos(np.clip(cosang, -1.0, 1.0)))
        return out

    def to_dict(self, values: np.ndarray | None = None) -> dict:
        d = {"vertices": np.round(self.vertices, 15).tolist(), "triangles": self.triangles.tolist(),
             "material": [self.materials[m] if self.materials else int(m) for m in self.material]}
        if values is not None:
            d["values"] = np.asarray(values).tolist()
        return d


def once_edges(triangles: np.ndarray) -> np.ndarray:
    """Sorted vertex pairs that belong to exactly one triangle."""
    e = np.concatenate([triangles[:, [1, 2]], triangles[:, [2, 0]], triangles[:, [0, 1]]])
    e.sort(axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    if np.any(counts > 2):
        raise DegenerateTriangle("an edge is shared by more than two triangles")
    return uniq[counts == 1]


def is_conforming(mesh: TriMesh) -> bool:
    """Edges used once coincide with the tagged boundary and every triangle is positively oriented."""
    if np.any(mesh.signed_areas() <= 0):
        return False
    b = once_edges(mesh.triangles)
    tagged = np.sort(mesh.bnd_edges, axis=1)
    tagged = tagged[np.lexsort((tagged[:, 1], tagged[:, 0]))]
    return b.shape == tagged.shape and bool(np.all(b == tagged))


def _breaks(values: Sequence[float], n: int) -> np.ndarray:
    v = sorted(set(values))
    pts = [v[0]]
    for a, b in zip(v, v[1:]):
        pts.extend(a + (b - a) * np.arange(1, n + 1) / n)
    return np.array(pts, dtype=float)


def mesh_rectangles(rects: Sequence[tuple[float, float, float, float]], n: int = 1,
                    tag_for: Callable[[int, str, float, float], BoundaryTag] | None = None,
                    materials: Sequence[str] = ()) -> TriMesh:
    """Structured mesh of a union of rectangles ``(x0, x1, y0, y1)`` on their common tensor grid.

    Every grid interval is split ``n`` times.  ``tag_for(material, orientation, x, y)`` labels a
    boundary edge from its owning rectangle, orientation ('v' or 'h') and midpoint.
    """
    xs = _breaks([v for r in rects for v in r[:2]], n)
    ys = _breaks([v for r in rects for v in r[2:]], n)
    nx = len(xs)
    used = {}
    tris, mat = [], []

    def vid(i, j):
        key = (i, j)
        if key not in used:
            used[key] = len(used)
        return used[key]

    for j in range(len(ys) - 1):
        for i in range(nx - 1):
            cx, cy = 0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])
            owner = next((k for k, r in enumerate(rects) if r[0] < cx < r[1] and r[2] < cy < r[3]), None)
            if owner is None:
                continue
            v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            # both halves share the diagonal v00-v11 as refinement edge
            tris.append((v10, v11, v00))
            tris.append((v01, v00, v11))
            mat.extend((owner, owner))
    verts = np.zeros((len(used), 2))
    for (i, j), k in used.items():
        verts[k] = (xs[i], ys[j])
    triangles = np.array(tris, dtype=np.int64)
    material = np.array(mat, dtype=np.int64)

    bnd = once_edges(triangles)
    owner_of = {}
    for t, tri in enumerate(triangles):
        for a, b in ((tri[1], tri[2]), (tri[2], tri[0]), (tri[0], tri[1])):
            owner_of[(min(a, b), max(a, b))] = material[t]
    tags: list[BoundaryTag] = []
    tag_ids = []
    for a, b in bnd:
        pa, pb = verts[a], verts[b]
        orient = "v" if pa[0] == pb[0] else "h"
        tag = tag_for(owner_of[(a, b)], orient, 0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])) if tag_for else INSULATED
        if tag not in tags:
            tags.append(tag)
        tag_ids.append(tags.index(tag))
    return TriMesh(verts, triangles, material, bnd.astype(np.int64), np.array(tag_ids, dtype=np.int64),
                   tuple(tags), tuple(materials))


def cross_coordinate(system: System) -> str:
    through = system.components[0].shape.through
    depth = depth_coordinate(system)
    return next(c for c, _, _ in system.components[0].shape.intervals if c not in (through, depth))


def mesh_brick_union(system: System, template: PdeTemplate, n: int = 1) -> TriMesh:
    """Mesh the (x1, cross) section of a brick union; x1 faces take their Robin data from the template."""
    through = system.components[0].shape.through
    cross = cross_coordinate(system)
    rects = []
    for c in system.components:
        x0, x1 = c.shape.interval(through)
        y0, y1 = c.shape.interval(cross)
        rects.append((float(x0), float(x1), float(y0), float(y1)))
    left = min(r[0] for r in rects)
    right = max(r[1] for r in rects)

    def tag_for(m, orient, x, y):
        comp = system.components[m]
        if orient == "h":
            return INSULATED
        port = 0 if x == rects[m][0] else 1
        rec = comp.bc(comp.ports[port].id)
        if rec is None or rec.kind != "robin":
            return INSULATED
        kind = "robin_left" if x == left else "robin_right" if x == right else "robin"
        return BoundaryTag(kind, float(template.value(rec.h)), float(template.value(rec.T_fluid)))

    return mesh_rectangles(rects, n, tag_for, [c.name for c in system.components])
