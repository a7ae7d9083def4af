"""Nondimensional heat rate H for generalized walls and its variational bounds.

With the quadratic functional ``J(w) = a(w, w)/2 - F(w)`` (conduction plus Robin
mass, Robin load), the exact field satisfies ``(T_hot - T_cold) Q = 2J(T) + C2``,
so ``H = C1 (2J(T) + C2)``.  Minimizing J over a smaller space (fields uniform
on each slice part) raises 2J and gives an upper bound; minimizing over a
larger space (parallelepipeds decoupled) lowers it and gives a lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .components import (CoalescedMap, ParallelepipedSet, SliceSet, System, coalesce_slice_dofs,
                         find_parallelepipeds, find_slices)
from .errors import SingularSystem
from .template import GENWALL, PdeTemplate, ProblemClass

ORDERING_TOL = 1e-12


@dataclass(frozen=True)
class HConstants:
    k: Fraction
    T_hot: Fraction
    T_cold: Fraction
    length: Fraction
    depth_coord: str
    depth: Fraction
    C1: Fraction | None  # None when the drive T_hot - T_cold vanishes
    C2: Fraction
    area_left: Fraction
    area_right: Fraction
    h_left: Fraction
    T_left: Fraction
    h_right: Fraction
    T_right: Fraction

    @property
    def delta_T(self) -> Fraction:
        return self.T_hot - self.T_cold

    def H(self, two_j: float) -> float:
        if self.C1 is None:
            return 0.0
        return float(self.C1) * (two_j + float(self.C2))

    def to_dict(self) -> dict:
        return {"C1": None if self.C1 is None else float(self.C1), "C2": float(self.C2),
                "k": float(self.k), "delta_T": float(self.delta_T), "length": float(self.length),
                "area_left": float(self.area_left), "area_right": float(self.area_right)}


def depth_coordinate(system: System) -> str:
    """First non-through coordinate over which every brick has the same extent."""
    comps = system.components
    through = comps[0].shape.through
    for c, _, _ in comps[0].shape.intervals:
        if c == through:
            continue
        ivs = {comp.shape.interval(c) for comp in comps}
        if len(ivs) == 1:
            return c
    raise ValueError("components share no common extent in any cross coordinate")


def _robin_faces(system: System, template: PdeTemplate):
    """(component index, port, area, h, T_f) for every Robin x1 face."""
    out = []
    for i, c in enumerate(system.components):
        for p, face in enumerate(c.ports):
            rec = c.bc(face.id)
            if rec is not None and rec.kind == "robin":
                area = template.exposed.get((c.name, face.id), face.area)
                out.append((i, p, area, template.value(rec.h), template.value(rec.T_fluid)))
    return out


def compute_constants(template: PdeTemplate, system: System, cls: ProblemClass | None = None) -> HConstants:
    meta = cls.meta() if cls is not None and cls.tag == GENWALL else {}
    norm = {}
    for q in template.qoi:
        if q.kind == "nondimensional_H_with_bounds":
            norm = q.norm()
            break
    depth_c = depth_coordinate(system)
    lo, hi = system.components[0].shape.interval(depth_c)
    depth = hi - lo
    robin = _robin_faces(system, template)
    left = min(c.x_left for c in system.components)
    right = max(c.x_right for c in system.components)
    lefts = [r for r in robin if system.components[r[0]].ports[r[1]].value == left]
    rights = [r for r in robin if system.components[r[0]].ports[r[1]].value == right]
    h_l, T_l = (lefts[0][3], lefts[0][4]) if lefts else (Fraction(0), Fraction(0))
    h_r, T_r = (rights[0][3], rights[0][4]) if rights else (Fraction(0), Fraction(0))
    if "h_left" in meta:
        h_l, T_l = template.value(meta["h_left"]), template.value(meta["T_left"])
        h_r, T_r = template.value(meta["h_right"]), template.value(meta["T_right"])

    k = template.value(norm["k"]) if "k" in norm else system.components[0].conductivity
    T_hot = template.value(norm["T_hot"]) if "T_hot" in norm else T_l
    T_cold = template.value(norm["T_cold"]) if "T_cold" in norm else T_r
    length = template.value(norm["length"]) if "length" in norm else depth
    dT = T_hot - T_cold
    C1 = None if dT == 0 else 1 / (k * dT * dT * length)
    C2 = sum((h * T_f * T_f * area for _, _, area, h, T_f in robin), Fraction(0))
    return HConstants(k, T_hot, T_cold, length, depth_c, depth, C1, C2,
                      sum((r[2] for r in lefts), Fraction(0)), sum((r[2] for r in rights), Fraction(0)),
                      h_l, T_l, h_r, T_r)


# ---------------------------------------------------------------------------
# discrete minimization

@dataclass(frozen=True)
class Minimizer:
    w: np.ndarray
    two_j: float
    identity_gap: float  # relative gap between -F(w) and a(w,w) - 2F(w)


def _minimize(K: np.ndarray, f: np.ndarray) -> Minimizer:
    if K.shape[0] == 0:
        return Minimizer(np.zeros(0), 0.0, 0.0)
    try:
        w = cho_solve(cho_factor(K), f)
    except LinAlgError as exc:
        raise SingularSystem("bound system is singular") from exc
    two_j = float(-f @ w)
    direct = float(w @ K @ w - 2.0 * f @ w)
    scale = max(abs(two_j), abs(direct), 1e-300)
    return Minimizer(w, two_j, abs(two_j - direct) / scale)


def _add_bar(K: np.ndarray, a: int, b: int, g: float) -> None:
    K[a, a] += g
    K[b, b] += g
    K[a, b] -= g
    K[b, a] -= g


@dataclass
class UpperBound:
    H: float
    two_j: float
    dof_values: list[float]
    dof_x: list[float]
    identity_gap: float
    n_dofs: int


def compute_upper_bound(system: System, template: PdeTemplate, constants: HConstants,
                        slices: SliceSet | None = None, split_parts: bool = True) -> UpperBound:
    """Minimize J over fields that are uniform on each connected part of every slice."""
    slices = slices or find_slices(system)
    cmap: CoalescedMap = coalesce_slice_dofs(system, slices, split_parts)
    n = cmap.n
    K = np.zeros((n, n))
    f = np.zeros(n)
    for i, c in enumerate(system.components):
        stations = [j for j, x in enumerate(slices.x1_values) if c.x_left <= x <= c.x_right]
        A = c.shape.cross_area
        for j0, j1 in zip(stations, stations[1:]):
            dx = slices.x1_values[j1] - slices.x1_values[j0]
            g = float(c.conductivity * A / dx)
            _add_bar(K, cmap.dof_at(slices, i, j0), cmap.dof_at(slices, i, j1), g)
    for i, p, area, h, T_f in _robin_faces(system, template):
        d = cmap.port_map[(i, p)]
        K[d, d] += float(h * area)
        f[d] += float(h * area * T_f)
    m = _minimize(K, f)
    xs = [float(slices.x1_values[j]) for j in cmap.station_of_dof]
    return UpperBound(constants.H(m.two_j), m.two_j, m.w.tolist(), xs, m.identity_gap, n)


@dataclass
class MemberField:
    members: tuple[str, ...]
    x: list[float]
    T: list[float]
    two_j: float
    loaded: bool


@dataclass
class LowerBound:
    H: float
    two_j: float
    members: list[MemberField]
    identity_gap: float


def compute_lower_bound(system: System, template: PdeTemplate, constants: HConstants,
                        ppds: ParallelepipedSet | None = None) -> LowerBound:
    """Minimize J with each parallelepiped free of its neighbours (insulator cuts between them)."""
    ppds = ppds or find_parallelepipeds(system)
    robin = {(i, p): (area, h, T_f) for i, p, area, h, T_f in _robin_faces(system, template)}
    total, gap, fields = 0.0, 0.0, []
    comps = system.components
    for ppd in ppds.members:
        names = tuple(comps[i].name for i in ppd.members)
        xs = [float(comps[ppd.members[0]].x_left)] + [float(comps[i].x_right) for i in ppd.members]
        loads = [(0, robin.get((ppd.members[0], 0))), (len(xs) - 1, robin.get((ppd.members[-1], 1)))]
        if all(r is None for _, r in loads):
            # no loaded face: the constant mode is pinned to zero mean and J vanishes
            fields.append(MemberField(names, xs, [0.0] * len(xs), 0.0, False))
            continue
        n = len(xs)
        K = np.zeros((n, n))
        f = np.zeros(n)
        for e, i in enumerate(ppd.members):
            c = comps[i]
            _add_bar(K, e, e + 1, float(c.conductivity * c.shape.cross_area / c.shape.length))
        for d, r in loads:
            if r is not None:
                area, h, T_f = r
                K[d, d] += float(h * area)
                f[d] += float(h * area * T_f)
        m = _minimize(K, f)
        total += m.two_j
        gap = max(gap, m.identity_gap)
        fields.append(MemberField(names, xs, m.w.tolist(), m.two_j, True))
    return LowerBound(constants.H(total), total, fields, gap)


# ---------------------------------------------------------------------------
# H from a field and the bound panel

def evaluate_H_from_field(left_edges: Iterable[tuple[float, float, float]], constants: HConstants) -> float:
    """H from piecewise-linear boundary data on the left Robin face.

    ``left_edges`` yields ``(length, T_a, T_b)`` per boundary edge of the
    cross-section; the integral of ``h (T_in - T)`` is exact for linear T and
    is scaled by the depth.
    """
    if constants.C1 is None:
        return 0.0
    h, T_in = float(constants.h_left), float(constants.T_left)
    q = sum(h * (T_in - 0.5 * (ta + tb)) * ln for ln, ta, tb in left_edges) * float(constants.depth)
    return q / float(constants.k * constants.delta_T * constants.length)


@dataclass
class BoundResult:
    H_LB: float
    H_UB: float
    H_FE: float | None = None
    fe_error_estimate: float | None = None
    upper: UpperBound | None = None
    lower: LowerBound | None = None
    constants: HConstants | None = None
    notes: list[str] = field(default_factory=list)

    def panel(self) -> dict:
        return {"H_LB": self.H_LB, "H_UB": self.H_UB, "H_FE": self.H_FE, "fe_error_estimate": self.fe_error_estimate}


@dataclass(frozen=True)
class OrderingReport:
    ok: bool
    violations: tuple[str, ...]
    width: float

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": list(self.violations), "width": self.width}


def check_ordering(result: BoundResult) -> OrderingReport:
    bad = []
    if result.H_LB > result.H_UB + ORDERING_TOL:
        bad.append(f"H_LB = {result.H_LB!r} exceeds H_UB = {result.H_UB!r}")
    if result.H_FE is not None:
        eps = result.fe_error_estimate or 0.0
        if result.H_FE < result.H_LB - eps - ORDERING_TOL:
            bad.append(f"H_FE = {result.H_FE!r} below H_LB - eps = {result.H_LB - eps!r}")
        if result.H_FE > result.H_UB + eps + ORDERING_TOL:
            bad.append(f"H_FE = {result.H_FE!r} above H_UB + eps = {result.H_UB + eps!r}")
    return OrderingReport(not bad, tuple(bad), result.H_UB - result.H_LB)


def compute_bounds(system: System, template: PdeTemplate, cls: ProblemClass | None = None) -> BoundResult:
    constants = compute_constants(template, system, cls)
    ub = compute_upper_bound(system, template, constants)
    lb = compute_lower_bound(system, template, constants)
    notes = []
    for name, gap in (("upper", ub.identity_gap), ("lower", lb.identity_gap)):
        if gap > 1e-10:
            notes.append(f"{name} bound minimizer identity gap {gap:.3g}")
    return BoundResult(lb.H, ub.H, upper=ub, lower=lb, constants=constants, notes=notes)
