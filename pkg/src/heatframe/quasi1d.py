"""Closed-form solver for quasi-one-dimensional stacks.

Each component is condensed onto its two ports: a linear wall element when
the lateral face is insulated, or a fin element (hyperbolic basis plus a
lift carrying the ambient temperature) when it exchanges heat laterally.
The condensed elements are assembled over the global port dofs and solved
directly.

Sign conventions: the element relation is ``K u = f + q`` with ``q`` the heat
flowing *into* the component through each port.  Reported fluxes and heat
rates are positive when heat leaves the domain through the face (outward
normal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .components import Component, System
from .errors import LocationOutsideDomain, SingularSystem
from .expr import Affine
from .frame import QoISpec
from .template import BCRecord, PdeTemplate

_SERIES_LIMIT = 1e-6


@dataclass(frozen=True)
class CondensedElement:
    K: np.ndarray
    f: np.ndarray
    kind: str  # wall_linear | fin
    m: float = 0.0
    T_f: float = 0.0
    h_lat: float = 0.0


def _csch_coth(x: float) -> tuple[float, float]:
    e = math.exp(-2.0 * x)
    coth = (1.0 + e) / (1.0 - e)
    csch = 2.0 * math.exp(-x) / (1.0 - e)
    return csch, coth


def condense_wall(k: float, A: float, L: float) -> CondensedElement:
    g = k * A / L
    return CondensedElement(np.array([[g, -g], [-g, g]]), np.zeros(2), "wall_linear")


def condense_fin(k: float, A: float, P: float, L: float, h: float, T_f: float) -> CondensedElement:
    """Port stiffness and load of ``kA T'' = hP (T - T_f)`` on a segment of length L."""
    if h == 0.0:
        return condense_wall(k, A, L)
    m = math.sqrt(h * P / (k * A))
    x = m * L
    if x < _SERIES_LIMIT:
        g = k * A / L
        s = h * P * L
        K = np.array([[g + s / 3.0, -g + s / 6.0], [-g + s / 6.0, g + s / 3.0]])
        f = np.full(2, s * T_f / 2.0)
        return CondensedElement(K, f, "fin", m, T_f, h)
    mu = k * A * m
    csch, coth = _csch_coth(x)
    K = mu * np.array([[coth, -csch], [-csch, coth]])
    f = np.full(2, mu * T_f * math.tanh(x / 2.0))
    return CondensedElement(K, f, "fin", m, T_f, h)


def augment_axial(el: CondensedElement, port: int, rec: BCRecord, values: dict[str, Fraction], area: float) -> CondensedElement:
    """Robin adds ``hA`` to the diagonal and ``hA T_f`` to the load; Neumann adds ``qA`` (inflow positive)."""
    K, f = el.K.copy(), el.f.copy()
    if rec.kind == "robin":
        h, T_f = float(values[rec.h]), float(values[rec.T_fluid])
        K[port, port] += h * area
        f[port] += h * area * T_f
    elif rec.kind == "neumann":
        f[port] += float(values[rec.g]) * area
    return CondensedElement(K, f, el.kind, el.m, el.T_f, el.h_lat)


@dataclass(frozen=True)
class Segment:
    """Closed-form field on one component, ``s = x - x0`` in ``[0, L]``."""

    component: str
    kind: str
    x0: float
    x1: float
    k: float
    A: float
    P: float
    h: float
    T_f: float
    m: float
    T0: float
    T1: float

    @property
    def L(self) -> float:
        return self.x1 - self.x0

    def _basis(self, s):
        """(phi0, phi1) with phi0(0) = 1, phi0(L) = 0 and phi1 the mirror."""
        s = np.asarray(s, dtype=float)
        if self.kind != "fin" or self.m * self.L < _SERIES_LIMIT:
            return 1.0 - s / self.L, s / self.L
        m, L = self.m, self.L
        # sinh(m(L - s)) / sinh(mL) written with decaying exponentials
        d = 1.0 - np.exp(-2.0 * m * L)
        phi0 = (np.exp(-m * s) - np.exp(-m * (2.0 * L - s))) / d
        phi1 = (np.exp(-m * (L - s)) - np.exp(-m * (L + s))) / d
        return phi0, phi1

    def T(self, x):
        s = np.asarray(x, dtype=float) - self.x0
        if self.kind != "fin":
            p0, p1 = self._basis(s)
            return self.T0 * p0 + self.T1 * p1
        p0, p1 = self._basis(s)
        return self.T_f + (self.T0 - self.T_f) * p0 + (self.T1 - self.T_f) * p1

    def dT(self, x):
        s = np.asarray(x, dtype=float) - self.x0
        if self.kind != "fin" or self.m * self.L < _SERIES_LIMIT:
            return np.full_like(s, (self.T1 - self.T0) / self.L)
        m, L = self.m, self.L
        d = 1.0 - np.exp(-2.0 * m * L)
        dphi0 = -m * (np.exp(-m * s) + np.exp(-m * (2.0 * L - s))) / d
        dphi1 = m * (np.exp(-m * (L - s)) + np.exp(-m * (L + s))) / d
        return (self.T0 - self.T_f) * dphi0 + (self.T1 - self.T_f) * dphi1

    def d2T(self, x):
        if self.kind != "fin":
            return np.zeros_like(np.asarray(x, dtype=float))
        return self.m ** 2 * (self.T(x) - self.T_f)

    def coefficients(self) -> dict:
        """``T = T_f + c1 sinh(m s) + c2 cosh(m s)`` for fins, ``T0 + slope s`` for walls."""
        if self.kind != "fin":
            return {"form": "affine", "T0": self.T0, "slope": (self.T1 - self.T0) / self.L, "x0": self.x0}
        x = self.m * self.L
        c2 = self.T0 - self.T_f
        c1 = (self.T1 - self.T_f - c2 * math.cosh(x)) / math.sinh(x) if x < 700 else float("nan")
        return {"form": "fin", "T_f": self.T_f, "m": self.m, "c1": c1, "c2": c2, "x0": self.x0}

    def lateral_heat_rate(self) -> float:
        """Outward heat rate through the lateral face, ``hP * integral of (T - T_f)``."""
        if self.kind != "fin":
            return 0.0
        x = self.m * self.L
        if x < _SERIES_LIMIT:
            return self.h * self.P * self.L * ((self.T0 + self.T1) / 2.0 - self.T_f)
        return self.h * self.P * (self.T0 + self.T1 - 2.0 * self.T_f) * math.tanh(x / 2.0) / self.m

    def to_dict(self) -> dict:
        return {"component": self.component, "kind": self.kind, "x0": self.x0, "x1": self.x1,
                "T0": self.T0, "T1": self.T1, "closed_form": self.coefficients()}


@dataclass
class Quasi1dSolution:
    port_values: dict[int, float]
    dof_x: list[float]
    segments: list[Segment]
    residual: float
    boundary_rates: dict[str, float] = field(default_factory=dict)
    qoi_results: list[tuple[QoISpec, object]] = field(default_factory=list)

    def T(self, x: float) -> float:
        for seg in self.segments:
            if seg.x0 - 1e-12 <= x <= seg.x1 + 1e-12:
                return float(seg.T(x))
        raise LocationOutsideDomain(f"x = {x} is outside the domain [{self.segments[0].x0}, {self.segments[-1].x1}]")

    def samples(self, per_component: int = 200) -> list[dict]:
        out = []
        for seg in self.segments:
            xs = np.linspace(seg.x0, seg.x1, per_component)
            out.append({"component": seg.component, "x": xs.tolist(), "T": np.asarray(seg.T(xs)).tolist()})
        return out


def condense_component(comp: Component, values: dict[str, Fraction]) -> CondensedElement:
    k = float(comp.conductivity)
    A, P, L = float(comp.shape.cross_area), float(comp.shape.perimeter), float(comp.shape.length)
    lat = comp.bc("lateral")
    if lat is not None and lat.kind == "robin":
        el = condense_fin(k, A, P, L, float(values[lat.h]), float(values[lat.T_fluid]))
    else:
        el = condense_wall(k, A, L)
    for port, face in enumerate(comp.ports):
        rec = comp.bc(face.id)
        if rec is not None:
            el = augment_axial(el, port, rec, values, float(A))
    return el


def assemble_and_solve(system: System, elements: list[CondensedElement], template: PdeTemplate) -> tuple[np.ndarray, float]:
    """Direct stiffness assembly over ports, Dirichlet elimination, Cholesky solve."""
    n = system.n_global
    K = np.zeros((n, n))
    f = np.zeros(n)
    for i, el in enumerate(elements):
        dofs = [system.dof_map[(i, 0)], system.dof_map[(i, 1)]]
        for a in range(2):
            f[dofs[a]] += el.f[a]
            for b in range(2):
                K[dofs[a], dofs[b]] += el.K[a, b]
    fixed: dict[int, float] = {}
    for i, comp in enumerate(system.components):
        for p, face in enumerate(comp.ports):
            rec = comp.bc(face.id)
            if rec is not None and rec.kind == "dirichlet":
                fixed[system.dof_map[(i, p)]] = float(template.value(rec.T))
    free = [d for d in range(n) if d not in fixed]
    u = np.zeros(n)
    for d, v in fixed.items():
        u[d] = v
    residual = 0.0
    if free:
        Kff = K[np.ix_(free, free)]
        rhs = f[free] - K[np.ix_(free, list(fixed))] @ u[list(fixed)] if fixed else f[free]
        try:
            factor = cho_factor(Kff)
        except LinAlgError as exc:
            raise SingularSystem("port system is singular (no temperature anchor)") from exc
        uf = cho_solve(factor, rhs)
        cond = np.linalg.cond(Kff)
        if not np.isfinite(cond) or cond > 1e14:
            raise SingularSystem(f"port system is numerically singular (condition {cond:.3g})")
        u[free] = uf
        scale = max(np.abs(rhs).max(), np.abs(Kff).max() * np.abs(uf).max(), 1e-300)
        residual = float(np.abs(Kff @ uf - rhs).max() / scale)
    return u, residual


def reconstruct_field(u: np.ndarray, system: System, template: PdeTemplate) -> list[Segment]:
    values = template.bindings
    segs = []
    for i, comp in enumerate(system.components):
        lat = comp.bc("lateral")
        fin = lat is not None and lat.kind == "robin" and values[lat.h] > 0
        k = float(comp.conductivity)
        A, P = float(comp.shape.cross_area), float(comp.shape.perimeter)
        h = float(values[lat.h]) if fin else 0.0
        T_f = float(values[lat.T_fluid]) if fin else 0.0
        m = math.sqrt(h * P / (k * A)) if fin else 0.0
        segs.append(Segment(comp.name, "fin" if fin else "wall_linear", float(comp.x_left), float(comp.x_right),
                            k, A, P, h, T_f, m, float(u[system.dof_map[(i, 0)]]), float(u[system.dof_map[(i, 1)]])))
    segs.sort(key=lambda s: s.x0)
    return segs


def _face_flux(seg: Segment, side: str) -> float:
    """Outward conductive flux ``-k dT/dn`` at an end of a segment."""
    x = seg.x0 if side == "lo" else seg.x1
    grad = float(seg.dT(x))
    return seg.k * grad if side == "lo" else -seg.k * grad


def boundary_heat_rates(system: System, segments: list[Segment]) -> dict[str, float]:
    """Outward heat rate through every exterior face (including fin laterals)."""
    by_name = {s.component: s for s in segments}
    out = {}
    x_lo = min(s.x0 for s in segments)
    x_hi = max(s.x1 for s in segments)
    for comp in system.components:
        seg = by_name[comp.name]
        for side, face in zip(("lo", "hi"), comp.ports):
            x = seg.x0 if side == "lo" else seg.x1
            if (side == "lo" and x == x_lo) or (side == "hi" and x == x_hi):
                out[f"{comp.name}:{face.id}"] = _face_flux(seg, side) * seg.A
        out[f"{comp.name}:lateral"] = seg.lateral_heat_rate()
    return out


def _locate(spec: QoISpec, template: PdeTemplate) -> float:
    if spec.location is not None:
        return float(spec.location.evaluate(template.bindings))
    if spec.face is not None and spec.face.kind == "plane":
        return float(spec.face.value.evaluate(template.bindings))
    raise LocationOutsideDomain("quantity of interest has no location")


def evaluate_qoi(solution: Quasi1dSolution, spec: QoISpec, template: PdeTemplate):
    if spec.kind == "temperature_field_plot":
        return solution.samples()
    x = _locate(spec, template)
    segs = solution.segments
    if not (segs[0].x0 - 1e-12 <= x <= segs[-1].x1 + 1e-12):
        raise LocationOutsideDomain(f"x = {x} is outside [{segs[0].x0}, {segs[-1].x1}]")
    if spec.kind == "temperature_at_point":
        return solution.T(x)
    # the face's outward normal points to -x at the left end, +x elsewhere
    seg = next(s for s in segs if s.x0 - 1e-12 <= x <= s.x1 + 1e-12)
    grad = float(seg.dT(x))
    flux = seg.k * grad if abs(x - segs[0].x0) <= 1e-12 else -seg.k * grad
    if spec.kind == "flux_at_face":
        return flux
    if spec.kind == "heat_rate_at_face":
        return flux * seg.A
    raise ValueError(f"unsupported quantity {spec.kind!r} for a quasi-1d problem")


def solve_quasi1d(system: System, template: PdeTemplate) -> Quasi1dSolution:
    elements = [condense_component(c, template.bindings) for c in system.components]
    u, residual = assemble_and_solve(system, elements, template)
    if residual > 1e-10:
        raise SingularSystem(f"port solve residual {residual:.3g} exceeds 1e-10")
    segments = reconstruct_field(u, system, template)
    sol = Quasi1dSolution({d: float(u[d]) for d in range(system.n_global)},
                          [float(x) for x in system.dof_x], segments, residual)
    sol.boundary_rates = boundary_heat_rates(system, segments)
    sol.qoi_results = [(q, evaluate_qoi(sol, q, template)) for q in template.qoi]
    return sol
