"""PDE template: components, boundary-condition map, well-posedness and problem class.

The template is the hand-off between the parser and the solvers.  Every
exterior face of every component carries exactly one boundary record, and
all symbols are kept alongside their exact numeric values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .errors import (ConflictingBoundaryCondition, MissingBinding, NonPositiveDimension, Unclassifiable,
                     UncoveredBoundary, UnknownFace)
from .expr import parse_affine
from .frame import BoundaryConditionSpec, DomainSpec, FaceSelector, Frame, QoISpec
from .geometry import BRICK, CYLINDER, Face, Shape, coincident, contact_area, exposed_area

BI_THRESHOLD = 0.1
QUASI1D = "Quasi1d"
GENWALL = "GeneralizedWall"

# selector precedence: a located plane beats "lateral", which beats "all", which beats "remainder"
_RANK = {"plane": 3, "lateral": 2, "all": 1, "remainder": 0}


@dataclass(frozen=True)
class TemplateComponent:
    name: str
    geometry: str
    domain: DomainSpec
    conductivity: str
    cross_section: tuple[str, str] | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "geometry": self.geometry, "domain": self.domain.to_dict(),
                "conductivity": self.conductivity,
                "cross_section": list(self.cross_section) if self.cross_section else None}


@dataclass(frozen=True)
class BCRecord:
    kind: str  # dirichlet | neumann | robin | insulated
    T: str | None = None
    g: str | None = None
    h: str | None = None
    T_fluid: str | None = None
    sentence: int | None = None

    def same_data(self, other: "BCRecord") -> bool:
        return (self.kind, self.T, self.g, self.h, self.T_fluid) == (other.kind, other.T, other.g, other.h, other.T_fluid)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for k in ("T", "g", "h", "T_fluid"):
            if getattr(self, k) is not None:
                d[k] = getattr(self, k)
        return d


@dataclass
class PdeTemplate:
    name: str
    components: list[TemplateComponent]
    bc_map: dict[tuple[str, str], BCRecord]
    qoi: list[QoISpec]
    bindings: dict[str, Fraction]
    coordinate_vars: list[str]
    through_axis: str
    connections: list[tuple[str, str]] = field(default_factory=list)
    volumetric_sources: list = field(default_factory=list)
    exposed: dict[tuple[str, str], Fraction] = field(default_factory=dict)

    def value(self, symbol: str) -> Fraction:
        if symbol not in self.bindings:
            raise MissingBinding(f"symbol {symbol!r} has no numeric value")
        return self.bindings[symbol]

    def component(self, name: str) -> TemplateComponent:
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError(name)

    def shapes(self) -> dict[str, Shape]:
        return {c.name: instantiate_shape(c, self.bindings, self.through_axis) for c in self.components}

    def faces(self) -> dict[str, list[Face]]:
        return {name: s.faces(name) for name, s in self.shapes().items()}

    def robin_records(self) -> list[tuple[tuple[str, str], BCRecord]]:
        return [(k, r) for k, r in sorted(self.bc_map.items()) if r.kind == "robin"]

    def to_dict(self) -> dict:
        return {
            "schema": "template_v1",
            "name": self.name,
            "coordinates": list(self.coordinate_vars),
            "through_axis": self.through_axis,
            "components": [c.to_dict() for c in self.components],
            "boundary_conditions": [
                {"component": c, "face": f, **r.to_dict(), "exposed_area": str(self.exposed.get((c, f), ""))}
                for (c, f), r in sorted(self.bc_map.items())
            ],
            "connections": [list(p) for p in self.connections],
            "volumetric_sources": list(self.volumetric_sources),
            "qoi": [q.to_dict() for q in self.qoi],
            "bindings": {k: str(v) for k, v in sorted(self.bindings.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# assembly

def instantiate_shape(tc: TemplateComponent, bindings: dict[str, Fraction], through: str) -> Shape:
    intervals = []
    for coord, lo, hi in tc.domain.bounds:
        l, h = lo.evaluate(bindings), hi.evaluate(bindings)
        if h <= l:
            raise NonPositiveDimension(f"{tc.name}: empty interval {l} < {coord} < {h}")
        intervals.append((coord, l, h))
    section = None
    if tc.geometry == CYLINDER:
        if tc.cross_section is None:
            raise Unclassifiable(f"{tc.name}: right cylinder without cross-section dimensions")
        section = tuple(parse_affine(s).evaluate(bindings) for s in tc.cross_section)
        if any(v <= 0 for v in section):
            raise NonPositiveDimension(f"{tc.name}: cross-section {section[0]} x {section[1]} is not positive")
    if through not in tc.domain.coords:
        through = tc.domain.coords[0]
    return Shape(tc.geometry, tuple(intervals), through, section)


def _template_component(frame: Frame, name: str) -> TemplateComponent:
    e = frame.entities[name]
    dom = frame.domain_specs[name]
    geometry = e.fact("geometry")
    if geometry is None:
        geometry = CYLINDER if len(dom.bounds) == 1 else BRICK
    section = None
    cs = e.fact("cross_section")
    if cs:
        section = tuple(cs.split(","))
    elif e.fact("dimensions"):
        dims = [d.split("@") for d in e.fact("dimensions").split(",")]
        others = [d for d, axis in dims if axis != frame.through_axis]
        if len(others) == 2:
            section = tuple(others)
    if section is not None and len(section) != 2:
        raise Unclassifiable(f"{name}: cross-section needs two dimensions, got {section}")
    return TemplateComponent(name, geometry, dom, frame.conductivities[name], section)


def _expand_target(frame: Frame, target: str | None) -> list[str]:
    """Components a boundary condition target stands for (parents and archetypes expand)."""
    if target is None:
        return list(frame.components)
    if target in frame.components:
        return [target]
    out = []
    for c in frame.components:
        walk = c
        while walk is not None:
            e = frame.entities[walk]
            if walk == target or e.archetype == target:
                out.append(c)
                break
            walk = e.parent
    return out


def _select_faces(sel: FaceSelector, faces: list[Face], shape: Shape, bindings) -> list[Face]:
    if sel.kind == "plane":
        v = sel.value.evaluate(bindings)
        return [f for f in faces if f.axis == sel.coord and f.value == v]
    if sel.kind == "lateral":
        return [f for f in faces if f.lateral or (f.axis is not None and f.axis != shape.through)]
    return list(faces)


def _record(spec: BoundaryConditionSpec) -> BCRecord:
    if spec.kind == "heat_transfer_coefficient":
        return BCRecord("robin", h=spec.h_symbol, T_fluid=spec.T_fluid_symbol, sentence=spec.sentence)
    if spec.kind == "temperature":
        return BCRecord("dirichlet", T=spec.T_symbol, sentence=spec.sentence)
    if spec.kind == "flux":
        return BCRecord("neumann", g=spec.flux_symbol, sentence=spec.sentence)
    return BCRecord("insulated", sentence=spec.sentence)


def assemble_template(frame: Frame) -> PdeTemplate:
    """Resolve the frame's boundary specs onto component faces."""
    bindings = frame.values()
    comps = [_template_component(frame, n) for n in frame.components]
    through = frame.through_axis or frame.coordinate_vars[0]
    shapes = {c.name: instantiate_shape(c, bindings, through) for c in comps}
    faces = {n: s.faces(n) for n, s in shapes.items()}
    all_faces = [f for fs in faces.values() for f in fs]

    exposed: dict[tuple[str, str], Fraction] = {}
    for f in all_faces:
        area = exposed_area(f, all_faces)
        if area > 0:
            exposed[(f.component, f.id)] = area

    assigned: dict[tuple[str, str], tuple[int, BCRecord]] = {}
    remainder: list[BoundaryConditionSpec] = []
    for spec in frame.bc_specs:
        if spec.face.kind == "remainder":
            remainder.append(spec)
            continue
        targets = _expand_target(frame, spec.target_entity)
        if spec.face.kind == "lateral" and spec.face.owner:
            owned = _expand_target(frame, spec.face.owner)
            targets = [t for t in targets if t in owned] or owned
        rank = _RANK[spec.face.kind]
        rec = _record(spec)
        hit = False
        for t in targets:
            for f in _select_faces(spec.face, faces[t], shapes[t], bindings):
                key = (t, f.id)
                if key not in exposed:
                    if spec.face.kind == "plane" and rec.kind != "insulated":
                        raise ConflictingBoundaryCondition(
                            f"{rec.kind} condition on interior face {f.id} of {t}", sentence=spec.sentence)
                    continue
                hit = True
                prev = assigned.get(key)
                if prev is None or prev[0] < rank:
                    assigned[key] = (rank, rec)
                elif prev[0] == rank and not prev[1].same_data(rec):
                    raise ConflictingBoundaryCondition(
                        f"face {f.id} of {t} has two conditions ({prev[1].kind}, {rec.kind})", sentence=spec.sentence)
        if not hit and spec.face.kind == "plane":
            raise UnknownFace(f"no exterior face at {spec.face.describe()} on {spec.target_entity or 'the domain'}",
                              sentence=spec.sentence)
    for spec in remainder:
        for key in exposed:
            if key not in assigned:
                assigned[key] = (0, _record(spec))

    missing = sorted(k for k in exposed if k not in assigned)
    if missing:
        c, f = missing[0]
        raise UncoveredBoundary(f"face {f} of {c} has no boundary condition")

    connections = []
    names = set(frame.components)
    for e in frame.graph.edges:
        if e.a in names and e.b in names:
            connections.append((e.a, e.b))
    return PdeTemplate(
        name=frame.source_name,
        components=comps,
        bc_map={k: v[1] for k, v in sorted(assigned.items())},
        qoi=list(frame.qoi_specs),
        bindings=dict(sorted(bindings.items())),
        coordinate_vars=list(frame.coordinate_vars),
        through_axis=through,
        connections=connections,
        exposed=dict(sorted(exposed.items())),
    )


# ---------------------------------------------------------------------------
# well-posedness

@dataclass(frozen=True)
class Defect:
    code: str
    message: str

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message}


@dataclass(frozen=True)
class Diagnosis:
    defects: tuple[Defect, ...] = ()
    notes: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.defects

    def to_dict(self) -> dict:
        return {"ok": self.ok, "defects": [d.to_dict() for d in self.defects], "notes": list(self.notes)}


def contact_groups(template: PdeTemplate) -> list[list[str]]:
    """Components grouped by face contact."""
    faces = template.faces()
    names = [c.name for c in template.components]
    parent = {n: n for n in names}

    def find(n):
        while parent[n] != n:
            parent[n] = parent[parent[n]]
            n = parent[n]
        return n

    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if any(contact_area(f, g) > 0 for f in faces[a] for g in faces[b]):
                parent[find(a)] = find(b)
    groups: dict[str, list[str]] = {}
    for n in names:
        groups.setdefault(find(n), []).append(n)
    return list(groups.values())


def check_well_posed(template: PdeTemplate) -> Diagnosis:
    defects: list[Defect] = []
    notes: list[str] = []
    needed = set()
    for c in template.components:
        needed.add(c.conductivity)
    for rec in template.bc_map.values():
        needed.update(s for s in (rec.T, rec.g, rec.h, rec.T_fluid) if s)
    unbound = sorted(s for s in needed if s not in template.bindings)
    for s in unbound:
        defects.append(Defect("MissingBinding", f"symbol {s} has no value"))
    if unbound:
        return Diagnosis(tuple(defects))

    for c in template.components:
        if template.value(c.conductivity) <= 0:
            defects.append(Defect("NonPositiveConductivity", f"{c.name}: {c.conductivity} = {template.value(c.conductivity)}"))
    for (comp, face), rec in template.bc_map.items():
        if rec.kind == "robin" and template.value(rec.h) < 0:
            defects.append(Defect("NegativeHeatTransferCoefficient", f"{comp} {face}: {rec.h} = {template.value(rec.h)}"))

    def anchored(group: Iterable[str]) -> bool:
        for (comp, _), rec in template.bc_map.items():
            if comp in group and (rec.kind == "dirichlet" or (rec.kind == "robin" and template.value(rec.h) > 0)):
                return True
        return False

    groups = contact_groups(template)
    if len(groups) == 1 and not anchored(groups[0]):
        net = Fraction(0)
        for key, rec in template.bc_map.items():
            if rec.kind == "neumann":
                net += template.value(rec.g) * template.exposed[key]
        if net != 0:
            defects.append(Defect("PureNeumannImbalance", f"prescribed fluxes do not balance (net {net})"))
        else:
            defects.append(Defect("PureNeumannUnanchored", "solution unique up to a constant"))
    elif len(groups) > 1:
        for g in groups:
            if not anchored(g):
                defects.append(Defect("DisconnectedUnanchored", f"no temperature anchor for {', '.join(g)}"))
    if not defects:
        notes.append("well posed")
    return Diagnosis(tuple(defects), tuple(notes))


# ---------------------------------------------------------------------------
# Biot number and problem class

@dataclass(frozen=True)
class BiotNumber:
    value: float
    h_max: Fraction
    k_min: Fraction
    A: Fraction
    P: Fraction

    @property
    def exact(self) -> Fraction:
        return self.h_max * (self.A / self.P) / self.k_min

    def to_dict(self) -> dict:
        return {"value": self.value, "h_max": float(self.h_max), "k_min": float(self.k_min),
                "A": float(self.A), "P": float(self.P)}


def compute_biot(template: PdeTemplate) -> BiotNumber:
    shapes = template.shapes()
    first = next(iter(shapes.values()))
    A, P = first.cross_area, first.perimeter
    hs = [template.value(r.h) for _, r in template.robin_records()]
    h_max = max(hs) if hs else Fraction(0)
    k_min = min(template.value(c.conductivity) for c in template.components)
    value = h_max * (A / P) / k_min
    return BiotNumber(float(value), h_max, k_min, A, P)


@dataclass(frozen=True)
class ProblemClass:
    tag: str
    metadata: tuple[tuple[str, object], ...] = ()

    def meta(self) -> dict:
        return dict(self.metadata)

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.metadata:
            if isinstance(v, Fraction):
                v = float(v)
            elif hasattr(v, "to_dict"):
                v = v.to_dict()
            out[k] = v
        return {"tag": self.tag, "metadata": out}


def _is_single_stack(template: PdeTemplate, shapes: dict[str, Shape]) -> bool:
    if len(template.coordinate_vars) != 1 and any(len(s.intervals) != 1 for s in shapes.values()):
        return False
    spans = sorted(s.interval(s.through) for s in shapes.values())
    return all(spans[i][1] == spans[i + 1][0] for i in range(len(spans) - 1))


def _classify_quasi1d(template: PdeTemplate, shapes: dict[str, Shape], bi_threshold: float) -> ProblemClass:
    if any(s.kind != CYLINDER for s in shapes.values()):
        raise Unclassifiable("quasi-1d needs right cylinder components")
    if not _is_single_stack(template, shapes):
        raise Unclassifiable("components do not form a single contiguous stack")
    sections = {(s.cross_area, s.perimeter) for s in shapes.values()}
    if len(sections) != 1:
        raise Unclassifiable("cross-section area or perimeter varies between components")
    lateral_robin = False
    for (comp, face), rec in template.bc_map.items():
        if face == "lateral":
            if rec.kind == "robin":
                lateral_robin = True
            elif rec.kind != "insulated":
                raise Unclassifiable(f"{rec.kind} condition on the lateral face of {comp}")
    if any(q.kind == "nondimensional_H_with_bounds" for q in template.qoi):
        raise Unclassifiable("bounds on H are only defined for generalized walls")
    biot = compute_biot(template)
    gate = "skipped (no lateral exchange)"
    if lateral_robin:
        if biot.value > bi_threshold:
            raise Unclassifiable(f"Biot number {biot.value:.4g} exceeds {bi_threshold}")
        gate = "small"
    A, P = next(iter(sections))
    return ProblemClass(QUASI1D, (("A", A), ("P", P), ("Bi", biot), ("bi_gate", gate),
                                  ("bi_threshold", bi_threshold), ("lateral_robin", lateral_robin)))


def _classify_genwall(template: PdeTemplate, shapes: dict[str, Shape]) -> ProblemClass:
    if any(s.kind != BRICK for s in shapes.values()):
        raise Unclassifiable("generalized wall needs parallelepiped components")
    x1 = template.through_axis
    faces = template.faces()
    all_faces = [f for fs in faces.values() for f in fs]
    for i, f in enumerate(all_faces):
        for g in all_faces[i + 1:]:
            if contact_area(f, g) > 0 and not coincident(f, g):
                raise Unclassifiable(f"{f.component} and {g.component} touch on part of a face only")
    left = min(s.interval(x1)[0] for s in shapes.values())
    right = max(s.interval(x1)[1] for s in shapes.values())
    sides: dict[str, set[tuple[str, str]]] = {"left": set(), "right": set()}
    for (comp, fid), rec in template.bc_map.items():
        f = next(x for x in faces[comp] if x.id == fid)
        extreme = None
        if f.axis == x1 and f.value == left:
            extreme = "left"
        elif f.axis == x1 and f.value == right:
            extreme = "right"
        if extreme is None:
            if rec.kind != "insulated":
                raise Unclassifiable(f"{rec.kind} condition on {comp} face {fid}, away from the x1 extremes")
            continue
        if rec.kind == "robin":
            sides[extreme].add((rec.h, rec.T_fluid))
        elif rec.kind != "insulated":
            raise Unclassifiable(f"{rec.kind} condition on an extreme face; only Robin or insulated allowed")
    for side, pairs in sides.items():
        if len(pairs) != 1:
            raise Unclassifiable(f"{side} x1 face needs exactly one (h, T) pair, found {len(pairs)}")
    (h_l, T_l), = sides["left"]
    (h_r, T_r), = sides["right"]
    if any(q.kind != "nondimensional_H_with_bounds" for q in template.qoi):
        raise Unclassifiable("generalized wall accepts only the nondimensional heat rate as QoI")
    return ProblemClass(GENWALL, (("x1", x1), ("x1_left", left), ("x1_right", right),
                                  ("h_left", h_l), ("T_left", T_l), ("h_right", h_r), ("T_right", T_r)))


def classify_problem(template: PdeTemplate, bi_threshold: float = BI_THRESHOLD) -> ProblemClass:
    shapes = template.shapes()
    kinds = {s.kind for s in shapes.values()}
    if kinds == {CYLINDER}:
        return _classify_quasi1d(template, shapes, bi_threshold)
    if kinds == {BRICK}:
        return _classify_genwall(template, shapes)
    raise Unclassifiable("mixed geometry classes")
