"""Semantic frame: entities, snippets, connection graph and problem data."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .expr import Affine


@dataclass
class Entity:
    canonical_name: str
    aliases: set[str] = field(default_factory=set)
    attributes: set[str] = field(default_factory=set)
    state: str = "unknown"
    parent: Optional[str] = None
    archetype: Optional[str] = None
    is_insulator: bool = False
    is_archetype: bool = False
    first_mention: tuple[int, int] = (0, 0)

    def fact(self, key: str) -> str | None:
        """Value of a keyed attribute ``key=value``, if any."""
        prefix = key + "="
        for a in sorted(self.attributes):
            if a.startswith(prefix):
                return a[len(prefix):]
        return None

    def has_fact(self, key: str) -> bool:
        return self.fact(key) is not None

    def plain_attributes(self) -> list[str]:
        return sorted(a for a in self.attributes if "=" not in a)

    def to_dict(self) -> dict:
        return {
            "name": self.canonical_name,
            "aliases": sorted(self.aliases),
            "attributes": sorted(self.attributes),
            "state": self.state,
            "parent": self.parent,
            "archetype": self.archetype,
            "is_insulator": self.is_insulator,
            "is_archetype": self.is_archetype,
        }


@dataclass(frozen=True)
class Snippet:
    subject: str
    verb: str
    object_or_complement: str
    sentence_index: int
    kind: str = "other"
    object_is_entity: bool = False


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    word: str
    sentence: int

    @property
    def key(self) -> tuple[str, str]:
        return (self.a, self.b) if self.a <= self.b else (self.b, self.a)


@dataclass
class ConnectionGraph:
    nodes: list[str] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)

    def add_edge(self, a: str, b: str, word: str, sentence: int) -> None:
        if a == b:
            return
        if a not in self.nodes or b not in self.nodes:
            raise KeyError(f"edge endpoint not a node: {a!r}, {b!r}")
        e = Edge(a, b, word, sentence)
        if any(x.key == e.key for x in self.edges):
            return
        self.edges.append(e)

    def degree(self, name: str) -> int:
        return sum(1 for e in self.edges if name in (e.a, e.b))

    def neighbors(self, name: str) -> list[str]:
        out = []
        for e in self.edges:
            if e.a == name:
                out.append(e.b)
            elif e.b == name:
                out.append(e.a)
        return out

    def has_edge(self, a: str, b: str) -> bool:
        k = (a, b) if a <= b else (b, a)
        return any(e.key == k for e in self.edges)

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "edges": [{"a": e.a, "b": e.b, "word": e.word, "sentence": e.sentence} for e in self.edges],
        }


@dataclass(frozen=True)
class SymbolBinding:
    symbol: str
    value: Fraction
    provenance: int

    @property
    def float(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class FaceSelector:
    """Where on a component a boundary condition or QoI applies.

    ``kind`` is ``plane`` (an ``x = expr`` station), ``lateral``,
    ``all`` (every face of the target) or ``remainder`` (every exterior
    face not claimed by another condition).
    """

    kind: str
    coord: str | None = None
    value: Affine | None = None
    owner: str | None = None
    axial: bool = False

    def describe(self) -> str:
        if self.kind == "plane":
            return f"{self.coord} = {self.value}"
        if self.kind == "lateral" and self.owner:
            return f"lateral ({self.owner})"
        return self.kind

    def to_dict(self) -> dict:
        return {"kind": self.kind, "coord": self.coord,
                "value": None if self.value is None else str(self.value),
                "owner": self.owner, "axial": self.axial}


BC_KINDS = ("temperature", "flux", "heat_transfer_coefficient", "insulated")


@dataclass(frozen=True)
class BoundaryConditionSpec:
    kind: str
    target_entity: str | None
    face: FaceSelector
    h_symbol: str | None = None
    T_fluid_symbol: str | None = None
    flux_symbol: str | None = None
    T_symbol: str | None = None
    fluid_entity: str | None = None
    sentence: int | None = None

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ValueError(f"unknown boundary condition kind {self.kind!r}")
        if self.kind == "heat_transfer_coefficient" and not (self.h_symbol and self.T_fluid_symbol):
            raise ValueError("Robin condition needs both h and fluid temperature")
        if self.kind == "insulated" and any((self.h_symbol, self.T_fluid_symbol, self.flux_symbol, self.T_symbol)):
            raise ValueError("insulated condition carries no symbols")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "target": self.target_entity, "face": self.face.to_dict(),
                "h": self.h_symbol, "T_fluid": self.T_fluid_symbol, "flux": self.flux_symbol,
                "T": self.T_symbol, "fluid": self.fluid_entity, "sentence": self.sentence}


QOI_KINDS = ("temperature_field_plot", "temperature_at_point", "flux_at_face",
             "heat_rate_at_face", "nondimensional_H_with_bounds")


@dataclass(frozen=True)
class QoISpec:
    kind: str
    coord: str | None = None
    location: Affine | None = None
    face: FaceSelector | None = None
    target: str | None = None
    symbol: str | None = None
    normalization: tuple[tuple[str, str], ...] | None = None
    sentence: int | None = None

    def __post_init__(self):
        if self.kind not in QOI_KINDS:
            raise ValueError(f"unknown QoI kind {self.kind!r}")

    def norm(self) -> dict[str, str]:
        return dict(self.normalization or ())

    def to_dict(self) -> dict:
        return {"kind": self.kind, "coord": self.coord,
                "location": None if self.location is None else str(self.location),
                "face": None if self.face is None else self.face.to_dict(),
                "target": self.target, "symbol": self.symbol,
                "normalization": self.norm() or None, "sentence": self.sentence}


@dataclass(frozen=True)
class DomainSpec:
    bounds: tuple[tuple[str, Affine, Affine], ...]
    sentence: int | None = None

    def interval(self, coord: str) -> tuple[Affine, Affine] | None:
        for c, lo, hi in self.bounds:
            if c == coord:
                return lo, hi
        return None

    @property
    def coords(self) -> tuple[str, ...]:
        return tuple(c for c, _, _ in self.bounds)

    def to_dict(self) -> dict:
        return {c: [str(lo), str(hi)] for c, lo, hi in self.bounds}


@dataclass
class Frame:
    source_name: str = "<string>"
    sentences: tuple[str, ...] = ()
    tokens: list = field(default_factory=list)
    chunks: list = field(default_factory=list)
    entities: dict[str, Entity] = field(default_factory=dict)
    snippets: list[Snippet] = field(default_factory=list)
    graph: ConnectionGraph = field(default_factory=ConnectionGraph)
    components: list[str] = field(default_factory=list)
    bindings: dict[str, SymbolBinding] = field(default_factory=dict)
    bc_specs: list[BoundaryConditionSpec] = field(default_factory=list)
    qoi_specs: list[QoISpec] = field(default_factory=list)
    domain_specs: dict[str, DomainSpec] = field(default_factory=dict)
    coordinate_vars: list[str] = field(default_factory=list)
    through_axis: str | None = None
    conductivities: dict[str, str] = field(default_factory=dict)
    definitions: dict[str, dict] = field(default_factory=dict)

    def entity(self, name: str) -> Entity:
        return self.entities[name]

    def resolve(self, name: str) -> str | None:
        """Canonical name for a mention text or alias."""
        n = name.lower()
        if n in self.entities:
            return n
        for e in self.entities.values():
            if n in e.aliases:
                return e.canonical_name
        return None

    def parents(self) -> set[str]:
        return {e.parent for e in self.entities.values() if e.parent}

    def archetypes(self) -> set[str]:
        return {e.canonical_name for e in self.entities.values() if e.is_archetype}

    def value(self, symbol: str) -> Fraction:
        from .errors import MissingBinding
        if symbol not in self.bindings:
            raise MissingBinding(f"symbol {symbol!r} has no numeric value")
        return self.bindings[symbol].value

    def values(self) -> dict[str, Fraction]:
        return {k: b.value for k, b in self.bindings.items()}

    def summary(self) -> dict:
        return {
            "entities": [e.to_dict() for e in self.entities.values()],
            "components": list(self.components),
            "graph": self.graph.to_dict(),
            "coordinates": list(self.coordinate_vars),
            "domains": {k: v.to_dict() for k, v in self.domain_specs.items()},
            "boundary_conditions": [b.to_dict() for b in self.bc_specs],
            "qoi": [q.to_dict() for q in self.qoi_specs],
            "conductivities": dict(self.conductivities),
            "bindings": {k: str(b.value) for k, b in sorted(self.bindings.items())},
        }
