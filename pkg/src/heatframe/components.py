"""Component model: instantiated components, port dof maps, slices and parallelepipeds."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DanglingComponent, NoSharedFace
from .frame import ConnectionGraph
from .geometry import CYLINDER, Face, Shape, coincident, contact_area, rects_adjacent
from .template import BCRecord, PdeTemplate


@dataclass(frozen=True)
class Component:
    name: str
    shape: Shape
    conductivity: Fraction
    faces: tuple[Face, ...]
    bcs: tuple[tuple[str, BCRecord], ...] = ()

    @property
    def kind(self) -> str:
        return self.shape.kind

    @property
    def ports(self) -> tuple[Face, Face]:
        ax = self.shape.through
        lo = next(f for f in self.faces if f.axis == ax and f.side == "lo")
        hi = next(f for f in self.faces if f.axis == ax and f.side == "hi")
        return lo, hi

    @property
    def x_left(self) -> Fraction:
        return self.shape.interval(self.shape.through)[0]

    @property
    def x_right(self) -> Fraction:
        return self.shape.interval(self.shape.through)[1]

    def bc(self, face_id: str) -> BCRecord | None:
        for fid, rec in self.bcs:
            if fid == face_id:
                return rec
        return None

    def face(self, face_id: str) -> Face:
        return next(f for f in self.faces if f.id == face_id)

    def cross_rect(self) -> tuple[tuple[str, Fraction, Fraction], ...]:
        return tuple(iv for iv in self.shape.intervals if iv[0] != self.shape.through)


def instantiate_components(template: PdeTemplate) -> list[Component]:
    out = []
    shapes = template.shapes()
    for tc in template.components:
        shape = shapes[tc.name]
        bcs = tuple((fid, rec) for (c, fid), rec in sorted(template.bc_map.items()) if c == tc.name)
        out.append(Component(tc.name, shape, template.value(tc.conductivity), tuple(shape.faces(tc.name)), bcs))
    return out


# ---------------------------------------------------------------------------
# system and dof map

class _UnionFind:
    def __init__(self, items: Iterable):
        self.parent = {i: i for i in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass(frozen=True)
class Connection:
    i: int
    face_i: str
    j: int
    face_j: str
    area: Fraction


@dataclass
class System:
    components: list[Component]
    connections: list[Connection]
    dof_map: dict[tuple[int, int], int]
    n_global: int
    dof_x: list[Fraction] = field(default_factory=list)

    def index(self, name: str) -> int:
        for i, c in enumerate(self.components):
            if c.name == name:
                return i
        raise KeyError(name)


def _number_ports(components: Sequence[Component], uf: _UnionFind) -> tuple[dict[tuple[int, int], int], list[Fraction]]:
    roots: dict = {}
    for i, c in enumerate(components):
        for p, face in enumerate(c.ports):
            r = uf.find((i, p))
            key = (face.value, len(roots))
            roots.setdefault(r, key)
    order = sorted(roots, key=lambda r: roots[r])
    number = {r: n for n, r in enumerate(order)}
    dof_map = {(i, p): number[uf.find((i, p))] for i in range(len(components)) for p in (0, 1)}
    dof_x = [roots[r][0] for r in order]
    return dof_map, dof_x


def connect_system(components: Sequence[Component], graph: ConnectionGraph | Iterable[tuple[str, str]]) -> System:
    """Find shared faces along solid-solid graph edges and merge coincident ports."""
    names = {c.name: i for i, c in enumerate(components)}
    pairs = [(e.a, e.b) for e in graph.edges] if isinstance(graph, ConnectionGraph) else list(graph)
    connections: list[Connection] = []
    touched = set()
    for a, b in pairs:
        if a not in names or b not in names:
            continue
        i, j = names[a], names[b]
        found = False
        for f in components[i].faces:
            for g in components[j].faces:
                area = contact_area(f, g)
                if area > 0:
                    connections.append(Connection(i, f.id, j, g.id, area))
                    found = True
        if not found:
            raise NoSharedFace(f"{a!r} and {b!r} are connected but share no face")
        touched.update((i, j))
    if len(components) > 1:
        for i, c in enumerate(components):
            if i not in touched:
                raise DanglingComponent(f"component {c.name!r} is not connected to any other component")

    uf = _UnionFind((i, p) for i in range(len(components)) for p in (0, 1))
    for conn in connections:
        ci, cj = components[conn.i], components[conn.j]
        for p, f in enumerate(ci.ports):
            for q, g in enumerate(cj.ports):
                if f.id == conn.face_i and g.id == conn.face_j and coincident(f, g):
                    uf.union((conn.i, p), (conn.j, q))
    dof_map, dof_x = _number_ports(components, uf)
    return System(list(components), connections, dof_map, len(dof_x), dof_x)


# ---------------------------------------------------------------------------
# slices

@dataclass(frozen=True)
class SlicePiece:
    """Cross-section of one component at a station: its lo/hi face or an interior cut."""

    component: int
    side: str  # lo | hi | cut
    rect: tuple[tuple[str, Fraction, Fraction], ...]


@dataclass
class SliceSet:
    x1_values: list[Fraction]
    slices: list[list[SlicePiece]]
    connected_parts: list[list[list[int]]]

    @property
    def m1(self) -> int:
        return len(self.x1_values)


def _parts(pieces: Sequence[SlicePiece]) -> list[list[int]]:
    n = len(pieces)
    seen = [False] * n
    parts = []
    for s in range(n):
        if seen[s]:
            continue
        stack, part = [s], []
        seen[s] = True
        while stack:
            a = stack.pop()
            part.append(a)
            for b in range(n):
                if not seen[b] and rects_adjacent(pieces[a].rect, pieces[b].rect):
                    seen[b] = True
                    stack.append(b)
        parts.append(sorted(part))
    return parts


def find_slices(system: System) -> SliceSet:
    stations = sorted({v for c in system.components for v in (c.x_left, c.x_right)})
    slices, parts = [], []
    for x in stations:
        pieces = []
        for i, c in enumerate(system.components):
            if c.x_left <= x <= c.x_right:
                side = "lo" if x == c.x_left else "hi" if x == c.x_right else "cut"
                pieces.append(SlicePiece(i, side, c.cross_rect()))
        slices.append(pieces)
        parts.append(_parts(pieces))
    return SliceSet(stations, slices, parts)


@dataclass
class CoalescedMap:
    """Dofs of the slice-constant space: one per connected part (or per slice)."""

    n: int
    piece_dof: dict[tuple[int, int], int]
    port_map: dict[tuple[int, int], int]
    station_of_dof: list[int]

    def dof_at(self, slices: SliceSet, component: int, station: int) -> int:
        for k, p in enumerate(slices.slices[station]):
            if p.component == component:
                return self.piece_dof[(station, k)]
        raise KeyError((component, station))


def coalesce_slice_dofs(system: System, slices: SliceSet, split_parts: bool = True) -> CoalescedMap:
    piece_dof: dict[tuple[int, int], int] = {}
    station_of_dof: list[int] = []
    n = 0
    for j, pieces in enumerate(slices.slices):
        groups = slices.connected_parts[j] if split_parts else [list(range(len(pieces)))]
        for g in groups:
            for k in g:
                piece_dof[(j, k)] = n
            station_of_dof.append(j)
            n += 1
    port_map = {}
    index = {x: j for j, x in enumerate(slices.x1_values)}
    for i, c in enumerate(system.components):
        for p, x in enumerate((c.x_left, c.x_right)):
            j = index[x]
            k = next(k for k, pc in enumerate(slices.slices[j]) if pc.component == i)
            port_map[(i, p)] = piece_dof[(j, k)]
    return CoalescedMap(n, piece_dof, port_map, station_of_dof)


# ---------------------------------------------------------------------------
# parallelepipeds

@dataclass(frozen=True)
class Parallelepiped:
    members: tuple[int, ...]
    span: tuple[Fraction, Fraction]
    cross_area: Fraction
    robin_left: bool
    robin_right: bool

    @property
    def volume(self) -> Fraction:
        return self.cross_area * (self.span[1] - self.span[0])


@dataclass
class ParallelepipedSet:
    members: list[Parallelepiped]

    @property
    def m_ppd(self) -> int:
        return len(self.members)


def find_parallelepipeds(system: System) -> ParallelepipedSet:
    """Chain components whose x1 faces coincide exactly; each chain is one parallelepiped."""
    comps = system.components
    n = len(comps)
    uf = _UnionFind(range(n))
    for i in range(n):
        for j in range(n):
            if i != j and coincident(comps[i].ports[1], comps[j].ports[0]):
                uf.union(i, j)
    chains: dict[int, list[int]] = {}
    for i in range(n):
        chains.setdefault(uf.find(i), []).append(i)
    out = []
    for members in sorted(chains.values()):
        members.sort(key=lambda i: comps[i].x_left)
        first, last = comps[members[0]], comps[members[-1]]
        lo_bc = first.bc(first.ports[0].id)
        hi_bc = last.bc(last.ports[1].id)
        out.append(Parallelepiped(tuple(members), (first.x_left, last.x_right), first.shape.cross_area,
                                  lo_bc is not None and lo_bc.kind == "robin",
                                  hi_bc is not None and hi_bc.kind == "robin"))
    # minimality: no member's end face coincides with another member's start face
    for a in out:
        for b in out:
            if a is not b:
                assert not coincident(comps[a.members[-1]].ports[1], comps[b.members[0]].ports[0])
    return ParallelepipedSet(out)


def is_cylinder_system(system: System) -> bool:
    return all(c.kind == CYLINDER for c in system.components)
