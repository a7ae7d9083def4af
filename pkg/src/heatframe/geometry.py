"""Numeric shapes and faces with exact rational coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

CYLINDER = "right_cylinder_rect"
BRICK = "parallelepiped"


@dataclass(frozen=True)
class Face:
    component: str
    id: str
    axis: str | None
    side: str | None
    value: Fraction | None
    rect: tuple[tuple[str, Fraction, Fraction], ...]
    area: Fraction

    @property
    def lateral(self) -> bool:
        return self.axis is None

    def extent(self, coord: str) -> tuple[Fraction, Fraction] | None:
        for c, lo, hi in self.rect:
            if c == coord:
                return lo, hi
        return None


@dataclass(frozen=True)
class Shape:
    """A right cylinder (1 coordinate plus an ``a x b`` section) or an axis-aligned box."""

    kind: str
    intervals: tuple[tuple[str, Fraction, Fraction], ...]
    through: str
    section: tuple[Fraction, Fraction] | None = None

    def interval(self, coord: str) -> tuple[Fraction, Fraction]:
        for c, lo, hi in self.intervals:
            if c == coord:
                return lo, hi
        raise KeyError(coord)

    @property
    def length(self) -> Fraction:
        lo, hi = self.interval(self.through)
        return hi - lo

    @property
    def cross_area(self) -> Fraction:
        if self.kind == CYLINDER:
            a, b = self.section
            return a * b
        area = Fraction(1)
        for c, lo, hi in self.intervals:
            if c != self.through:
                area *= hi - lo
        return area

    @property
    def perimeter(self) -> Fraction:
        if self.kind == CYLINDER:
            a, b = self.section
            return 2 * (a + b)
        (_, l1, h1), (_, l2, h2) = [iv for iv in self.intervals if iv[0] != self.through]
        return 2 * ((h1 - l1) + (h2 - l2))

    @property
    def volume(self) -> Fraction:
        return self.cross_area * self.length

    def faces(self, name: str) -> list[Face]:
        out = []
        if self.kind == CYLINDER:
            lo, hi = self.interval(self.through)
            A = self.cross_area
            out.append(Face(name, f"{self.through}:lo", self.through, "lo", lo, (), A))
            out.append(Face(name, f"{self.through}:hi", self.through, "hi", hi, (), A))
            out.append(Face(name, "lateral", None, None, None, (), self.perimeter * self.length))
            return out
        for c, lo, hi in self.intervals:
            rect = tuple(iv for iv in self.intervals if iv[0] != c)
            area = Fraction(1)
            for _, a, b in rect:
                area *= b - a
            out.append(Face(name, f"{c}:lo", c, "lo", lo, rect, area))
            out.append(Face(name, f"{c}:hi", c, "hi", hi, rect, area))
        return out


def contact_area(f: Face, g: Face) -> Fraction:
    """Area over which two faces of different components touch."""
    if f.component == g.component or f.lateral or g.lateral:
        return Fraction(0)
    if f.axis != g.axis or f.value != g.value or f.side == g.side:
        return Fraction(0)
    if not f.rect or not g.rect:
        return min(f.area, g.area)
    area = Fraction(1)
    for c, lo, hi in f.rect:
        other = g.extent(c)
        if other is None:
            return Fraction(0)
        w = min(hi, other[1]) - max(lo, other[0])
        if w <= 0:
            return Fraction(0)
        area *= w
    return area


def coincident(f: Face, g: Face) -> bool:
    """Faces that touch over the whole of both."""
    a = contact_area(f, g)
    return a > 0 and a == f.area == g.area


def rects_adjacent(r: Sequence[tuple[str, Fraction, Fraction]], s: Sequence[tuple[str, Fraction, Fraction]]) -> bool:
    """Two rectangles in the same plane overlap or share an edge of positive length."""
    rd = {c: (lo, hi) for c, lo, hi in r}
    sd = {c: (lo, hi) for c, lo, hi in s}
    if set(rd) != set(sd):
        return False
    touching = 0
    for c in rd:
        lo = max(rd[c][0], sd[c][0])
        hi = min(rd[c][1], sd[c][1])
        if hi < lo:
            return False
        if hi == lo:
            touching += 1
    return touching <= 1 if len(rd) > 1 else True


def exposed_area(face: Face, others: Sequence[Face]) -> Fraction:
    covered = sum((contact_area(face, g) for g in others), Fraction(0))
    return face.area - covered
