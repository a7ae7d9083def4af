"""Conduction parser: tagged sentences to a semantic :class:`Frame`.

The pipeline runs a fixed sequence of passes, each returning a new frame:
entities and snippets, attributes, commonsense facts, solid/fluid state,
inheritance and instantiation, the connection graph, components, spatial
domains, boundary conditions and quantities of interest, conductivities and
finally the numeric parameter bindings.
"""

from __future__ import annotations

import copy
import re
from fractions import Fraction
from importlib import resources
from typing import Iterable, Sequence

from .chunking import (Clause, NounPhrase, SentenceChunks, chunk_statement, load_vocabulary,
                       vocabulary_words)
from .errors import (ConflictingState, CyclicInheritance, DuplicateBinding, ExpressionError,
                     HeatFrameError, IncompleteRobin, MalformedDatabase, MissingConductivity,
                     MissingDomain, NoComponents, NonNumericRHS, OverlappingDomains, UnknownFace)
from .expr import Affine, is_number, parse_affine, parse_equality, parse_interval, parse_number
from .frame import (BoundaryConditionSpec, ConnectionGraph, DomainSpec, Entity, FaceSelector, Frame,
                    QoISpec, Snippet, SymbolBinding)
from .frontend import Token, analyze

PROPERTY_KEYS = (
    ("heat transfer coefficient", "htc"),
    ("thermal conductivity", "conductivity"),
    ("conductivity", "conductivity"),
    ("heat transfer rate", "heat_rate"),
    ("heat rate", "heat_rate"),
    ("heat flux", "flux"),
    ("flux", "flux"),
    ("spatial domain", "domain"),
    ("domain", "domain"),
    ("length", "length"),
    ("temperature", "temperature"),
    ("coordinates", "coordinate"),
    ("coordinate", "coordinate"),
)
FACE_NOUNS = {"face", "faces", "end", "ends", "surface", "surfaces", "side", "sides"}
INSULATED_WORDS = {"insulated", "adiabatic"}
TEMPERATURE_FIELD = ("temperature", "temperature distribution", "temperature field", "temperature profile")
_INSTANCE_RE = re.compile(r"^(?P<base>.+?)\s+(?P<index>\d+)$")
_IDENT_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_^]*$")


def property_key(text: str) -> str | None:
    for phrase, key in PROPERTY_KEYS:
        if text == phrase or text.endswith(" " + phrase):
            return key
    return None


def _strip_det(text: str) -> str:
    for det in ("the ", "a ", "an ", "each ", "every "):
        if text.lower().startswith(det):
            return text[len(det):]
    return text


def _copy(frame: Frame) -> Frame:
    return copy.deepcopy(frame)


def _np_entity(frame: Frame, np_: NounPhrase) -> str | None:
    hit = frame.resolve(np_.text)
    if hit is not None:
        return hit
    return frame.resolve(np_.head.text)


def _clauses(frame: Frame) -> Iterable[tuple[SentenceChunks, Clause]]:
    for sc in frame.chunks:
        for c in sc.clauses:
            yield sc, c


def _subject_entities(frame: Frame, c: Clause) -> list[str]:
    out = []
    for np_ in c.subject_nps():
        name = _np_entity(frame, np_)
        if name is not None:
            out.append(name)
    return out


def _object_entities(frame: Frame, c: Clause) -> list[str]:
    out = []
    for np_ in c.object_nps():
        name = _np_entity(frame, np_)
        if name is not None:
            out.append(name)
    return out


def _nps_in(sc: SentenceChunks, lo: int, hi: int) -> list[NounPhrase]:
    return [np_ for np_ in sc.nps if lo <= np_.head.start < hi]


# ---------------------------------------------------------------------------
# entities and snippets

def extract_entities(tokens: Sequence[list[Token]], chunks: list[SentenceChunks] | None = None) -> dict[str, Entity]:
    """Every maximal noun run names an entity; ``X of the Y`` folds into ``Y X``."""
    chunks = chunks if chunks is not None else chunk_statement(tokens)
    mentioned = {m.text for sc in chunks for m in sc.mentions}
    entities: dict[str, Entity] = {}

    def register(name: str, where: tuple[int, int], alias: str | None = None) -> None:
        e = entities.get(name)
        if e is None:
            e = entities[name] = Entity(name, first_mention=where)
        elif where < e.first_mention:
            e.first_mention = where
        if alias:
            e.aliases.add(alias)

    for sc in chunks:
        folded: dict[int, tuple[str, str]] = {}
        for np_ in sc.nps:
            if len(np_.pps) == 1 and np_.pps[0][0] == "of":
                combined = f"{np_.pps[0][1].text} {np_.head.text}"
                if combined in mentioned:
                    folded[np_.head.start] = (combined, f"{np_.head.text} of {np_.pps[0][1].text}")
        for m in sc.mentions:
            where = (sc.index, m.start)
            if m.start in folded:
                name, alias = folded[m.start]
                register(name, where, alias)
            else:
                register(m.text, where)
    return dict(sorted(entities.items(), key=lambda kv: kv[1].first_mention))


def extract_snippets(tokens: Sequence[list[Token]], entities: dict[str, Entity],
                     chunks: list[SentenceChunks] | None = None) -> list[Snippet]:
    """One snippet per present-tense (subject, object) pair; copulas keep the complement text."""
    chunks = chunks if chunks is not None else chunk_statement(tokens)
    probe = Frame(entities=entities)
    out: list[Snippet] = []
    for sc in chunks:
        for c in sc.clauses:
            if not c.present:
                continue
            subjects = _subject_entities(probe, c)
            if not subjects:
                continue
            if c.verb.kind == "copula":
                for s in subjects:
                    out.append(Snippet(s, c.verb.phrase, c.complement, sc.index, "copula"))
                continue
            objects = _object_entities(probe, c)
            for s in subjects:
                if objects:
                    for o in objects:
                        out.append(Snippet(s, c.verb.phrase, o, sc.index, c.verb.kind, True))
                elif c.complement:
                    out.append(Snippet(s, c.verb.phrase, c.complement, sc.index, c.verb.kind))
    return out


# ---------------------------------------------------------------------------
# attributes

def _geometry_classes() -> list[tuple[str, str]]:
    out = []
    for section, phrases in load_vocabulary().items():
        if section.startswith("geometry:"):
            for p in phrases:
                out.append((" ".join(p), section.split(":", 1)[1]))
    out.sort(key=lambda pc: -len(pc[0]))
    return out


def _dimensions(tokens: Sequence[Token], lo: int, hi: int) -> list[tuple[str, str | None]]:
    """Symbols listed after ``dimensions``, each with an optional ``(in $x_k$)`` axis."""
    start = None
    for i in range(lo, hi):
        if tokens[i].lower in ("dimension", "dimensions"):
            start = i + 1
            break
    if start is None:
        return []
    dims: list[tuple[str, str | None]] = []
    i = start
    while i < hi:
        t = tokens[i]
        if t.pos == "SYMBOL":
            axis = None
            if i + 3 < hi and tokens[i + 1].text == "(" and tokens[i + 2].lower == "in" \
                    and tokens[i + 3].pos == "SYMBOL":
                axis = tokens[i + 3].text
                i += 4
                if i < hi and tokens[i].text == ")":
                    i += 1
            else:
                i += 1
            dims.append((t.text, axis))
            continue
        if t.text in (",", "(", ")") or t.lower in ("and", "in"):
            i += 1
            continue
        break
    return dims


def _clause_attributes(frame: Frame, sc: SentenceChunks, c: Clause) -> None:
    kind = c.verb.kind
    subjects = _subject_entities(frame, c)
    toks = sc.tokens

    # "The thermal conductivity of the fir layer is $k_f$"
    if kind == "copula":
        for np_ in c.subject_nps():
            key = property_key(np_.head.text)
            owner = np_.owner
            if key in ("conductivity", "length", "temperature") and owner is not None:
                target = frame.resolve(owner.text)
                sym = next((o for o in c.objects if isinstance(o, str)), None)
                if target is not None and sym is not None:
                    frame.entities[target].attributes.add(f"{key}={sym}")

    # "let $T_in$ denote the temperature of the inside air"
    if kind == "definition" and c.subjects and isinstance(c.subjects[0], str):
        for np_ in c.object_nps():
            key = property_key(np_.head.text)
            if key in ("conductivity", "length", "temperature") and np_.owner is not None:
                target = frame.resolve(np_.owner.text)
                if target is not None:
                    frame.entities[target].attributes.add(f"{key}={c.subjects[0]}")

    if not subjects:
        return

    if kind in ("copula", "other", "maintained"):
        for np_ in c.object_nps():
            key = property_key(np_.head.text)
            if key in ("conductivity", "length", "temperature") and np_.symbol:
                for s in subjects:
                    frame.entities[s].attributes.add(f"{key}={np_.symbol}")

    if kind == "copula":
        complement = _strip_det(c.complement).strip()
        for s in subjects:
            e = frame.entities[s]
            if complement and not complement.startswith("$"):
                e.attributes.add(complement)
            for np_ in c.object_nps():
                e.attributes.add(np_.head.text)
        low = " " + " ".join(t.lower for t in toks[c.verb.end:c.end]) + " "
        for phrase, cls in _geometry_classes():
            if f" {phrase} " in low:
                for s in subjects:
                    frame.entities[s].attributes.add(f"geometry={cls}")
                break
        dims = _dimensions(toks, c.verb.end, len(toks))
        if dims:
            if all(axis is not None for _, axis in dims):
                value = ",".join(f"{d}@{axis}" for d, axis in dims)
                for s in subjects:
                    frame.entities[s].attributes.add(f"dimensions={value}")
            else:
                value = ",".join(d for d, _ in dims)
                for s in subjects:
                    frame.entities[s].attributes.add(f"cross_section={value}")

    first = next((t for t in toks[c.verb.end:c.end] if t.pos != "ADV"), None)
    if first is not None and first.lower in INSULATED_WORDS:
        for s in subjects:
            frame.entities[s].attributes.add(first.lower)

    # "in communication with outside air at temperature $T_out$"
    if kind == "connection":
        objects = _object_entities(frame, c)
        if objects:
            for np_ in _nps_in(sc, c.tail_start, c.end):
                if property_key(np_.head.text) == "temperature" and np_.symbol:
                    frame.entities[objects[-1]].attributes.add(f"temperature={np_.symbol}")


def derive_attributes(frame: Frame) -> Frame:
    """Copular complements and property phrases become entity attributes."""
    out = _copy(frame)
    for sc, c in _clauses(out):
        if c.present:
            _clause_attributes(out, sc, c)
    return out


# ---------------------------------------------------------------------------
# commonsense

def default_commonsense() -> str:
    return resources.files("heatframe.data").joinpath("commonsense.txt").read_text(encoding="utf-8")


def parse_commonsense(db: str) -> dict[str, set[str]]:
    """Parse a commonsense text into ``{entity name: attributes}``."""
    if not db or not db.strip():
        return {}
    try:
        marked, tokens = analyze(db, "commonsense")
    except HeatFrameError as exc:
        raise MalformedDatabase(f"commonsense database: {exc.message}") from exc
    chunks = chunk_statement(tokens)
    for sc in chunks:
        if not any(c.subjects and c.complement for c in sc.clauses):
            raise MalformedDatabase(f"commonsense sentence not understood: {marked.sentences[sc.index]!r}",
                                    sentence=sc.index)
    entities = extract_entities(tokens, chunks)
    probe = derive_attributes(Frame(chunks=chunks, entities=entities))
    return {n: set(e.attributes) for n, e in probe.entities.items() if e.attributes}


def incorporate_commonsense(frame: Frame, db: str | dict[str, set[str]] | None) -> Frame:
    """Append database attributes to every frame entity the db name matches.

    A db name matches when it equals the frame name or its words are a
    subset of the frame name's words ("air" matches "inside air").
    """
    out = _copy(frame)
    facts = db if isinstance(db, dict) else parse_commonsense(db or "")
    for name, attrs in facts.items():
        words = set(name.split())
        for e in out.entities.values():
            if e.canonical_name == name or words <= set(e.canonical_name.split()):
                e.attributes |= attrs
    return out


# ---------------------------------------------------------------------------
# state, inheritance, instantiation

def _evidence(attrs: Iterable[str]) -> tuple[bool, bool, bool]:
    fluid_words = vocabulary_words("fluid")
    solid_words = vocabulary_words("solid")
    insulator_words = vocabulary_words("insulator")
    fluid = solid = insulator = False
    for a in attrs:
        if "=" in a:
            continue
        words = a.split()
        if a in fluid_words or (words and words[-1] in fluid_words):
            fluid = True
        if a in solid_words or (words and words[0] == "solid"):
            solid = True
        if a in insulator_words or (words and words[-1] in insulator_words):
            insulator = True
    return fluid, solid, insulator


def _classify(e: Entity) -> None:
    fluid, solid, insulator = _evidence(e.attributes)
    if fluid and solid:
        raise ConflictingState(f"{e.canonical_name!r} is described as both solid and fluid")
    if fluid:
        e.state = "fluid"
    elif solid:
        e.state = "solid"
    if insulator:
        e.is_insulator = True


def classify_state(frame: Frame) -> Frame:
    out = _copy(frame)
    for e in out.entities.values():
        _classify(e)
    return out


def _inherit(child: Entity, source: Entity) -> bool:
    changed = False
    keys = {a.split("=", 1)[0] for a in child.attributes if "=" in a}
    for a in sorted(source.attributes):
        if a in child.attributes:
            continue
        if "=" in a and a.split("=", 1)[0] in keys:
            continue  # explicit value on the child wins
        child.attributes.add(a)
        changed = True
    if child.state == "unknown" and source.state != "unknown":
        child.state = source.state
        changed = True
    return changed


def _propagate(frame: Frame) -> None:
    """Push parent and archetype attributes down until nothing changes."""
    changed = True
    while changed:
        changed = False
        for e in frame.entities.values():
            for src in (e.parent, e.archetype):
                if src is not None and _inherit(e, frame.entities[src]):
                    changed = True
        for e in frame.entities.values():
            if e.state == "unknown":
                before = e.state
                _classify(e)
                changed = changed or e.state != before


def resolve_inheritance(frame: Frame) -> Frame:
    out = _copy(frame)
    for sc, c in _clauses(out):
        if c.verb.kind != "inheritance" or not c.present:
            continue
        parents = _subject_entities(out, c)
        if not parents:
            continue
        parent = parents[0]
        items = c.colon_items or c.object_nps()
        for np_ in items:
            child = _np_entity(out, np_)
            if child is None:
                continue
            walk = parent
            while walk is not None:
                if walk == child:
                    raise CyclicInheritance(f"{child!r} would become its own ancestor", sentence=sc.index)
                walk = out.entities[walk].parent
            if out.entities[child].parent is None:
                out.entities[child].parent = parent
    _propagate(out)
    return out


def resolve_instantiation(frame: Frame) -> Frame:
    """``each X`` marks an archetype; ``X 1``, ``X 2``... become its instances."""
    out = _copy(frame)
    markers = vocabulary_words("instantiation")
    for sc, c in _clauses(out):
        for np_ in c.subject_nps():
            if np_.det in markers:
                name = _np_entity(out, np_)
                if name is not None:
                    out.entities[name].is_archetype = True
    archetypes = out.archetypes()
    for e in out.entities.values():
        m = _INSTANCE_RE.match(e.canonical_name)
        if m and m.group("base").lower() in archetypes and e.archetype is None:
            e.archetype = m.group("base").lower()
    # "the spoon geometry is ..." describes the spoon
    for e in list(out.entities.values()):
        if e.canonical_name.endswith(" geometry"):
            owner = out.entities.get(e.canonical_name[: -len(" geometry")])
            if owner is not None:
                _inherit(owner, e)
    _propagate(out)
    return out


# ---------------------------------------------------------------------------
# graph and components

def build_connection_graph(frame: Frame) -> ConnectionGraph:
    graph = ConnectionGraph(nodes=list(frame.entities))
    for sc, c in _clauses(frame):
        if c.verb.kind != "connection" or not c.present:
            continue
        for s in _subject_entities(frame, c):
            for o in _object_entities(frame, c):
                graph.add_edge(s, o, c.verb.phrase, sc.index)
    return graph


def is_component(frame: Frame, graph: ConnectionGraph, name: str) -> bool:
    e = frame.entities[name]
    return (graph.degree(name) > 0 and e.state == "solid" and not e.is_insulator
            and name not in frame.parents() and name not in frame.archetypes())


def identify_components(frame: Frame, graph: ConnectionGraph) -> list[str]:
    comps = [n for n in frame.entities if is_component(frame, graph, n)]
    if not comps:
        raise NoComponents("no connected, non-insulating solid component found")
    return comps


# ---------------------------------------------------------------------------
# domains

def _equations(tokens: Sequence[Token], lo: int, hi: int) -> list[str]:
    out = []
    for t in tokens[lo:hi]:
        if t.pos == "EQUATION":
            out.extend(p.strip() for p in t.text.split(",") if p.strip())
    return out


def _coordinates(frame: Frame) -> tuple[list[str], str | None]:
    coords: list[str] = []
    through = None
    for sc, c in _clauses(frame):
        for np_ in c.subject_nps():
            if property_key(np_.head.text) == "coordinate" and c.verb.kind in ("copula", "definition"):
                for o in c.objects:
                    if isinstance(o, str) and o not in coords:
                        coords.append(o)
                if any(adp == "through" for adp, _ in np_.pps):
                    syms = [o for o in c.objects if isinstance(o, str)]
                    if syms:
                        through = syms[0]
        if c.subjects and isinstance(c.subjects[0], str):
            words = [t.lower for t in sc.tokens[c.verb.start:c.end]]
            if "through" in words and ("distance" in words or "corresponds" in words):
                through = c.subjects[0]
    return coords, through


def _interval_parts(text: str, sentence: int) -> list[tuple[str, Affine, Affine]]:
    out = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        try:
            iv = parse_interval(part)
        except ExpressionError as exc:
            raise ExpressionError(exc.message, sentence=sentence) from exc
        if iv is None:
            raise ExpressionError(f"not an interval: {part!r}", sentence=sentence)
        out.append(iv)
    return out


def _boxes_overlap(a: DomainSpec, b: DomainSpec, values: dict[str, Fraction]) -> bool:
    common = set(a.coords) & set(b.coords)
    if not common:
        return False
    for coord in common:
        alo, ahi = (x.evaluate(values) for x in a.interval(coord))
        blo, bhi = (x.evaluate(values) for x in b.interval(coord))
        if min(ahi, bhi) <= max(alo, blo):
            return False
    return True


def extract_domains(frame: Frame) -> tuple[dict[str, DomainSpec], list[str], str | None]:
    """Per-entity domains, the ordered coordinate list and the through axis."""
    coords, through = _coordinates(frame)
    raw: dict[str, tuple[list[tuple[str, Affine, Affine]], int]] = {}
    for sc, c in _clauses(frame):
        if not c.present:
            continue
        if c.verb.kind == "copula":
            for np_ in c.subject_nps():
                if property_key(np_.head.text) == "domain" and np_.owner is not None:
                    target = frame.resolve(np_.owner.text)
                    parts = []
                    for t in sc.tokens[c.verb.end:c.end]:
                        if t.pos == "EQUATION":
                            parts.extend(_interval_parts(t.text, sc.index))
                    if target is not None and parts:
                        raw[target] = (parts, sc.index)
        elif c.verb.kind == "extent":
            subjects = _subject_entities(frame, c)
            eqs = [parse_equality(e) for e in _equations(sc.tokens, c.verb.end, c.end)]
            eqs = [e for e in eqs if e is not None]
            if subjects and len(eqs) >= 2 and eqs[0][0] == eqs[1][0]:
                try:
                    lo, hi = parse_affine(eqs[0][1]), parse_affine(eqs[1][1])
                except ExpressionError as exc:
                    raise ExpressionError(exc.message, sentence=sc.index) from exc
                raw[subjects[0]] = ([(eqs[0][0], lo, hi)], sc.index)

    for parts, _ in raw.values():
        for var, _, _ in parts:
            if var not in coords:
                coords.append(var)
    if not coords:
        coords = ["x"]
    if through is None:
        through = coords[0]

    order = {c: i for i, c in enumerate(coords)}
    domains = {name: DomainSpec(tuple(sorted(parts, key=lambda p: order[p[0]])), sent)
               for name, (parts, sent) in raw.items()}

    comps = frame.components
    missing = [c for c in comps if c not in domains]
    if missing and len(missing) == len(comps) and len(coords) == 1 \
            and all(frame.entities[c].has_fact("length") for c in comps):
        # chain the components end to end in mention order
        pos = Affine.constant(0)
        for c in comps:
            length = parse_affine(frame.entities[c].fact("length"))
            domains[c] = DomainSpec(((coords[0], pos, pos + length),), None)
            pos = pos + length
        missing = []
    if missing:
        raise MissingDomain(f"no spatial domain for component {missing[0]!r}")

    values = {k: b.value for k, b in _collect_bindings(frame, coords).items()}
    for i, a in enumerate(comps):
        for b in comps[i + 1:]:
            try:
                overlap = _boxes_overlap(domains[a], domains[b], values)
            except HeatFrameError:
                continue  # unbound symbols surface later with a clearer error
            if overlap:
                raise OverlappingDomains(f"domains of {a!r} and {b!r} overlap", sentence=domains[b].sentence)
    return domains, coords, through


# ---------------------------------------------------------------------------
# boundary conditions and quantities of interest

def _face_selector(frame: Frame, sc: SentenceChunks, lo: int, hi: int) -> FaceSelector | None:
    toks = sc.tokens
    for np_ in _nps_in(sc, lo, hi):
        words = np_.head.text.split()
        if words[-1] in FACE_NOUNS and "lateral" in words:
            owner = " ".join(words[: words.index("lateral")]) or None
            if owner is not None:
                owner = frame.resolve(owner) or owner
            return FaceSelector("lateral", owner=owner)
        if words[-1] in FACE_NOUNS:
            k = np_.head.end
            while k < hi and (toks[k].lower in ("at", "of", "where", "located") or toks[k].pos == "DET"):
                k += 1
            if k < hi and toks[k].pos == "EQUATION":
                eq = parse_equality(toks[k].text)
                if eq is not None and eq[0] in frame.coordinate_vars:
                    try:
                        value = parse_affine(eq[1])
                    except ExpressionError as exc:
                        raise ExpressionError(exc.message, sentence=sc.index) from exc
                    return FaceSelector("plane", coord=eq[0], value=value, axial="axial" in words)
            raise UnknownFace(f"cannot locate face {np_.head.text!r}", sentence=sc.index)
    return None


def _np_after(sc: SentenceChunks, lo: int, hi: int, words: tuple[str, ...]) -> NounPhrase | None:
    toks = sc.tokens
    for i in range(lo, hi):
        if toks[i].lower in words:
            k = i + 1
            while k < hi and toks[k].pos == "DET":
                k += 1
            for np_ in sc.nps:
                if np_.head.start == k:
                    return np_
    return None


def _fluid_temperature(frame: Frame, fluid: str, sentence: int) -> str:
    sym = frame.entities[fluid].fact("temperature")
    if sym is None:
        raise IncompleteRobin(f"heat transfer coefficient to {fluid!r} but no temperature for it",
                              sentence=sentence)
    return sym


def _robin_pair(frame: Frame, a: str | None, b: str | None, sentence: int) -> tuple[str, str]:
    """Order two named entities as (solid target, fluid)."""
    ents = [x for x in (a, b) if x is not None]
    fluids = [x for x in ents if frame.entities[x].state == "fluid"]
    solids = [x for x in ents if x not in fluids]
    if not fluids:
        raise IncompleteRobin("heat transfer coefficient without a named fluid", sentence=sentence)
    if not solids:
        raise IncompleteRobin("heat transfer coefficient without a solid side", sentence=sentence)
    return solids[0], fluids[0]


def _parse_normalization(expr: str) -> tuple[tuple[str, str], ...] | None:
    m = re.fullmatch(r"\s*([A-Za-z][\w^]*)\s*/\s*\((.*)\)\s*", expr)
    if not m:
        return None
    rate, den = m.groups()
    dm = re.search(r"\(\s*([A-Za-z][\w^]*)\s*-\s*([A-Za-z][\w^]*)\s*\)", den)
    if not dm:
        return None
    rest = re.findall(r"[A-Za-z][\w^]*", den[: dm.start()] + " " + den[dm.end():])
    ks = [s for s in rest if s.startswith("k")]
    others = [s for s in rest if not s.startswith("k")]
    if len(ks) != 1 or len(others) != 1:
        return None
    return (("rate", rate), ("k", ks[0]), ("T_hot", dm.group(1)), ("T_cold", dm.group(2)),
            ("length", others[0]))


def extract_definitions(frame: Frame) -> dict[str, dict]:
    """Symbols introduced by ``$Q$ denotes ...`` or ``... $H$ given by $expr$``."""
    defs: dict[str, dict] = {}
    for sc, c in _clauses(frame):
        toks = sc.tokens
        for np_ in c.object_nps():
            if not np_.symbol:
                continue
            words = [t.lower for t in toks[np_.end:c.end]]
            if words[:2] == ["given", "by"] and np_.end + 2 < len(toks) and toks[np_.end + 2].is_math:
                expr = toks[np_.end + 2].text
                defs[np_.symbol] = {"noun": np_.head.text, "expr": expr,
                                    "normalization": _parse_normalization(expr), "sentence": sc.index}
        if c.verb.kind == "definition" and c.verb.phrase in ("denote", "denotes") \
                and c.subjects and isinstance(c.subjects[0], str) and c.object_nps():
            obj = c.object_nps()[0]
            target = _np_after(sc, c.tail_start, c.end, ("into", "of", "on", "through"))
            defs.setdefault(c.subjects[0], {}).update({
                "noun": obj.head.text, "key": property_key(obj.head.text), "sentence": sc.index,
                "target": None if target is None else _np_entity(frame, target),
                "face": _face_selector(frame, sc, c.tail_start, c.end),
            })
    return defs


def _bcs_from_clause(frame: Frame, sc: SentenceChunks, c: Clause) -> list[BoundaryConditionSpec]:
    out: list[BoundaryConditionSpec] = []
    kind = c.verb.kind
    toks = sc.tokens
    lo, hi = c.tail_start, c.end

    if kind == "definition" and c.verb.phrase in ("denote", "denotes") \
            and c.subjects and isinstance(c.subjects[0], str) and c.object_nps():
        sym = c.subjects[0]
        key = property_key(c.object_nps()[0].head.text)
        if key == "htc":
            a = _np_after(sc, lo, hi, ("from",))
            b = _np_after(sc, lo, hi, ("to",))
            solid, fluid = _robin_pair(frame, a and _np_entity(frame, a), b and _np_entity(frame, b), sc.index)
            face = _face_selector(frame, sc, lo, hi)
            if face is None:
                raise UnknownFace(f"no face given for heat transfer coefficient {sym}", sentence=sc.index)
            out.append(BoundaryConditionSpec("heat_transfer_coefficient", solid, face, h_symbol=sym,
                                             T_fluid_symbol=_fluid_temperature(frame, fluid, sc.index),
                                             fluid_entity=fluid, sentence=sc.index))
        elif key in ("flux", "temperature"):
            face = _face_selector(frame, sc, lo, hi)
            tnp = _np_after(sc, lo, hi, ("into", "of", "on", "at"))
            target = None if tnp is None else _np_entity(frame, tnp)
            if face is not None and (target is None or frame.entities[target].state != "fluid"):
                if key == "flux":
                    out.append(BoundaryConditionSpec("flux", target, face, flux_symbol=sym, sentence=sc.index))
                else:
                    out.append(BoundaryConditionSpec("temperature", target, face, T_symbol=sym, sentence=sc.index))
        return out

    subjects = _subject_entities(frame, c)
    solids = [s for s in subjects if frame.entities[s].state == "solid"]

    if kind == "connection":
        htc = [np_ for np_ in _nps_in(sc, lo, hi) if property_key(np_.head.text) == "htc" and np_.symbol]
        if htc and solids:
            fluids = [o for o in _object_entities(frame, c) if frame.entities[o].state == "fluid"]
            if not fluids:
                raise IncompleteRobin("heat transfer coefficient without a named fluid", sentence=sc.index)
            T_f = _fluid_temperature(frame, fluids[0], sc.index)
            face = _face_selector(frame, sc, lo, hi)
            if face is None:
                raise UnknownFace(f"no face given for heat transfer coefficient {htc[0].symbol}",
                                  sentence=sc.index)
            for s in solids:
                out.append(BoundaryConditionSpec("heat_transfer_coefficient", s, face, h_symbol=htc[0].symbol,
                                                 T_fluid_symbol=T_f, fluid_entity=fluids[0], sentence=sc.index))
        return out

    first = next((t for t in toks[c.verb.end:hi] if t.pos != "ADV"), None)
    if first is not None and first.lower in INSULATED_WORDS:
        for np_ in c.subject_nps():
            head = np_.head.text
            owner = np_.owner
            if head in ("remainder", "rest") and owner is not None and owner.text.endswith("boundary"):
                out.append(BoundaryConditionSpec("insulated", None, FaceSelector("remainder"), sentence=sc.index))
                continue
            words = head.split()
            if words[-1] in FACE_NOUNS:
                face = _face_selector(frame, sc, np_.head.start, hi)
                target = None if owner is None else frame.resolve(owner.text)
                out.append(BoundaryConditionSpec("insulated", target, face, sentence=sc.index))
                continue
            name = _np_entity(frame, np_)
            if name is None or frame.entities[name].state == "fluid":
                continue
            face = _face_selector(frame, sc, c.verb.end, hi) or FaceSelector("all")
            out.append(BoundaryConditionSpec("insulated", name, face, sentence=sc.index))
        return out

    if kind == "maintained" and solids:
        temps = [np_.symbol for np_ in c.object_nps() if property_key(np_.head.text) == "temperature" and np_.symbol]
        face = _face_selector(frame, sc, lo, hi)
        if temps and face is not None:
            for s in solids:
                out.append(BoundaryConditionSpec("temperature", s, face, T_symbol=temps[0], sentence=sc.index))
        return out

    if solids:
        fluxes = [np_.symbol for np_ in c.object_nps() if property_key(np_.head.text) == "flux" and np_.symbol]
        if fluxes:
            face = _face_selector(frame, sc, lo, hi)
            if face is None:
                raise UnknownFace(f"no face given for heat flux {fluxes[0]}", sentence=sc.index)
            for s in solids:
                out.append(BoundaryConditionSpec("flux", s, face, flux_symbol=fluxes[0], sentence=sc.index))
    return out


def _qoi_from_clause(frame: Frame, sc: SentenceChunks, c: Clause, defs: dict[str, dict]) -> list[QoISpec]:
    out: list[QoISpec] = []
    toks = sc.tokens
    lo, hi = c.tail_start, c.end
    verb = c.verb.phrase
    bounds = False
    for obj in c.objects:
        if isinstance(obj, str):
            d = defs.get(obj, {})
            if d.get("normalization"):
                out.append(QoISpec("nondimensional_H_with_bounds", symbol=obj,
                                   normalization=d["normalization"], sentence=sc.index))
            elif d.get("key") == "heat_rate" and d.get("face") is not None:
                out.append(QoISpec("heat_rate_at_face", face=d["face"], target=d.get("target"),
                                   symbol=obj, sentence=sc.index))
            continue
        text = obj.head.text
        key = property_key(text)
        if text.endswith("bound"):
            bounds = True
        elif text.endswith(TEMPERATURE_FIELD):
            eqs = [parse_equality(e) for e in _equations(toks, lo, hi)]
            eqs = [e for e in eqs if e is not None and e[0] in frame.coordinate_vars]
            if verb in ("plot", "sketch") or not eqs:
                syms = [t.text for t in toks[lo:hi] if t.pos == "SYMBOL" and t.text in frame.coordinate_vars]
                coord = syms[0] if syms else frame.through_axis
                out.append(QoISpec("temperature_field_plot", coord=coord, sentence=sc.index))
            else:
                out.append(QoISpec("temperature_at_point", coord=eqs[0][0], location=parse_affine(eqs[0][1]),
                                   symbol=obj.symbol, sentence=sc.index))
        elif key in ("flux", "heat_rate"):
            face = _face_selector(frame, sc, obj.end, hi)
            if face is None:
                raise UnknownFace(f"no face given for {text!r}", sentence=sc.index)
            tnp = _np_after(sc, obj.end, hi, ("into", "of", "on", "through"))
            target = None if tnp is None else _np_entity(frame, tnp)
            kind = "flux_at_face" if key == "flux" else "heat_rate_at_face"
            out.append(QoISpec(kind, face=face, target=target, symbol=obj.symbol, sentence=sc.index))
    if bounds:
        sym = next((t.text for t in toks[lo:hi] if t.pos == "SYMBOL"), None)
        norm = defs.get(sym, {}).get("normalization") if sym else None
        out.append(QoISpec("nondimensional_H_with_bounds", symbol=sym, normalization=norm, sentence=sc.index))
    return out


def extract_bcs_and_qoi(frame: Frame) -> tuple[list[BoundaryConditionSpec], list[QoISpec]]:
    defs = extract_definitions(frame)
    bcs: list[BoundaryConditionSpec] = []
    qois: list[QoISpec] = []
    for sc, c in _clauses(frame):
        if not c.present:
            continue
        bcs.extend(_bcs_from_clause(frame, sc, c))
        if c.verb.kind == "find":
            qois.extend(_qoi_from_clause(frame, sc, c, defs))
    return bcs, qois


# ---------------------------------------------------------------------------
# properties and bindings

def extract_properties(frame: Frame) -> dict[str, str]:
    out = {}
    for name in frame.components:
        k = frame.entities[name].fact("conductivity")
        if k is None:
            raise MissingConductivity(f"component {name!r} has no thermal conductivity")
        out[name] = k
    return out


def _collect_bindings(frame: Frame, coords: Sequence[str]) -> dict[str, SymbolBinding]:
    out: dict[str, SymbolBinding] = {}
    for sc in frame.chunks:
        for t in sc.tokens:
            if t.pos != "EQUATION":
                continue
            for part in (p.strip() for p in t.text.split(",")):
                eq = parse_equality(part)
                if eq is None:
                    continue
                lhs, rhs = eq
                if lhs in coords or not _IDENT_RE.match(lhs):
                    continue
                if not is_number(rhs):
                    raise NonNumericRHS(f"{lhs} = {rhs} is not a numeric value", sentence=sc.index)
                value = parse_number(rhs)
                prev = out.get(lhs)
                if prev is not None and prev.value != value:
                    raise DuplicateBinding(f"{lhs} is given two values ({prev.value} and {value})",
                                           sentence=sc.index)
                if prev is None:
                    out[lhs] = SymbolBinding(lhs, value, sc.index)
    return dict(sorted(out.items()))


def bind_parameters(frame: Frame) -> dict[str, SymbolBinding]:
    """Every ``symbol = literal`` equation whose left side is not a coordinate."""
    return _collect_bindings(frame, frame.coordinate_vars)


# ---------------------------------------------------------------------------

def parse_statement(text: str, commonsense: str | None = None, source_name: str = "<string>") -> Frame:
    """Run the full parser pipeline on a problem statement."""
    marked, tokens = analyze(text, source_name)
    chunks = chunk_statement(tokens)
    frame = Frame(source_name=source_name, sentences=marked.sentences, tokens=tokens, chunks=chunks)
    frame.entities = extract_entities(tokens, chunks)
    frame.snippets = extract_snippets(tokens, frame.entities, chunks)
    frame = derive_attributes(frame)
    frame = incorporate_commonsense(frame, default_commonsense() if commonsense is None else commonsense)
    frame = classify_state(frame)
    frame = resolve_inheritance(frame)
    frame = resolve_instantiation(frame)
    frame.graph = build_connection_graph(frame)
    frame.components = identify_components(frame, frame.graph)
    frame.domain_specs, frame.coordinate_vars, frame.through_axis = extract_domains(frame)
    frame.definitions = extract_definitions(frame)
    frame.bc_specs, frame.qoi_specs = extract_bcs_and_qoi(frame)
    frame.conductivities = extract_properties(frame)
    frame.bindings = bind_parameters(frame)
    return frame


def parse_file(path, commonsense: str | None = None) -> Frame:
    from pathlib import Path
    p = Path(path)
    return parse_statement(p.read_text(encoding="utf-8"), commonsense, p.stem)
