"""Shallow chunking of tagged sentences into verb groups, noun phrases and clauses.

The conduction parser never builds a full parse tree.  A sentence is cut at
its finite verb groups; the coordinated noun phrases immediately before a
verb group are its subjects and those immediately after are its objects.
Whatever follows the objects up to the next clause is the clause tail, where
locators such as ``over the face at $x = 0$`` live.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Sequence, Union

from .frontend import Token, detokenize

CLAUSE_KINDS = ("connection", "inheritance", "copula", "definition", "extent", "maintained", "find")
PP_LINKS = ("of", "through")


@lru_cache(maxsize=None)
def load_vocabulary() -> dict[str, tuple[tuple[str, ...], ...]]:
    """Read ``data/vocabulary.txt`` into ``{section: phrases}``."""
    text = resources.files("heatframe.data").joinpath("vocabulary.txt").read_text(encoding="utf-8")
    sections: dict[str, list[tuple[str, ...]]] = {}
    current = None
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections.setdefault(current, [])
            continue
        if current is None:
            raise ValueError("vocabulary: phrase outside of a section")
        words = tuple(line.lower().split())
        sections[current].append(words)
        if words[0] == "is":
            sections[current].append(("are",) + words[1:])
    return {k: tuple(v) for k, v in sections.items()}


def vocabulary_words(section: str) -> set[str]:
    return {" ".join(p) for p in load_vocabulary().get(section, ())}


@lru_cache(maxsize=None)
def _verb_phrases() -> tuple[tuple[tuple[str, ...], str], ...]:
    vocab = load_vocabulary()
    phrases = [(p, kind) for kind in CLAUSE_KINDS for p in vocab.get(kind, ())]
    phrases.sort(key=lambda pk: -len(pk[0]))
    return tuple(phrases)


@dataclass(frozen=True)
class VerbGroup:
    start: int
    end: int
    phrase: str
    kind: str
    tense: str
    participle: bool = False


@dataclass(frozen=True)
class Mention:
    start: int
    end: int
    text: str
    det: str | None = None


@dataclass(frozen=True)
class NounPhrase:
    """A head mention with an optional ``of``/``through`` chain and apposed symbol."""

    head: Mention
    pps: tuple[tuple[str, Mention], ...] = ()
    symbol: str | None = None
    start: int = 0
    end: int = 0

    @property
    def owner(self) -> Mention | None:
        for adp, m in self.pps:
            if adp == "of":
                return m
        return None

    @property
    def text(self) -> str:
        out = self.head.text
        for adp, m in self.pps:
            out += f" {adp} {m.text}"
        return out

    @property
    def det(self) -> str | None:
        return self.head.det


Item = Union[NounPhrase, str]


@dataclass
class Clause:
    sentence: int
    verb: VerbGroup
    subjects: list[Item]
    objects: list[Item]
    tail: list[Token]
    complement: str
    colon_items: list[NounPhrase] = field(default_factory=list)
    start: int = 0
    end: int = 0
    tail_start: int = 0

    @property
    def present(self) -> bool:
        return self.verb.tense == "present" or self.verb.participle

    def subject_nps(self) -> list[NounPhrase]:
        return [s for s in self.subjects if isinstance(s, NounPhrase)]

    def object_nps(self) -> list[NounPhrase]:
        return [o for o in self.objects if isinstance(o, NounPhrase)]


@dataclass
class SentenceChunks:
    index: int
    tokens: list[Token]
    groups: list[VerbGroup]
    mentions: list[Mention]
    nps: list[NounPhrase]
    clauses: list[Clause]


def _match_phrase(tokens: Sequence[Token], i: int) -> tuple[int, str, str] | None:
    words = [t.lower for t in tokens]
    for phrase, kind in _verb_phrases():
        n = len(phrase)
        if tuple(words[i:i + n]) == phrase:
            return n, " ".join(phrase), kind
    return None


def find_verb_groups(tokens: Sequence[Token]) -> list[VerbGroup]:
    groups: list[VerbGroup] = []
    i = 0
    while i < len(tokens):
        t = tokens[i]
        if t.pos in ("VERB", "ADP"):
            hit = _match_phrase(tokens, i)
            if hit is not None and (t.pos == "VERB" or hit[2] == "connection"):
                n, phrase, kind = hit
                verbs = [x for x in tokens[i:i + n] if x.pos == "VERB"]
                tense = verbs[0].tense if verbs else "present"
                participle = bool(verbs) and verbs[0].role == "participle"
                if not verbs:
                    participle = True  # reduced form, e.g. "a plate in contact with air"
                if phrase == "are" or phrase.startswith("are "):
                    phrase = "is" + phrase[3:]
                groups.append(VerbGroup(i, i + n, phrase, kind, tense, participle))
                i += n
                continue
        if t.pos == "VERB":
            j = i
            while j < len(tokens) and tokens[j].pos == "VERB":
                j += 1
            phrase = " ".join(x.lower for x in tokens[i:j])
            kind = "find" if tokens[j - 1].lower in vocabulary_words("find") else "other"
            groups.append(VerbGroup(i, j, phrase, kind, t.tense, t.role == "participle"))
            i = j
            continue
        i += 1
    return groups


def find_mentions(tokens: Sequence[Token], groups: Sequence[VerbGroup]) -> list[Mention]:
    """Maximal ADJ/NOUN runs containing a noun; a digit after a noun is an index."""
    in_group = set()
    for g in groups:
        in_group.update(range(g.start, g.end))
    mentions: list[Mention] = []
    i = 0
    n = len(tokens)
    while i < n:
        if i in in_group or tokens[i].pos not in ("ADJ", "NOUN"):
            i += 1
            continue
        j = i
        while j < n and j not in in_group and (
            tokens[j].pos in ("ADJ", "NOUN")
            or (tokens[j].pos == "NUM" and tokens[j].role != "math" and tokens[j].text.isdigit()
                and tokens[j - 1].pos == "NOUN")
        ):
            j += 1
        # trailing adjectives are predicates, not part of the name
        k = j
        while k > i and tokens[k - 1].pos == "ADJ":
            k -= 1
        if any(tokens[x].pos == "NOUN" for x in range(i, k)):
            det = tokens[i - 1].lower if i > 0 and tokens[i - 1].pos == "DET" else None
            text = " ".join(tokens[x].lower for x in range(i, k))
            mentions.append(Mention(i, k, text, det))
        i = max(j, i + 1)
    return mentions


def build_noun_phrases(tokens: Sequence[Token], mentions: Sequence[Mention]) -> list[NounPhrase]:
    by_start = {m.start: m for m in mentions}
    nps: list[NounPhrase] = []
    consumed: set[int] = set()
    for m in mentions:
        if m.start in consumed:
            continue
        pps: list[tuple[str, Mention]] = []
        end = m.end
        while end < len(tokens) and tokens[end].lower in PP_LINKS:
            k = end + 1
            if k < len(tokens) and tokens[k].pos == "DET":
                k += 1
            nxt = by_start.get(k)
            if nxt is None:
                break
            pps.append((tokens[end].lower, nxt))
            consumed.add(nxt.start)
            end = nxt.end
        symbol = None
        if end < len(tokens) and tokens[end].pos == "SYMBOL":
            symbol = tokens[end].text
            end += 1
        start = m.start - 1 if m.det is not None else m.start
        nps.append(NounPhrase(m, tuple(pps), symbol, start, end))
    return nps


def _is_conj(tok: Token) -> bool:
    return tok.pos == "CONJ" and tok.lower in ("and", "or")


def _items_backward(tokens, nps_by_end, pos: int, floor: int) -> tuple[list[Item], int]:
    """Collect the coordinated item list ending just before ``pos``."""
    items: list[Item] = []
    p = pos - 1
    while p >= floor and tokens[p].pos == "ADV":
        p -= 1
    seen_conj = False
    start = pos
    while p >= floor:
        if p in nps_by_end:
            np_ = nps_by_end[p]
            items.insert(0, np_)
            start = np_.start
            p = np_.start - 1
        elif tokens[p].pos == "SYMBOL":
            items.insert(0, tokens[p].text)
            start = p
            p -= 1
        else:
            break
        # connector
        q = p
        conj = False
        if q >= floor and _is_conj(tokens[q]):
            conj = True
            q -= 1
        if q >= floor and tokens[q].text == ",":
            q -= 1
        if q == p:
            break
        if not (conj or seen_conj):
            break
        seen_conj = seen_conj or conj
        while q >= floor and tokens[q].pos == "DET":
            q -= 1
        if q < floor or not (q in nps_by_end or tokens[q].pos == "SYMBOL"):
            break
        p = q
    return items, start


def _items_forward(tokens, nps_by_start, pos: int, ceil: int) -> tuple[list[Item], int]:
    items: list[Item] = []
    conj_seen = False
    p = pos
    end = pos
    first_only_end = None
    while p < ceil:
        while p < ceil and tokens[p].pos in ("DET", "ADV"):
            p += 1
        if p < ceil and p in nps_by_start:
            np_ = nps_by_start[p]
            items.append(np_)
            p = np_.end
        elif p < ceil and tokens[p].pos == "SYMBOL":
            items.append(tokens[p].text)
            p += 1
        else:
            break
        end = p
        if first_only_end is None:
            first_only_end = p
        q = p
        conj = False
        if q < ceil and tokens[q].text == ",":
            q += 1
        if q < ceil and _is_conj(tokens[q]):
            conj = True
            q += 1
        if q == p:
            break
        conj_seen = conj_seen or conj
        p = q
    if len(items) > 1 and not conj_seen:
        return items[:1], first_only_end
    return items, end


def chunk_sentence(index: int, tokens: list[Token]) -> SentenceChunks:
    groups = find_verb_groups(tokens)
    mentions = find_mentions(tokens, groups)
    nps = build_noun_phrases(tokens, mentions)
    nps_by_end = {np_.end - 1: np_ for np_ in nps}
    nps_by_start = {np_.start: np_ for np_ in nps}
    # allow a bare mention start (no determiner) to find its NP
    for np_ in nps:
        nps_by_start.setdefault(np_.head.start, np_)

    finite = [g for g in groups if not g.participle]
    participles = [g for g in groups if g.participle and g.kind == "connection"]

    prelim = []
    floor = 0
    for g in finite:
        subjects, s_start = _items_backward(tokens, nps_by_end, g.start, floor)
        prelim.append((g, subjects, s_start))
        floor = g.end
    clauses: list[Clause] = []
    for k, (g, subjects, s_start) in enumerate(prelim):
        ceil = prelim[k + 1][2] if k + 1 < len(prelim) else len(tokens)
        objects, o_end = _items_forward(tokens, nps_by_start, g.end, ceil)
        tail = list(tokens[o_end:ceil])
        comp_tokens = [t for t in tokens[g.end:ceil] if not (t.pos == "PUNCT" and t.text in ",;.")] \
            if g.end < ceil else []
        colon_items: list[NounPhrase] = []
        for c in range(o_end, len(tokens)):
            if tokens[c].text == ":":
                colon_items = [np_ for np_ in nps if np_.start > c]
                break
        clauses.append(Clause(index, g, subjects, objects, tail, detokenize(comp_tokens),
                              colon_items, s_start, ceil, o_end))
    for g in participles:
        subjects, s_start = _items_backward(tokens, nps_by_end, g.start, 0)
        objects, o_end = _items_forward(tokens, nps_by_start, g.end, len(tokens))
        clauses.append(Clause(index, g, subjects[-1:], objects, [], "", [], s_start, o_end, o_end))
    return SentenceChunks(index, tokens, groups, mentions, nps, clauses)


def chunk_statement(sentences: Sequence[list[Token]]) -> list[SentenceChunks]:
    return [chunk_sentence(i, toks) for i, toks in enumerate(sentences)]
