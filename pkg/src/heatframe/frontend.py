"""Text frontend: markup normalization, tokenization and part-of-speech tagging.

Problem statements are plain UTF-8 text with mathematics delimited by
``$...$``.  A span containing ``<``, ``=`` or ``>`` is an equation, a bare
numeric literal is a number, anything else is a symbol.  Sentences end at
``.`` (followed by whitespace or end of text) or ``;`` outside math spans.

Tagging is a closed-lexicon lookup with a few suffix rules; unknown words
are nouns, since in this domain an unrecognised content word is almost
always the name of something.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence

from .errors import EmptyInput, UnbalancedDelimiter

TAGS = ("NOUN", "VERB", "ADJ", "ADV", "ADP", "DET", "PRON", "CONJ", "PUNCT", "NUM", "SYMBOL", "EQUATION")
TENSES = ("present", "past", "other", "n/a")
SPAN_KINDS = ("symbol", "equation", "number")

_NUMBER_RE = re.compile(r"^[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?$")
_WORD_RE = re.compile(r"\d+(?:\.\d+)?|[A-Za-z][A-Za-z0-9]*(?:[-'][A-Za-z0-9]+)*|\S")
_NO_SPACE_BEFORE = {",", ";", ":", ".", ")", "]", "!", "?"}
_NO_SPACE_AFTER = {"(", "["}


@dataclass(frozen=True)
class MathSpan:
    sentence: int
    start: int
    end: int
    kind: str


@dataclass(frozen=True)
class MarkedText:
    sentences: tuple[str, ...]
    math_spans: tuple[MathSpan, ...]
    source_name: str = "<string>"

    def spans_for(self, index: int) -> tuple[MathSpan, ...]:
        return tuple(s for s in self.math_spans if s.sentence == index)


@dataclass(frozen=True)
class Token:
    text: str
    pos: str
    tense: str
    sentence_index: int
    position: int
    lemma: str = ""
    role: str | None = None

    @property
    def lower(self) -> str:
        return self.text.lower()

    @property
    def is_math(self) -> bool:
        return self.pos in ("SYMBOL", "EQUATION") or (self.pos == "NUM" and self.role == "math")


# ---------------------------------------------------------------------------
# markup

def canonical_math(content: str) -> str:
    """Strip LaTeX decoration from math content: ``L_{\\rm f}`` -> ``L_f``."""
    s = re.sub(r"\\(?:rm|mathrm|text|mathit)\b\s*", "", content)
    s = s.replace("{", "").replace("}", "").replace("\\", "")
    return " ".join(s.split())


def classify_span(content: str) -> str:
    if any(c in content for c in "<=>"):
        return "equation"
    if _NUMBER_RE.match(content.replace(" ", "")):
        return "number"
    return "symbol"


def _join(pieces: Sequence[tuple[str, bool]]) -> tuple[str, list[tuple[int, int]]]:
    """Join (text, is_math) pieces with the canonical spacing rules.

    Returns the joined string and, for each math piece, the (start, end)
    range of its content (delimiters excluded).
    """
    out: list[str] = []
    ranges: list[tuple[int, int]] = []
    length = 0
    prev: str | None = None
    for text, is_math in pieces:
        if prev is not None and not (
            (not is_math and text in _NO_SPACE_BEFORE) or prev in _NO_SPACE_AFTER
        ):
            out.append(" ")
            length += 1
        if is_math:
            out.append("$" + text + "$")
            ranges.append((length + 1, length + 1 + len(text)))
            length += len(text) + 2
            prev = "$"
        else:
            out.append(text)
            length += len(text)
            prev = text
    return "".join(out), ranges


def _segments(raw: str) -> list[tuple[str, bool]]:
    parts = raw.split("$")
    return [(p if i % 2 == 0 else canonical_math(p), i % 2 == 1) for i, p in enumerate(parts)]


def normalize_markup(raw: str, source_name: str = "<string>") -> MarkedText:
    """Split raw statement text into normalized sentences and math spans."""
    if not raw or not raw.strip():
        raise EmptyInput("problem statement is empty")
    if raw.count("$") % 2:
        raise UnbalancedDelimiter(f"odd number of '$' delimiters ({raw.count('$')})")

    sentences: list[list[tuple[str, bool]]] = []
    current: list[tuple[str, bool]] = []
    segs = _segments(raw)
    for k, (text, is_math) in enumerate(segs):
        if is_math:
            if text:
                current.append((text, True))
            continue
        last = k == len(segs) - 1
        for m in _WORD_RE.finditer(text):
            w = m.group()
            after = text[m.end():m.end() + 1]
            # '.' ends a sentence only when followed by whitespace or end of input
            if w == ";" or (w == "." and (after.isspace() or (not after and last))):
                sentences.append(current)
                current = []
            else:
                current.append((w, False))
    sentences.append(current)

    out_sentences: list[str] = []
    spans: list[MathSpan] = []
    for pieces in sentences:
        if not pieces:
            continue
        text, ranges = _join(pieces)
        idx = len(out_sentences)
        out_sentences.append(text)
        maths = [p for p, is_math in pieces if is_math]
        for (start, end), content in zip(ranges, maths):
            spans.append(MathSpan(idx, start, end, classify_span(content)))
    if not out_sentences:
        raise EmptyInput("problem statement contains no sentences")
    return MarkedText(tuple(out_sentences), tuple(spans), source_name)


# ---------------------------------------------------------------------------
# lexicon

@dataclass(frozen=True)
class LexEntry:
    pos: str
    tense: str
    lemma: str


@lru_cache(maxsize=None)
def load_lexicon() -> dict[str, LexEntry]:
    text = resources.files("heatframe.data").joinpath("lexicon.txt").read_text(encoding="utf-8")
    lex: dict[str, LexEntry] = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        cols = line.split()
        word, pos = cols[0].lower(), cols[1]
        if pos not in TAGS:
            raise ValueError(f"lexicon: unknown tag {pos!r} for {word!r}")
        tense = cols[2] if pos == "VERB" and len(cols) > 2 else ("other" if pos == "VERB" else "n/a")
        lemma = cols[3] if len(cols) > 3 else word
        if word in lex:
            raise ValueError(f"lexicon: duplicate entry {word!r}")
        lex[word] = LexEntry(pos, tense, lemma)
    return lex


def _tag_word(word: str) -> LexEntry:
    lex = load_lexicon()
    w = word.lower()
    if w in lex:
        return lex[w]
    if _NUMBER_RE.match(w):
        return LexEntry("NUM", "n/a", w)
    if not w[0].isalnum():
        return LexEntry("PUNCT", "n/a", w)
    # plural / third person of a known stem
    for cut in ("es", "s"):
        stem = w[: -len(cut)]
        if w.endswith(cut) and stem in lex:
            base = lex[stem]
            if base.pos == "NOUN":
                return LexEntry("NOUN", "n/a", stem)
            if base.pos == "VERB":
                return LexEntry("VERB", "present", base.lemma)
    if w.endswith("ly") and len(w) > 4:
        return LexEntry("ADV", "n/a", w)
    if w.endswith("ing") and len(w) > 5:
        return LexEntry("VERB", "other", w[:-3])
    if w.endswith("ed") and len(w) > 4:
        return LexEntry("VERB", "past", w[:-2])
    if w.endswith(("ous", "ical", "ive", "ible", "able")) and len(w) > 5:
        return LexEntry("ADJ", "n/a", w)
    return LexEntry("NOUN", "n/a", w)


def tag_tokens(sentence: str, spans: Iterable[MathSpan], sentence_index: int | None = None) -> list[Token]:
    """Tokenize and tag one normalized sentence.

    Each math span becomes a single SYMBOL, EQUATION or NUM token whose text
    is the span content without delimiters.
    """
    spans = sorted(spans, key=lambda s: s.start)
    if sentence_index is None:
        sentence_index = spans[0].sentence if spans else 0
    tokens: list[Token] = []

    def add_words(chunk: str) -> None:
        for w in _WORD_RE.findall(chunk):
            if w == "$":
                continue
            e = _tag_word(w)
            tokens.append(Token(w, e.pos, e.tense, sentence_index, len(tokens), e.lemma))

    cursor = 0
    for span in spans:
        add_words(sentence[cursor:span.start - 1])
        content = sentence[span.start:span.end]
        pos = {"symbol": "SYMBOL", "equation": "EQUATION", "number": "NUM"}[span.kind]
        tokens.append(Token(content, pos, "n/a", sentence_index, len(tokens), content, role="math"))
        cursor = span.end + 1
    add_words(sentence[cursor:])
    return tokens


def detokenize(tokens: Sequence[Token]) -> str:
    """Inverse of :func:`tag_tokens` on normalized sentences."""
    text, _ = _join([(t.text, t.role == "math") for t in tokens])
    return text


# ---------------------------------------------------------------------------
# syntax preparation

_COPULA = {"is", "are"}
_DEFINITION_VERBS = {"let", "lets", "denote", "denotes", "denoted"}
_PREDICATE_ADJ = {"insulated", "insulating", "adiabatic"}


def _override(tokens: list[Token], i: int) -> Token | None:
    t = tokens[i]
    w = t.lower
    prev = tokens[i - 1] if i > 0 else None
    nxt = tokens[i + 1] if i + 1 < len(tokens) else None
    if w == "normal" and prev is not None and prev.pos == "DET" and nxt is not None and nxt.lower == "of":
        return replace(t, pos="NOUN", tense="n/a")
    if w in _PREDICATE_ADJ:
        role = "predicate" if prev is not None and prev.lower in _COPULA else t.role
        return replace(t, pos="ADJ", tense="n/a", role=role)
    if w in _DEFINITION_VERBS:
        return replace(t, pos="VERB", role="definition")
    if w == "rest" and prev is not None and prev.pos == "DET":
        return replace(t, pos="NOUN", tense="n/a")
    if w in ("inside", "outside") and nxt is not None and nxt.pos == "NOUN":
        return replace(t, pos="ADJ", tense="n/a")
    if t.pos == "VERB" and t.tense == "past" and prev is not None and prev.pos in ("NOUN", "NUM", "SYMBOL") \
            and not (prev.lower in _COPULA):
        return replace(t, role="participle")
    return None


def prepare_syntax(tokens: Sequence[Token]) -> list[Token]:
    """Apply frame-specific retags; tokens without an override pass through unchanged."""
    out = list(tokens)
    for i in range(len(out)):
        new = _override(out, i)
        if new is not None:
            out[i] = new
    return out


def analyze(raw: str, source_name: str = "<string>") -> tuple[MarkedText, list[list[Token]]]:
    """Normalize, tag and prepare a whole statement."""
    marked = normalize_markup(raw, source_name)
    sentences = [
        prepare_syntax(tag_tokens(s, marked.spans_for(i), i)) for i, s in enumerate(marked.sentences)
    ]
    return marked, sentences
