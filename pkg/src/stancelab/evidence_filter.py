"""Lexicon matching that decides which sentences count as evidence sentences.

A sentence qualifies when it contains at least one nicotine-device term and at
least one evidence term, both matched at word boundaries. Phrases match either
case-folded or exactly; exact mode exists for short acronyms (EC, ENDS) that
would otherwise collide with ordinary words.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path

from .errors import StancelabError
from .segmenter import Sentence


class CaseMode(str, Enum):
    FOLD = "fold"
    EXACT = "exact"


class LexiconFormatError(StancelabError):
    pass


@dataclass(frozen=True)
class LexiconEntry:
    phrase: str
    case_mode: CaseMode = CaseMode.FOLD

    def __post_init__(self):
        if not self.phrase or self.phrase != self.phrase.strip():
            raise ValueError(f"lexicon phrase must be non-empty and trimmed: {self.phrase!r}")


@dataclass(frozen=True)
class Lexicon:
    name: str
    entries: tuple[LexiconEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError(f"lexicon {self.name!r} has no entries")


@dataclass(frozen=True)
class TermMatch:
    phrase: str
    start: int
    end: int


@dataclass(frozen=True)
class EvidenceSentence:
    sentence: Sentence
    ends_matches: tuple[TermMatch, ...]
    evidence_matches: tuple[TermMatch, ...]

    def __post_init__(self):
        if not self.ends_matches or not self.evidence_matches:
            raise ValueError("evidence sentence requires matches from both lexicons")


def _fold(phrases) -> tuple[LexiconEntry, ...]:
    return tuple(LexiconEntry(p, CaseMode.FOLD) for p in phrases)


def _exact(phrases) -> tuple[LexiconEntry, ...]:
    return tuple(LexiconEntry(p, CaseMode.EXACT) for p in phrases)


DEFAULT_ENDS_LEXICON = Lexicon(
    "ends",
    _fold(
        [
            "e-cig",
            "e-cigs",
            "ecig",
            "ecigs",
            "e cig",
            "e cigs",
            "e-cigarette",
            "e-cigarettes",
            "electronic cigarette",
            "electronic cigarettes",
            "e-pen",
            "e-pens",
            "vape",
            "vapes",
            "vaper",
            "vapers",
            "vaping",
            "vaporizer",
            "vaporizers",
            "vaporiser",
            "vaporisers",
        ]
    )
    + _exact(["EC", "ECs", "ENDS"]),
)

DEFAULT_EVIDENCE_LEXICON = Lexicon(
    "evidence",
    _fold(
        [
            "evidence",
            "study",
            "studies",
            "research",
            "report",
            "reports",
            "finding",
            "findings",
            "analysis",
            "analyses",
            "literature",
            "data",
            "survey",
            "surveys",
        ]
    ),
)

# Word boundary: text edge or a non-alphanumeric neighbour. Hyphens inside a
# phrase are literal; a hyphen outside the phrase still counts as a boundary.
_BOUNDARY_L = r"(?<![0-9A-Za-z])"
_BOUNDARY_R = r"(?![0-9A-Za-z])"


@lru_cache(maxsize=64)
def _compiled(lexicon: Lexicon):
    patterns = []
    for entry in lexicon.entries:
        flags = re.IGNORECASE if entry.case_mode is CaseMode.FOLD else 0
        patterns.append(
            (entry.phrase, re.compile(_BOUNDARY_L + re.escape(entry.phrase) + _BOUNDARY_R, flags))
        )
    return tuple(patterns)


def find_matches(sentence_text: str, lexicon: Lexicon) -> list[TermMatch]:
    """Return every word-boundary occurrence of every phrase, sorted by start."""
    matches = []
    for phrase, pattern in _compiled(lexicon):
        for m in pattern.finditer(sentence_text):
            matches.append(TermMatch(phrase=phrase, start=m.start(), end=m.end()))
    matches.sort(key=lambda m: (m.start, m.end, m.phrase))
    return matches


def is_evidence(
    sentence: Sentence,
    ends_lexicon: Lexicon | None = None,
    evidence_lexicon: Lexicon | None = None,
) -> EvidenceSentence | None:
    """Classify a sentence as an evidence sentence, or None if it is not."""
    ends_lexicon = ends_lexicon or DEFAULT_ENDS_LEXICON
    evidence_lexicon = evidence_lexicon or DEFAULT_EVIDENCE_LEXICON
    ends = find_matches(sentence.text, ends_lexicon)
    if not ends:
        return None
    evidence = find_matches(sentence.text, evidence_lexicon)
    if not evidence:
        return None
    return EvidenceSentence(
        sentence=sentence,
        ends_matches=tuple(ends),
        evidence_matches=tuple(evidence),
    )


def load_lexicon(path, name: str | None = None) -> Lexicon:
    """Load a lexicon override file: one phrase per line, optional <TAB>exact."""
    path = Path(path)
    entries: list[LexiconEntry] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) == 1:
            entries.append(LexiconEntry(parts[0].strip(), CaseMode.FOLD))
        elif len(parts) == 2 and parts[1].strip() in (CaseMode.FOLD.value, CaseMode.EXACT.value):
            entries.append(LexiconEntry(parts[0].strip(), CaseMode(parts[1].strip())))
        else:
            raise LexiconFormatError(f"{path}:{lineno}: expected 'phrase' or 'phrase<TAB>exact'")
    if not entries:
        raise LexiconFormatError(f"{path}: no entries")
    return Lexicon(name or path.stem, tuple(entries))
