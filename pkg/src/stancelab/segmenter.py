"""Rule-based sentence boundary detection over canonicalized document text.

A boundary is a terminator (. ! ?), optionally followed by closing quotes or
brackets, followed by whitespace and then an uppercase letter, a digit or an
opening quote. Abbreviations, single-letter initials, decimals and ellipses
suppress the split. Blank lines always terminate; a heading line without
terminal punctuation is emitted as a sentence of its own.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .corpus import Document

_TERMINATORS = ".!?"
_CLOSERS = "\"')]’”"
_OPENERS = "\"'([‘“"

# Case-sensitive surface forms. Keeping "No."/"Dr." capitalized means a plain
# sentence ending in "no" or "dr" still splits.
DEFAULT_ABBREVIATIONS = frozenset(
    {
        "e.g.",
        "i.e.",
        "et al.",
        "etc.",
        "vs.",
        "cf.",
        "Dr.",
        "Mr.",
        "Mrs.",
        "Ms.",
        "Prof.",
        "No.",
        "Fig.",
        "Eq.",
        "approx.",
        "Jan.",
        "Feb.",
        "Mar.",
        "Apr.",
        "Jun.",
        "Jul.",
        "Aug.",
        "Sep.",
        "Sept.",
        "Oct.",
        "Nov.",
        "Dec.",
    }
)


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    index: int
    text: str
    start: int
    end: int

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError(f"{self.doc_id}[{self.index}]: empty span")
        if not self.text or self.text != self.text.strip():
            raise ValueError(f"{self.doc_id}[{self.index}]: text must be non-empty and trimmed")


def sentence_id(sentence: Sentence) -> str:
    """Stable identifier used by downstream artifacts and the annotation API."""
    return f"{sentence.doc_id}#{sentence.index}"


def read_abbreviations(path) -> frozenset[str]:
    """Load an abbreviation override file, one surface form per line."""
    entries = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        entry = line.strip()
        if entry:
            entries.add(entry)
    return frozenset(entries)


def _blocks(text: str):
    """Yield (start, end) spans of blank-line-separated blocks."""
    pos = 0
    block_start = None
    last_content_end = None
    for line in text.split("\n"):
        end = pos + len(line)
        if line.strip():
            if block_start is None:
                block_start = pos
            last_content_end = end
        else:
            if block_start is not None:
                yield block_start, last_content_end
                block_start = None
        pos = end + 1
    if block_start is not None:
        yield block_start, last_content_end


def _ends_with_abbreviation(text: str, lo: int, dot: int, abbreviations) -> bool:
    for abbr in abbreviations:
        start = dot + 1 - len(abbr)
        if start < lo:
            continue
        if text[start : dot + 1] != abbr:
            continue
        if start == lo or not text[start - 1].isalnum():
            return True
    return False


def _cuts(text: str, lo: int, hi: int, abbreviations):
    """Yield (end_of_sentence, start_of_next) split points inside one block."""
    i = lo
    while i < hi:
        ch = text[i]
        if ch not in _TERMINATORS:
            i += 1
            continue
        j = i + 1
        while j < hi and text[j] in _CLOSERS:
            j += 1
        if j >= hi:
            break
        if not text[j].isspace():
            i += 1
            continue
        k = j
        while k < hi and text[k].isspace():
            k += 1
        if k >= hi:
            break
        nxt = text[k]
        if not (nxt.isupper() or nxt.isdigit() or nxt in _OPENERS):
            i += 1
            continue
        if ch == ".":
            prev = text[i - 1] if i > lo else ""
            if prev == "." or (i + 1 < hi and text[i + 1] == "."):
                i += 1
                continue
            if prev.isdigit() and i + 1 < hi and text[i + 1].isdigit():
                i += 1
                continue
            if (
                prev.isalpha()
                and prev.isupper()
                and (i - 1 == lo or not text[i - 2].isalnum())
            ):
                i += 1
                continue
            if _ends_with_abbreviation(text, lo, i, abbreviations):
                i += 1
                continue
        yield j, k
        i = k
        continue


def segment(doc: Document, abbreviations: frozenset[str] | None = None) -> list[Sentence]:
    """Split a document into sentences with dense indices and exact spans."""
    if abbreviations is None:
        abbreviations = DEFAULT_ABBREVIATIONS
    text = doc.text
    sentences: list[Sentence] = []
    for lo, hi in _blocks(text):
        start = lo
        spans: list[tuple[int, int]] = []
        for end, nxt in _cuts(text, lo, hi, abbreviations):
            spans.append((start, end))
            start = nxt
        spans.append((start, hi))
        for s, e in spans:
            while s < e and text[s].isspace():
                s += 1
            while e > s and text[e - 1].isspace():
                e -= 1
            if s == e:
                continue
            sentences.append(
                Sentence(
                    doc_id=doc.meta.id,
                    index=len(sentences),
                    text=text[s:e],
                    start=s,
                    end=e,
                )
            )
    return sentences
