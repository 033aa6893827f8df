"""Corpus ingestion: manifests, text canonicalization and inquiry transcripts.

A corpus is described by a CSV manifest (one row per source document). Raw
document text is canonicalized before segmentation; transcripts additionally
go through witness-text extraction so that only testimony is analyzed.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import StancelabError


class Country(str, Enum):
    AU = "AU"
    UK = "UK"


class CorpusKind(str, Enum):
    ERKU = "ERKU"
    INQUIRY_SUBMISSION = "INQUIRY_SUBMISSION"
    INQUIRY_TRANSCRIPT = "INQUIRY_TRANSCRIPT"


class OrgCategory(str, Enum):
    GOVERNMENT = "government"
    CHARITY = "charity"
    PROFESSIONAL_BODY = "professional_body"
    RESEARCH_GROUP = "research_group"
    OTHER = "other"


class Role(str, Enum):
    WITNESS = "witness"
    QUESTIONER = "questioner"


class MissingFile(StancelabError):
    pass


class DuplicateId(StancelabError):
    pass


class InvalidEnum(StancelabError):
    pass


class ManifestFormatError(StancelabError):
    pass


class TranscriptFormatError(StancelabError):
    pass


class EmptyResult(StancelabError):
    pass


@dataclass(frozen=True)
class DocumentMeta:
    id: str
    country: Country
    corpus_kind: CorpusKind
    org_name: str
    org_category: OrgCategory
    source_path: str

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be non-empty")
        if not self.source_path:
            raise ValueError(f"{self.id}: source_path must be non-empty")


@dataclass(frozen=True)
class Document:
    meta: DocumentMeta
    text: str

    def __post_init__(self):
        # Construction happens after canonicalize, so reject raw CRLF text.
        if not self.text:
            raise ValueError(f"{self.meta.id}: document text is empty")
        if "\r" in self.text:
            raise ValueError(f"{self.meta.id}: document text contains CR")


@dataclass(frozen=True)
class TranscriptTurn:
    role: Role
    speaker: str
    utterance: str


@dataclass(frozen=True)
class CanonicalizeOptions:
    strip_references: bool = True
    strip_footnote_markers: bool = True


MANIFEST_HEADER = ("id", "country", "corpus_kind", "org_name", "org_category", "source_path")


def load_manifest(path) -> list[DocumentMeta]:
    """Read a manifest CSV into DocumentMeta rows, rejecting duplicate ids."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"manifest not found: {path}")
    metas: list[DocumentMeta] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_HEADER:
            raise ManifestFormatError(
                f"manifest header must be {','.join(MANIFEST_HEADER)}, got {reader.fieldnames}"
            )
        for lineno, row in enumerate(reader, start=2):
            if any(row[k] is None for k in MANIFEST_HEADER):
                raise ManifestFormatError(f"{path}:{lineno}: wrong number of fields")
            try:
                meta = DocumentMeta(
                    id=row["id"],
                    country=Country(row["country"]),
                    corpus_kind=CorpusKind(row["corpus_kind"]),
                    org_name=row["org_name"],
                    org_category=OrgCategory(row["org_category"]),
                    source_path=row["source_path"],
                )
            except ValueError as exc:
                raise InvalidEnum(f"{path}:{lineno}: {exc}") from exc
            if meta.id in seen:
                raise DuplicateId(f"{path}:{lineno}: duplicate document id {meta.id!r}")
            seen.add(meta.id)
            metas.append(meta)
    return metas


def write_manifest(metas, path) -> None:
    """Write DocumentMeta rows as a manifest CSV (inverse of load_manifest)."""
    seen: set[str] = set()
    for meta in metas:
        if meta.id in seen:
            raise DuplicateId(f"duplicate document id {meta.id!r}")
        seen.add(meta.id)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for meta in metas:
            writer.writerow(
                [
                    meta.id,
                    meta.country.value,
                    meta.corpus_kind.value,
                    meta.org_name,
                    meta.org_category.value,
                    meta.source_path,
                ]
            )


_REFERENCE_HEADINGS = frozenset({"references", "bibliography", "endnotes"})
_BRACKET_MARKER = re.compile(r"\[\d+\]")
_SUPERSCRIPT_MARKER = re.compile(r"(?<=\S)[⁰¹²³⁴-⁹]+")


def _strip_reference_block(text: str) -> str:
    # Last matching heading wins: a heading-like line inside the body must not
    # drag the rest of the document away with it.
    lines = text.split("\n")
    for i in range(len(lines) - 1, -1, -1):
        if lines[i].strip().lower() in _REFERENCE_HEADINGS:
            return "\n".join(lines[:i])
    return text


def _strip_markers(text: str) -> str:
    # Removal can expose new [n] spans, so iterate to a fixed point.
    while True:
        new = _BRACKET_MARKER.sub("", text)
        new = _SUPERSCRIPT_MARKER.sub("", new)
        if new == text:
            return text
        text = new


def _collapse_blank_runs(text: str) -> str:
    lines = text.split("\n")
    out: list[str] = []
    run: list[str] = []
    for line in lines:
        if line.strip() == "":
            run.append(line)
            continue
        out.extend([""] if len(run) >= 3 else run)
        run = []
        out.append(line)
    out.extend([""] if len(run) >= 3 else run)
    return "\n".join(out)


def canonicalize(raw: str, opts: CanonicalizeOptions | None = None) -> str:
    """Normalize raw document text into the single form the pipeline consumes.

    Line endings become LF, an optional trailing references block and footnote
    markers are dropped, and runs of three or more blank lines collapse to one.
    """
    if opts is None:
        opts = CanonicalizeOptions()
    text = raw.replace("\r\n", "\n").replace("\r", "\n")
    if opts.strip_references:
        text = _strip_reference_block(text)
    if opts.strip_footnote_markers:
        text = _strip_markers(text)
    return _collapse_blank_runs(text)


def parse_transcript_turns(text: str) -> list[TranscriptTurn]:
    """Parse the role<TAB>speaker<TAB>utterance transcript format."""
    turns: list[TranscriptTurn] = []
    normalized = text.replace("\r\n", "\n").replace("\r", "\n")
    for lineno, line in enumerate(normalized.split("\n"), start=1):
        if not line.strip():
            continue
        parts = line.split("\t", 2)
        if len(parts) != 3:
            raise TranscriptFormatError(
                f"line {lineno}: expected role<TAB>speaker<TAB>utterance"
            )
        role_token, speaker, utterance = parts
        try:
            role = Role(role_token)
        except ValueError as exc:
            raise TranscriptFormatError(f"line {lineno}: unknown role {role_token!r}") from exc
        if not utterance.strip():
            raise TranscriptFormatError(f"line {lineno}: empty utterance")
        turns.append(TranscriptTurn(role=role, speaker=speaker, utterance=utterance))
    return turns


def extract_witness_text(turns) -> str:
    """Join witness utterances with LF, dropping questioner turns entirely."""
    parts = [t.utterance for t in turns if t.role is Role.WITNESS]
    if not parts:
        raise EmptyResult("transcript has no witness turns")
    return "\n".join(parts)
