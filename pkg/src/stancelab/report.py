"""Breakdown of classification outcomes by corpus and country.

The breakdown mirrors the layout of the headline results table: one row per
corpus/country pair, two total rows, and rounded expected helpful/harmful
counts under an independence model. Percentages use only resolved records,
so FAILED classifications never dilute them.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Literal, Mapping

from .classifier import ClassificationRecord, Label
from .corpus import Country, CorpusKind, DocumentMeta
from .errors import StancelabError
from .stats import (
    ChiSquareResult,
    ContingencyTable2x2,
    DegenerateMargin,
    expected_counts,
    pearson_chi_square,
    round_half_up,
)

TOTAL = "TOTAL"

_KIND_ORDER = (CorpusKind.ERKU, CorpusKind.INQUIRY_SUBMISSION, CorpusKind.INQUIRY_TRANSCRIPT)
_COUNTRY_ORDER = (Country.AU, Country.UK)

_DISPLAY_NAMES = {
    CorpusKind.ERKU.value: "Erku corpus",
    CorpusKind.INQUIRY_SUBMISSION.value: "Inquiry submissions",
    CorpusKind.INQUIRY_TRANSCRIPT.value: "Inquiry transcripts",
    TOTAL: "Total observed",
}

CSV_HEADER = (
    "corpus,country,n_evidence,n_helpful,pct_helpful,n_harmful,pct_harmful,n_neither,n_failed"
)


class UnresolvedSentence(StancelabError):
    pass


@dataclass(frozen=True)
class BreakdownRow:
    corpus: str  # CorpusKind value or TOTAL
    country: Country
    n_evidence: int
    n_helpful: int
    pct_helpful: int
    n_harmful: int
    pct_harmful: int
    n_neither: int
    n_failed: int

    def __post_init__(self):
        if self.n_helpful + self.n_harmful + self.n_neither + self.n_failed != self.n_evidence:
            raise ValueError(f"{self.corpus}/{self.country.value}: counts do not sum to n_evidence")


@dataclass(frozen=True)
class Breakdown:
    rows: tuple[BreakdownRow, ...]
    expected_helpful: Mapping[Country, int | None]
    expected_harmful: Mapping[Country, int | None]
    chi_square: ChiSquareResult | None


def format_percent(numerator: int, denominator: int) -> int:
    """Integer percentage of numerator/denominator, rounding halves up."""
    if denominator < 1:
        raise ValueError("denominator must be >= 1")
    if not 0 <= numerator <= denominator:
        raise ValueError("numerator must lie in [0, denominator]")
    return (200 * numerator + denominator) // (2 * denominator)


def _pct(count: int, resolved: int) -> int:
    return format_percent(count, resolved) if resolved else 0


def aggregate(
    records,
    metas,
    sentence_index: Mapping[str, str],
) -> Breakdown:
    """Group records into the corpus/country breakdown.

    sentence_index maps sentence_id to doc_id; metas supply each document's
    corpus kind and country.
    """
    meta_by_id: dict[str, DocumentMeta] = {meta.id: meta for meta in metas}
    counts: dict[tuple[str, Country], dict[str, int]] = {}
    for kind in _KIND_ORDER:
        for country in _COUNTRY_ORDER:
            counts[(kind.value, country)] = {"evidence": 0, "helpful": 0, "harmful": 0, "neither": 0, "failed": 0}

    record: ClassificationRecord
    for record in records:
        doc_id = sentence_index.get(record.sentence_id)
        if doc_id is None:
            raise UnresolvedSentence(f"no document known for sentence {record.sentence_id}")
        meta = meta_by_id.get(doc_id)
        if meta is None:
            raise UnresolvedSentence(f"sentence {record.sentence_id} resolves to unknown document {doc_id}")
        cell = counts[(meta.corpus_kind.value, meta.country)]
        cell["evidence"] += 1
        if record.label is None:
            cell["failed"] += 1
        else:
            cell[record.label.value] += 1

    rows: list[BreakdownRow] = []
    totals = {
        country: {"evidence": 0, "helpful": 0, "harmful": 0, "neither": 0, "failed": 0}
        for country in _COUNTRY_ORDER
    }
    for kind in _KIND_ORDER:
        for country in _COUNTRY_ORDER:
            cell = counts[(kind.value, country)]
            for key in totals[country]:
                totals[country][key] += cell[key]
            rows.append(_row(kind.value, country, cell))
    for country in _COUNTRY_ORDER:
        rows.append(_row(TOTAL, country, totals[country]))

    expected_helpful: dict[Country, int | None] = {c: None for c in _COUNTRY_ORDER}
    expected_harmful: dict[Country, int | None] = {c: None for c in _COUNTRY_ORDER}
    chi: ChiSquareResult | None = None
    observed = tuple(
        (totals[country]["helpful"], totals[country]["harmful"]) for country in _COUNTRY_ORDER
    )
    if any(v > 0 for pair in observed for v in pair):
        table = ContingencyTable2x2(observed)
        try:
            expected = expected_counts(table)
        except DegenerateMargin:
            expected = None
        if expected is not None:
            for i, country in enumerate(_COUNTRY_ORDER):
                expected_helpful[country] = round_half_up(expected[i][0])
                expected_harmful[country] = round_half_up(expected[i][1])
            try:
                chi = pearson_chi_square(table)
            except DegenerateMargin:
                chi = None
    return Breakdown(
        rows=tuple(rows),
        expected_helpful=expected_helpful,
        expected_harmful=expected_harmful,
        chi_square=chi,
    )


def _row(corpus: str, country: Country, cell: dict) -> BreakdownRow:
    resolved = cell["evidence"] - cell["failed"]
    return BreakdownRow(
        corpus=corpus,
        country=country,
        n_evidence=cell["evidence"],
        n_helpful=cell["helpful"],
        pct_helpful=_pct(cell["helpful"], resolved),
        n_harmful=cell["harmful"],
        pct_harmful=_pct(cell["harmful"], resolved),
        n_neither=cell["neither"],
        n_failed=cell["failed"],
    )


Format = Literal["text", "csv", "machine"]


def render(breakdown: Breakdown, fmt: Format) -> bytes:
    if fmt == "csv":
        return _render_csv(breakdown)
    if fmt == "machine":
        return _render_machine(breakdown)
    if fmt == "text":
        return _render_text(breakdown)
    raise ValueError(f"unknown format {fmt!r}")


def _render_csv(breakdown: Breakdown) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for row in breakdown.rows:
        writer.writerow(
            [
                row.corpus,
                row.country.value,
                row.n_evidence,
                row.n_helpful,
                row.pct_helpful,
                row.n_harmful,
                row.pct_harmful,
                row.n_neither,
                row.n_failed,
            ]
        )
    return buf.getvalue().encode("utf-8")


def parse_breakdown_csv(data: bytes) -> list[BreakdownRow]:
    """Inverse of the csv renderer, used to round-trip breakdown tables."""
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    header = next(reader)
    if header != CSV_HEADER.split(","):
        raise ValueError(f"unexpected csv header: {header}")
    rows = []
    for record in reader:
        corpus, country, *numbers = record
        ev, nh, ph, nm, pm, nn, nf = (int(v) for v in numbers)
        rows.append(
            BreakdownRow(
                corpus=corpus,
                country=Country(country),
                n_evidence=ev,
                n_helpful=nh,
                pct_helpful=ph,
                n_harmful=nm,
                pct_harmful=pm,
                n_neither=nn,
                n_failed=nf,
            )
        )
    return rows


def _render_machine(breakdown: Breakdown) -> bytes:
    payload = {
        "rows": [
            {
                "corpus": row.corpus,
                "country": row.country.value,
                "n_evidence": row.n_evidence,
                "n_helpful": row.n_helpful,
                "pct_helpful": row.pct_helpful,
                "n_harmful": row.n_harmful,
                "pct_harmful": row.pct_harmful,
                "n_neither": row.n_neither,
                "n_failed": row.n_failed,
            }
            for row in breakdown.rows
        ],
        "expected": {
            country.value: {
                "helpful": breakdown.expected_helpful[country],
                "harmful": breakdown.expected_harmful[country],
            }
            for country in _COUNTRY_ORDER
        },
        "chi_square": None
        if breakdown.chi_square is None
        else {
            "statistic": breakdown.chi_square.statistic,
            "df": breakdown.chi_square.df,
            "p_value": breakdown.chi_square.p_value,
            "expected": [list(row) for row in breakdown.chi_square.expected],
            "low_expected": breakdown.chi_square.low_expected,
        },
    }
    return (json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _render_text(breakdown: Breakdown) -> bytes:
    headers = ("", "", "Evidence", "Helpful", "Harmful", "Neither", "Failed")
    lines = [headers]
    for row in breakdown.rows:
        lines.append(
            (
                _DISPLAY_NAMES[row.corpus],
                row.country.value,
                str(row.n_evidence),
                f"{row.n_helpful} ({row.pct_helpful}%)",
                f"{row.n_harmful} ({row.pct_harmful}%)",
                str(row.n_neither),
                str(row.n_failed),
            )
        )
    for country in _COUNTRY_ORDER:
        helpful = breakdown.expected_helpful[country]
        harmful = breakdown.expected_harmful[country]
        lines.append(
            (
                "Expected values",
                country.value,
                "",
                "-" if helpful is None else str(helpful),
                "-" if harmful is None else str(harmful),
                "",
                "",
            )
        )
    widths = [max(len(line[i]) for line in lines) for i in range(len(headers))]
    rendered = [
        "  ".join(field.ljust(widths[i]) for i, field in enumerate(line)).rstrip() for line in lines
    ]
    if breakdown.chi_square is not None:
        chi = breakdown.chi_square
        note = " (low expected counts)" if chi.low_expected else ""
        rendered.append("")
        rendered.append(
            f"Chi-square: statistic={chi.statistic:.1f}, df={chi.df}, p={chi.p_value:.3g}{note}"
        )
    return ("\n".join(rendered) + "\n").encode("utf-8")
