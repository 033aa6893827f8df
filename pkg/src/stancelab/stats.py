"""Confusion-matrix metrics and 2x2 contingency analysis.

Conventions: confusion rows are gold, columns are predictions, label order
(helpful, harmful, neither). The contingency table has rows (AU, UK) and
columns (helpful, harmful); neither-labeled sentences take no part in it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .classifier import Label
from .errors import StancelabError

LABEL_ORDER = (Label.HELPFUL, Label.HARMFUL, Label.NEITHER)


class LengthMismatch(StancelabError):
    pass


class EmptyInput(StancelabError):
    pass


class DegenerateMargin(StancelabError):
    pass


class UnsupportedDf(StancelabError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: tuple[tuple[int, int, int], ...]  # rows gold, cols predicted

    def __post_init__(self):
        if len(self.counts) != 3 or any(len(row) != 3 for row in self.counts):
            raise ValueError("confusion matrix must be 3x3")
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return sum(c for row in self.counts for c in row)

    @property
    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(3))


def confusion(gold, predicted) -> ConfusionMatrix:
    """Count (gold, predicted) label pairs into a 3x3 matrix."""
    gold = list(gold)
    predicted = list(predicted)
    if len(gold) != len(predicted):
        raise LengthMismatch(f"{len(gold)} gold labels vs {len(predicted)} predictions")
    if not gold:
        raise EmptyInput("no labeled pairs")
    index = {label: i for i, label in enumerate(LABEL_ORDER)}
    counts = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
    for g, p in zip(gold, predicted):
        counts[index[g]][index[p]] += 1
    return ConfusionMatrix(tuple(tuple(row) for row in counts))


@dataclass(frozen=True)
class ClassScore:
    precision: float | None
    recall: float | None
    f1: float | None


@dataclass(frozen=True)
class ClassMetrics:
    per_class: Mapping[Label, ClassScore]
    micro_precision: float
    micro_recall: float
    micro_f1: float
    accuracy: float
    macro_precision: float | None
    macro_recall: float | None
    macro_f1: float | None


def _mean_defined(values) -> float | None:
    defined = [v for v in values if v is not None]
    return sum(defined) / len(defined) if defined else None


def metrics(cm: ConfusionMatrix) -> ClassMetrics:
    """Per-class precision/recall/F1 plus micro and macro summaries.

    Zero denominators yield None rather than a fake zero. In single-label
    multiclass, pooled false positives equal pooled false negatives, so the
    micro scores and accuracy are all the same number by construction.
    """
    per_class: dict[Label, ClassScore] = {}
    for i, label in enumerate(LABEL_ORDER):
        tp = cm.counts[i][i]
        col = sum(cm.counts[r][i] for r in range(3))
        row = sum(cm.counts[i][c] for c in range(3))
        precision = tp / col if col else None
        recall = tp / row if row else None
        if precision is None or recall is None or precision + recall == 0:
            f1 = None
        else:
            f1 = 2 * precision * recall / (precision + recall)
        per_class[label] = ClassScore(precision, recall, f1)

    micro = cm.trace / cm.total
    return ClassMetrics(
        per_class=per_class,
        micro_precision=micro,
        micro_recall=micro,
        micro_f1=micro,
        accuracy=micro,
        macro_precision=_mean_defined(s.precision for s in per_class.values()),
        macro_recall=_mean_defined(s.recall for s in per_class.values()),
        macro_f1=_mean_defined(s.f1 for s in per_class.values()),
    )


@dataclass(frozen=True)
class ContingencyTable2x2:
    observed: tuple[tuple[int, int], tuple[int, int]]  # rows (AU, UK), cols (helpful, harmful)

    def __post_init__(self):
        if len(self.observed) != 2 or any(len(row) != 2 for row in self.observed):
            raise ValueError("contingency table must be 2x2")
        if any(c < 0 for row in self.observed for c in row):
            raise ValueError("observed counts must be non-negative")
        if self.total < 1:
            raise ValueError("contingency table is empty")

    @property
    def row_sums(self) -> tuple[int, int]:
        return (sum(self.observed[0]), sum(self.observed[1]))

    @property
    def col_sums(self) -> tuple[int, int]:
        return (
            self.observed[0][0] + self.observed[1][0],
            self.observed[0][1] + self.observed[1][1],
        )

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.observed)


def expected_counts(table: ContingencyTable2x2) -> tuple[tuple[float, float], tuple[float, float]]:
    """Independence-model expected counts: row_sum * col_sum / total."""
    rows = table.row_sums
    cols = table.col_sums
    if 0 in rows or 0 in cols:
        raise DegenerateMargin(f"zero margin in table {table.observed}")
    total = table.total
    return tuple(tuple(r * c / total for c in cols) for r in rows)  # type: ignore[return-value]


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    p_value: float
    expected: tuple[tuple[float, float], tuple[float, float]]
    low_expected: bool  # any expected cell below 5


def pearson_chi_square(table: ContingencyTable2x2, yates: bool = False) -> ChiSquareResult:
    """Pearson chi-square test of independence on a 2x2 table, df = 1."""
    expected = expected_counts(table)
    cells = [expected[r][c] for r in range(2) for c in range(2)]
    if min(cells) < 1.0:
        raise DegenerateMargin(f"expected count below 1 in table {table.observed}")
    statistic = 0.0
    for r in range(2):
        for c in range(2):
            diff = abs(table.observed[r][c] - expected[r][c])
            if yates:
                diff = max(diff - 0.5, 0.0)
            statistic += diff * diff / expected[r][c]
    return ChiSquareResult(
        statistic=statistic,
        df=1,
        p_value=chi2_sf(statistic, 1),
        expected=expected,
        low_expected=min(cells) < 5.0,
    )


def chi2_sf(x: float, df: int) -> float:
    """Chi-square survival function; for df=1 this is erfc(sqrt(x/2))."""
    if df != 1:
        raise UnsupportedDf(f"only df=1 is supported, got {df}")
    if x < 0:
        raise ValueError("statistic must be non-negative")
    return math.erfc(math.sqrt(x / 2.0))


def round_half_up(x: float) -> int:
    """Round a non-negative value to the nearest integer, ties upward."""
    if x < 0:
        raise ValueError("round_half_up is defined for non-negative values")
    # floor(x + 0.5) misrounds values just below a half; the fractional part
    # of a double below 2**53 is exact, so compare it directly.
    whole = math.floor(x)
    return whole + 1 if x - whole >= 0.5 else whole
