"""Scoring of extracted profiles and contingency statistics.

Extraction quality is precision/recall/F1 over predicted (term, attitude)
pairs against ground truth, micro-averaged across a collection by default.
Distribution comparisons use a chi-square test with Cramér's V effect
sizes; the p-value comes from an in-house regularized incomplete gamma
implementation so the package needs no statistics dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .model import Attitude, LicenseProfile, Provenance, is_sentinel


class Scope(str, Enum):
    DECLARED_ONLY = "declared"
    ALL_TERMS = "all"


class TaxonomyMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class EvalMetrics:
    true_positives: int
    predicted_count: int
    truth_count: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, predicted: int, truth: int) -> "EvalMetrics":
        # Vacuous perfection convention: an empty prediction set has
        # precision 1 (it asserted nothing false); likewise for recall over
        # an empty truth set.
        precision = tp / predicted if predicted else 1.0
        recall = tp / truth if truth else 1.0
        f1 = 2 * precision * recall / (precision + recall) if (precision + recall) > 0 else 0.0
        return cls(tp, predicted, truth, precision, recall, f1)

    def to_document(self) -> dict:
        return {
            "true_positives": self.true_positives,
            "predicted_count": self.predicted_count,
            "truth_count": self.truth_count,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def _pairs_in_scope(profile: LicenseProfile, scope: Scope) -> set[tuple[str, Attitude]]:
    if scope is Scope.DECLARED_ONLY:
        return {(t, a.attitude) for t, a in profile.assignments.items() if a.provenance is Provenance.DECLARED}
    return profile.pairs()


def score_extraction(predicted: LicenseProfile, truth: LicenseProfile, scope: Scope) -> EvalMetrics:
    """Score one prediction: a predicted (term, attitude) pair is a true
    positive iff the truth holds the identical pair within scope."""
    unknown = set(predicted.assignments) - set(truth.assignments)
    if unknown:
        raise TaxonomyMismatchError(
            f"predicted profile {predicted.license_id!r} uses terms outside the truth taxonomy: {sorted(unknown)}"
        )
    predicted_pairs = _pairs_in_scope(predicted, scope)
    truth_pairs = _pairs_in_scope(truth, scope)
    tp = len(predicted_pairs & truth_pairs)
    return EvalMetrics.from_counts(tp, len(predicted_pairs), len(truth_pairs))


class Averaging(str, Enum):
    MICRO = "micro"
    MACRO = "macro"


def score_collection(
    pairs: Sequence[tuple[LicenseProfile, LicenseProfile]],
    scope: Scope,
    averaging: Averaging = Averaging.MICRO,
) -> EvalMetrics:
    """Score a collection of (predicted, truth) pairs.

    Micro-averaging sums TP/predicted/truth counts before computing P/R/F1;
    macro averages the per-pair metrics. Counts in the macro result are the
    summed raw counts either way.
    """
    if not pairs:
        raise ValueError("cannot score an empty collection")
    per_pair = [score_extraction(p, t, scope) for p, t in pairs]
    tp = sum(m.true_positives for m in per_pair)
    predicted = sum(m.predicted_count for m in per_pair)
    truth = sum(m.truth_count for m in per_pair)
    if averaging is Averaging.MICRO:
        return EvalMetrics.from_counts(tp, predicted, truth)
    n = len(per_pair)
    precision = sum(m.precision for m in per_pair) / n
    recall = sum(m.recall for m in per_pair) / n
    f1 = sum(m.f1 for m in per_pair) / n
    return EvalMetrics(tp, predicted, truth, precision, recall, f1)


# ---------------------------------------------------------------------------
# Chi-square / Cramér's V
# ---------------------------------------------------------------------------


class EffectLabel(str, Enum):
    NEGLIGIBLE = "negligible"
    WEAK = "weak"
    MODERATE = "moderate"
    STRONG = "strong"


def effect_label(v: float) -> EffectLabel:
    """Effect-size band for Cramér's V.

    Boundary convention: negligible is strictly below 0.10 and strong
    strictly above 0.40; the interior boundaries 0.10 and 0.20 belong to
    the stronger band, so the bands are [0, 0.10), [0.10, 0.20),
    [0.20, 0.40], (0.40, 1].
    """
    if v < 0.10:
        return EffectLabel.NEGLIGIBLE
    if v < 0.20:
        return EffectLabel.WEAK
    if v <= 0.40:
        return EffectLabel.MODERATE
    return EffectLabel.STRONG


@dataclass(frozen=True)
class ContingencyStats:
    chi_square: float
    p_value: float
    cramers_v: float
    effect_label: EffectLabel
    degrees_of_freedom: int

    def to_document(self) -> dict:
        return {
            "chi_square": self.chi_square,
            "p_value": self.p_value,
            "cramers_v": self.cramers_v,
            "effect_label": self.effect_label.value,
            "degrees_of_freedom": self.degrees_of_freedom,
        }


class DegenerateTableError(ValueError):
    """A zero row or column marginal makes expected counts undefined."""


_GAMMA_EPS = 1e-15
_GAMMA_MAX_ITER = 1000


def _gamma_p_series(a: float, x: float) -> float:
    # Lower regularized gamma by power series; converges fast for x < a + 1.
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(_GAMMA_MAX_ITER):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_continued_fraction(a: float, x: float) -> float:
    # Upper regularized gamma by Lentz's continued fraction; converges fast
    # for x >= a + 1.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x).

    Series/continued-fraction switchover at x = a + 1 (series for the lower
    function below it, Lentz continued fraction above); accurate to well
    under 1e-10 over the chi-square range used here.
    """
    if a <= 0:
        raise ValueError("shape parameter must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_continued_fraction(a, x)


def chi_square_p_value(chi_square: float, degrees_of_freedom: int) -> float:
    if chi_square == 0:
        return 1.0
    return regularized_gamma_q(degrees_of_freedom / 2.0, chi_square / 2.0)


def chi_square_test(table: Sequence[Sequence[float]]) -> ContingencyStats:
    """Pearson chi-square over an r x c contingency table, with Cramér's
    V = sqrt(chi2 / (n * (min(r, c) - 1))) and its effect band."""
    rows = len(table)
    if rows < 2:
        raise ValueError("contingency table needs at least 2 rows")
    cols = len(table[0])
    if cols < 2:
        raise ValueError("contingency table needs at least 2 columns")
    if any(len(row) != cols for row in table):
        raise ValueError("contingency table rows have unequal lengths")
    if any(cell < 0 for row in table for cell in row):
        raise ValueError("contingency counts must be non-negative")
    row_totals = [sum(row) for row in table]
    col_totals = [sum(row[j] for row in table) for j in range(cols)]
    total = sum(row_totals)
    if total <= 0:
        raise DegenerateTableError("contingency table is empty")
    if any(t == 0 for t in row_totals) or any(t == 0 for t in col_totals):
        raise DegenerateTableError("zero row or column marginal")
    chi2 = 0.0
    for i in range(rows):
        for j in range(cols):
            expected = row_totals[i] * col_totals[j] / total
            chi2 += (table[i][j] - expected) ** 2 / expected
    dof = (rows - 1) * (cols - 1)
    v = math.sqrt(chi2 / (total * (min(rows, cols) - 1)))
    return ContingencyStats(
        chi_square=chi2,
        p_value=chi_square_p_value(chi2, dof),
        cramers_v=v,
        effect_label=effect_label(v),
        degrees_of_freedom=dof,
    )


def load_contingency(path: str | Path) -> list[list[float]]:
    """Read a rectangular integer grid: one row per line, whitespace-split."""
    table = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        table.append([float(cell) for cell in line.split()])
    return table


# ---------------------------------------------------------------------------
# License frequency distributions
# ---------------------------------------------------------------------------

NO_LICENSE_LABEL = "No License"
OTHERS_LABEL = "Others"

DEFAULT_RECOGNIZED_LICENSES = frozenset(
    {
        "MIT", "Apache-2.0", "GPL-2.0", "GPL-3.0", "AGPL-3.0", "LGPL-2.1",
        "LGPL-3.0", "BSD-2-Clause", "BSD-3-Clause", "MPL-2.0", "ISC",
        "Unlicense", "EPL-2.0", "CC0-1.0", "CC-BY-4.0", "CC-BY-SA-4.0",
        "CC-BY-NC-4.0",
    }
)


@dataclass(frozen=True)
class DistributionRow:
    label: str
    count: int
    share: float


def distribution_label(license_id: str, recognized: frozenset[str]) -> str:
    if is_sentinel(license_id):
        return NO_LICENSE_LABEL
    if license_id not in recognized:
        return OTHERS_LABEL
    return license_id


def license_distribution(
    nodes: Iterable,
    group_by: str | None = None,
    recognized: frozenset[str] = DEFAULT_RECOGNIZED_LICENSES,
) -> dict[str, list[DistributionRow]]:
    """Frequency and share of each license label, optionally grouped by a
    node metadata key. Sentinels report as "No License", unrecognized ids
    fold into "Others"; rows are ordered by count descending then label."""
    groups: dict[str, dict[str, int]] = {}
    for node in nodes:
        if group_by is None:
            group = "all"
        else:
            group = str(getattr(node, "metadata", {}).get(group_by, "unspecified"))
        label = distribution_label(node.license_id, recognized)
        groups.setdefault(group, {})
        groups[group][label] = groups[group].get(label, 0) + 1
    result: dict[str, list[DistributionRow]] = {}
    for group in sorted(groups):
        counts = groups[group]
        total = sum(counts.values())
        ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        result[group] = [DistributionRow(label, count, count / total) for label, count in ordered]
    return result


def distribution_to_counts(
    distribution: Mapping[str, Sequence[DistributionRow]], labels: Sequence[str]
) -> list[list[int]]:
    """Project grouped distributions onto a fixed label order, yielding a
    contingency table (one row per group)."""
    table = []
    for group in sorted(distribution):
        by_label = {row.label: row.count for row in distribution[group]}
        table.append([by_label.get(label, 0) for label in labels])
    return table
