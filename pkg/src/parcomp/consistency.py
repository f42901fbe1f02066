"""Paraphrase-consistency analysis.

A metric is consistent on a sample when the source sentence's value falls
strictly outside the range spanned by its k paraphrases' values; landing
inside the range (or exactly on an edge) means the metric cannot tell the
source from a rewording, which is the failure being measured. The same
range test applied to per-split mean values gives the split-level verdict.

Sorting each row of the N x k paraphrase matrix ascending turns arbitrary
splits into order-statistic splits ("easiest" to "hardest" sample per row
for lower-is-better metrics), the adversarial regrouping used to probe how
fragile split-level conclusions are.

Verdicts depend only on the ordering of values, never on metric direction:
range containment is symmetric. Exact ties with a range edge count as
inconsistent; real-valued scores make ties measure-zero, but the rule is
pinned down so implementations agree.

PPL is excluded from consistency runs by default: it is a strictly
increasing transform of NLL, so its sample verdicts are provably identical.
(Split-level PPL can differ, since exp does not commute with means; an
explicit flag computes it as its own metric.)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from parcomp.errors import ConsistencyError
from parcomp.metrics import (
    DIRECTIONS,
    Direction,
    Metric,
    sequence_bpc,
    sequence_mrr,
    sequence_nll,
    sequence_ppl,
)
from parcomp.records import ScoreSet

CONSISTENCY_METRICS = (Metric.NLL, Metric.BPC, Metric.MRR)

PPL_NOTE = (
    "PPL is a strictly increasing transform of NLL: sample verdicts are "
    "identical by the order-only property, so PPL rows are not duplicated."
)
PPL_SPLIT_CAVEAT = (
    "split-level PPL verdicts can differ from NLL because exp does not "
    "commute with means; computed here because explicitly requested."
)


class Verdict(str, Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"


def _require_finite(values, what):
    for v in values:
        if not math.isfinite(v):
            raise ConsistencyError(f"{what} contains non-finite value {v}")


def _range_verdict(source: float, values: Sequence[float]) -> Verdict:
    # strictly outside [min, max] is consistent; edges count as inside
    if source < min(values) or source > max(values):
        return Verdict.CONSISTENT
    return Verdict.INCONSISTENT


@dataclass(frozen=True)
class SampleVerdict:
    sample_id: int
    source_value: float
    paraphrase_values: tuple[float, ...]
    verdict: Verdict

    def __post_init__(self):
        if len(self.paraphrase_values) < 2:
            raise ConsistencyError(
                f"sample {self.sample_id}: needs >= 2 paraphrase values, "
                f"got {len(self.paraphrase_values)}"
            )
        _require_finite((self.source_value,), f"sample {self.sample_id} source")
        _require_finite(self.paraphrase_values, f"sample {self.sample_id} paraphrases")
        if self.verdict != _range_verdict(self.source_value, self.paraphrase_values):
            raise ConsistencyError(
                f"sample {self.sample_id}: verdict contradicts the range rule"
            )


def sample_verdict(
    source_value: float, paraphrase_values: Sequence[float], sample_id: int = 0
) -> SampleVerdict:
    """Range test for one sample; equality with an edge is inconsistent."""
    values = tuple(paraphrase_values)
    if len(values) < 2:
        raise ConsistencyError(f"needs >= 2 paraphrase values, got {len(values)}")
    _require_finite((source_value,), "source")
    _require_finite(values, "paraphrases")
    return SampleVerdict(
        sample_id=sample_id,
        source_value=source_value,
        paraphrase_values=values,
        verdict=_range_verdict(source_value, values),
    )


def inconsistency_rate(verdicts: Sequence[SampleVerdict]) -> float:
    if not verdicts:
        raise ConsistencyError("inconsistency rate of zero verdicts")
    bad = sum(1 for v in verdicts if v.verdict == Verdict.INCONSISTENT)
    return bad / len(verdicts)


def sorted_splits(values: Sequence[Sequence[float]]) -> list[list[float]]:
    """Sort each row ascending: column j becomes the j-th order statistic."""
    if not values:
        raise ConsistencyError("sorted_splits of an empty matrix")
    k = len(values[0])
    out = []
    for i, row in enumerate(values):
        if len(row) != k:
            raise ConsistencyError(f"ragged matrix: row {i} has {len(row)} values, row 0 has {k}")
        _require_finite(row, f"row {i}")
        out.append(sorted(row))
    return out


def _mean(values: Sequence[float]) -> float:
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


@dataclass(frozen=True)
class SplitAnalysis:
    """Range test on per-split means."""

    split_names: tuple[str, ...]
    split_means: tuple[float, ...]
    source_mean: float
    verdict: Verdict

    @property
    def split_range(self) -> tuple[float, float]:
        return (min(self.split_means), max(self.split_means))

    def to_dict(self) -> dict:
        return {
            "names": list(self.split_names),
            "means": list(self.split_means),
            "range": list(self.split_range),
            "source_mean": self.source_mean,
            "verdict": self.verdict.value,
        }


def split_level_verdict(
    source_values: Sequence[float],
    split_matrix: Sequence[Sequence[float]],
    metric: Metric,
    split_names: Sequence[str] | None = None,
) -> SplitAnalysis:
    """Column means vs source mean, same strict-outside rule."""
    if not source_values:
        raise ConsistencyError("split_level_verdict with no source values")
    if not split_matrix:
        raise ConsistencyError("split_level_verdict with no split rows")
    k = len(split_matrix[0])
    if k < 2:
        raise ConsistencyError(f"needs >= 2 splits, got {k}")
    if len(split_matrix) != len(source_values):
        raise ConsistencyError(
            f"{len(split_matrix)} split rows vs {len(source_values)} source values"
        )
    for i, row in enumerate(split_matrix):
        if len(row) != k:
            raise ConsistencyError(f"ragged matrix: row {i} has {len(row)} values, row 0 has {k}")
        _require_finite(row, f"row {i}")
    _require_finite(source_values, "source")
    if split_names is None:
        split_names = [f"split{j + 1}" for j in range(k)]
    if len(split_names) != k:
        raise ConsistencyError(f"{len(split_names)} names for {k} splits")
    # metric is not consulted: range containment is direction-agnostic
    means = tuple(_mean([row[j] for row in split_matrix]) for j in range(k))
    source_mean = _mean(source_values)
    return SplitAnalysis(
        split_names=tuple(split_names),
        split_means=means,
        source_mean=source_mean,
        verdict=_range_verdict(source_mean, means),
    )


def sorted_split_names(k: int, metric: Metric) -> list[str]:
    """Order-statistic labels; which end is 'easiest' depends on direction."""
    names = [f"rank{j + 1}" for j in range(k)]
    if DIRECTIONS[metric] == Direction.HIGHER:
        names[0] += "(hardest)"
        names[-1] += "(easiest)"
    else:
        names[0] += "(easiest)"
        names[-1] += "(hardest)"
    return names


_SEQUENCE_FN = {
    Metric.NLL: sequence_nll,
    Metric.PPL: sequence_ppl,
    Metric.BPC: sequence_bpc,
    Metric.MRR: sequence_mrr,
}


@dataclass(frozen=True)
class ConsistencyReport:
    metric: Metric
    n: int
    verdicts: tuple[SampleVerdict, ...]
    rate: float
    splits_original: SplitAnalysis
    splits_sorted: SplitAnalysis
    note: str = ""

    def __post_init__(self):
        if self.n != len(self.verdicts):
            raise ConsistencyError(f"n = {self.n} but {len(self.verdicts)} verdicts")
        expect = inconsistency_rate(self.verdicts)
        if self.rate != expect:
            raise ConsistencyError(f"rate {self.rate} != recomputed {expect}")

    def to_dict(self) -> dict:
        doc = {
            "metric": self.metric.value.lower(),
            "n": self.n,
            "inconsistency_rate": self.rate,
            "samples": [
                {
                    "id": v.sample_id,
                    "source": v.source_value,
                    "paraphrases": list(v.paraphrase_values),
                    "verdict": v.verdict.value,
                }
                for v in self.verdicts
            ],
            "splits_original": self.splits_original.to_dict(),
            "splits_sorted": self.splits_sorted.to_dict(),
        }
        if self.note:
            doc["note"] = self.note
        return doc


def run_consistency(
    source_scores: ScoreSet,
    paraphrase_scores: Sequence[ScoreSet],
    metric: Metric,
    split_names: Sequence[str] | None = None,
    allow_ppl: bool = False,
) -> ConsistencyReport:
    """Full sample-level and split-level analysis for one metric.

    All sets must cover the same sample_ids 0..N-1. The source set may be a
    different language than the paraphrase sets (cross-language setup).
    """
    if metric not in CONSISTENCY_METRICS:
        if metric == Metric.PPL and allow_ppl:
            pass
        else:
            allowed = ", ".join(m.value for m in CONSISTENCY_METRICS)
            raise ConsistencyError(
                f"metric {metric.value} not usable for consistency (choose {allowed})"
            )
    k = len(paraphrase_scores)
    if k < 2:
        raise ConsistencyError(f"needs >= 2 paraphrase score sets, got {k}")
    n = len(source_scores)
    if n == 0:
        raise ConsistencyError("source score set is empty")
    if split_names is None:
        split_names = [f"split{j + 1}" for j in range(k)]
    for name, ps in zip(split_names, paraphrase_scores):
        if len(ps) != n:
            raise ConsistencyError(
                f"misaligned sets: {name} has {len(ps)} samples, source has {n}; "
                f"first missing sample_id {min(len(ps), n)}"
            )
    if metric == Metric.MRR:
        if not source_scores.mrr_available:
            raise ConsistencyError("MRR requested but source records lack ranks")
        for name, ps in zip(split_names, paraphrase_scores):
            if not ps.mrr_available:
                raise ConsistencyError(f"MRR requested but split {name} records lack ranks")

    fn = _SEQUENCE_FN[metric]
    source_values = [fn(s).value for s in source_scores.sequences]
    matrix = [
        [fn(ps.sequences[i]).value for ps in paraphrase_scores] for i in range(n)
    ]

    verdicts = tuple(
        sample_verdict(source_values[i], matrix[i], sample_id=i) for i in range(n)
    )
    note = PPL_NOTE if metric == Metric.NLL else ""
    if metric == Metric.PPL:
        note = PPL_SPLIT_CAVEAT
    return ConsistencyReport(
        metric=metric,
        n=n,
        verdicts=verdicts,
        rate=inconsistency_rate(verdicts),
        splits_original=split_level_verdict(source_values, matrix, metric, split_names),
        splits_sorted=split_level_verdict(
            source_values, sorted_splits(matrix), metric, sorted_split_names(k, metric)
        ),
        note=note,
    )


def figure_data(report: ConsistencyReport) -> dict:
    """Per-sample series sorted by source value: the scatter-plot input."""
    order = sorted(range(report.n), key=lambda i: (report.verdicts[i].source_value, i))
    return {
        "metric": report.metric.value.lower(),
        "series": [
            {
                "id": report.verdicts[i].sample_id,
                "source": report.verdicts[i].source_value,
                "paraphrases": list(report.verdicts[i].paraphrase_values),
                "verdict": report.verdicts[i].verdict.value,
            }
            for i in order
        ],
    }


def write_consistency_json(report: ConsistencyReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def write_figure_json(report: ConsistencyReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(figure_data(report), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
