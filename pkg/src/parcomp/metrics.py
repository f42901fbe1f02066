"""Intrinsic metrics over scored sequences.

Seven metrics, all derived from per-token natural-log probabilities, ranks,
and character counts:

    NLL         -(1/S) * sum(logprobs), natural log
    PPL         exp(NLL)
    BPC         (-sum(logprobs) / ln 2) / char_count
    TOTAL_BITS  sum over sentences of (-sum(logprobs) / ln 2)
    BPEC        target BPC / english BPC
    IP          english BPC / target BPC
    MRR         (1/S) * sum(1 / rank)

BPC divides token bits by the NFC character count, which is the only way to
get a character-level number out of a token-level scorer; the convention is
stated here once and used everywhere.

Corpus aggregation is macro by default: the unweighted mean of per-sentence
values in ascending sample_id order, with PPL aggregated as exp(mean NLL).
Token-weighted (micro) aggregation sits behind a flag and reports label
which convention produced them. BPEC/IP are ratios of aggregated BPCs, not
averages of per-sentence ratios.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from parcomp.errors import MetricError
from parcomp.records import ScoredSequence, ScoreSet

LN2 = math.log(2.0)


class Metric(str, Enum):
    NLL = "NLL"
    PPL = "PPL"
    BPC = "BPC"
    TOTAL_BITS = "TOTAL_BITS"
    BPEC = "BPEC"
    IP = "IP"
    MRR = "MRR"


class Direction(str, Enum):
    LOWER = "lower-is-better"
    HIGHER = "higher-is-better"
    RATIO = "ratio"


DIRECTIONS = {
    Metric.NLL: Direction.LOWER,
    Metric.PPL: Direction.LOWER,
    Metric.BPC: Direction.LOWER,
    Metric.TOTAL_BITS: Direction.LOWER,
    Metric.BPEC: Direction.RATIO,
    Metric.IP: Direction.RATIO,
    Metric.MRR: Direction.HIGHER,
}


@dataclass(frozen=True)
class MetricValue:
    metric: Metric
    value: float

    def __post_init__(self):
        v = self.value
        ok = {
            # BPC/TOTAL_BITS/NLL hit 0 exactly on all-certain sequences
            Metric.NLL: v >= 0,
            Metric.PPL: v >= 1,
            Metric.BPC: v >= 0,
            Metric.TOTAL_BITS: v >= 0,
            Metric.BPEC: v > 0,
            Metric.IP: v > 0,
            Metric.MRR: 0 < v <= 1,
        }[self.metric]
        if not ok or math.isnan(v):
            raise MetricError(f"{self.metric.value} = {v} violates its range")

    @property
    def direction(self) -> Direction:
        return DIRECTIONS[self.metric]


def _total_logprob(s: ScoredSequence) -> float:
    total = 0.0
    for lp in s.logprobs:  # fixed token order: left-to-right sum
        total += lp
    return total


def sequence_nll(s: ScoredSequence) -> MetricValue:
    return MetricValue(Metric.NLL, -_total_logprob(s) / s.n_tokens)


def sequence_ppl(s: ScoredSequence) -> MetricValue:
    return MetricValue(Metric.PPL, math.exp(sequence_nll(s).value))


def sequence_bpc(s: ScoredSequence) -> MetricValue:
    return MetricValue(Metric.BPC, (-_total_logprob(s) / LN2) / s.char_count)


def sequence_mrr(s: ScoredSequence) -> MetricValue:
    if s.ranks is None:
        raise MetricError(f"sample {s.sample_id}: MRR unavailable, record has no ranks")
    total = 0.0
    for r in s.ranks:
        total += 1.0 / r
    return MetricValue(Metric.MRR, total / s.n_tokens)


def total_bits(score_set: ScoreSet) -> MetricValue:
    """Corpus encoding cost in bits; additive over disjoint sets."""
    if not score_set.sequences:
        raise MetricError("total_bits of an empty score set")
    bits = 0.0
    for s in score_set.sequences:
        bits += -_total_logprob(s) / LN2
    return MetricValue(Metric.TOTAL_BITS, bits)


def relative_bpc(target_bpc: float, english_bpc: float) -> tuple[MetricValue, MetricValue]:
    """(BPEC, IP) from two aggregated BPC values."""
    if not (target_bpc > 0 and english_bpc > 0):
        raise MetricError(
            f"relative_bpc needs positive inputs, got {target_bpc} and {english_bpc}"
        )
    return (
        MetricValue(Metric.BPEC, target_bpc / english_bpc),
        MetricValue(Metric.IP, english_bpc / target_bpc),
    )


_SEQUENCE_FN = {
    Metric.NLL: sequence_nll,
    Metric.PPL: sequence_ppl,
    Metric.BPC: sequence_bpc,
    Metric.MRR: sequence_mrr,
}


def aggregate(score_set: ScoreSet, metric: Metric, micro: bool = False) -> MetricValue:
    """Corpus-level value. Macro: mean per-sentence value, PPL = exp(mean NLL).

    Micro weights by tokens (characters for BPC): summed numerators over
    summed denominators.
    """
    if not score_set.sequences:
        raise MetricError(f"aggregate {metric.value} of an empty score set")
    if metric not in _SEQUENCE_FN:
        raise MetricError(
            f"{metric.value} is not sentence-aggregable; use total_bits or relative_bpc"
        )
    if metric == Metric.MRR and not score_set.mrr_available:
        raise MetricError(
            f"MRR unavailable: not all records carry ranks "
            f"(set {score_set.lang}, provenance {score_set.provenance!r})"
        )
    seqs = score_set.sequences  # already in ascending sample_id order

    if micro:
        if metric in (Metric.NLL, Metric.PPL):
            total_lp = 0.0
            total_tok = 0
            for s in seqs:
                total_lp += _total_logprob(s)
                total_tok += s.n_tokens
            nll = -total_lp / total_tok
            return MetricValue(metric, math.exp(nll) if metric == Metric.PPL else nll)
        if metric == Metric.BPC:
            bits = 0.0
            chars = 0
            for s in seqs:
                bits += -_total_logprob(s) / LN2
                chars += s.char_count
            return MetricValue(Metric.BPC, bits / chars)
        inv = 0.0
        total_tok = 0
        for s in seqs:
            for r in s.ranks:
                inv += 1.0 / r
            total_tok += s.n_tokens
        return MetricValue(Metric.MRR, inv / total_tok)

    if metric == Metric.PPL:
        mean_nll = sum(sequence_nll(s).value for s in seqs) / len(seqs)
        return MetricValue(Metric.PPL, math.exp(mean_nll))
    fn = _SEQUENCE_FN[metric]
    return MetricValue(metric, sum(fn(s).value for s in seqs) / len(seqs))


@dataclass(frozen=True)
class MetricRow:
    """One report cell; value None means MRR was unavailable for the set."""

    checkpoint: int
    lang: str
    metric: Metric
    value: float | None
    n_sentences: int

    def __post_init__(self):
        if self.value is None and self.metric != Metric.MRR:
            raise MetricError(f"{self.metric.value} cannot be unavailable")


@dataclass(frozen=True)
class MetricReport:
    rows: tuple[MetricRow, ...]
    convention: str = "macro"  # or "micro"

    def __post_init__(self):
        keys = [(r.checkpoint, r.lang, r.metric) for r in self.rows]
        if len(set(keys)) != len(keys):
            dupe = next(k for k in keys if keys.count(k) > 1)
            raise MetricError(f"duplicate report row {dupe}")

    def sorted_rows(self) -> list[MetricRow]:
        return sorted(self.rows, key=lambda r: (r.checkpoint, r.lang, r.metric.value))


def build_report(
    sets: dict[tuple[int, str], ScoreSet],
    micro: bool = False,
    baseline_lang: str = "eng",
) -> MetricReport:
    """Full metric table for {(checkpoint, lang): ScoreSet}.

    Emits NLL, PPL, BPC, TOTAL_BITS, and MRR (None when ranks are missing)
    per set, plus BPEC/IP against baseline_lang's BPC at the same
    checkpoint whenever that baseline set exists.
    """
    rows: list[MetricRow] = []
    bpc_at: dict[tuple[int, str], float] = {}
    for (checkpoint, lang), score_set in sets.items():
        if not score_set.sequences:
            raise MetricError(f"empty score set for checkpoint {checkpoint}, lang {lang}")
        n = len(score_set)
        for metric in (Metric.NLL, Metric.PPL, Metric.BPC):
            rows.append(
                MetricRow(checkpoint, lang, metric, aggregate(score_set, metric, micro).value, n)
            )
        bpc_at[(checkpoint, lang)] = rows[-1].value
        rows.append(MetricRow(checkpoint, lang, Metric.TOTAL_BITS, total_bits(score_set).value, n))
        mrr = (
            aggregate(score_set, Metric.MRR, micro).value if score_set.mrr_available else None
        )
        rows.append(MetricRow(checkpoint, lang, Metric.MRR, mrr, n))
    for (checkpoint, lang), bpc in bpc_at.items():
        base = bpc_at.get((checkpoint, baseline_lang))
        if base is None:
            continue
        bpec, ip = relative_bpc(bpc, base)
        n = len(sets[(checkpoint, lang)])
        rows.append(MetricRow(checkpoint, lang, Metric.BPEC, bpec.value, n))
        rows.append(MetricRow(checkpoint, lang, Metric.IP, ip.value, n))
    return MetricReport(rows=tuple(rows), convention="micro" if micro else "macro")


def write_report_csv(report: MetricReport, path: str | Path) -> None:
    """checkpoint,lang,metric,value,n_sentences; '.' decimal; sorted rows."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["checkpoint", "lang", "metric", "value", "n_sentences"])
        for r in report.sorted_rows():
            value = "unavailable" if r.value is None else repr(r.value)
            w.writerow([r.checkpoint, r.lang, r.metric.value, value, r.n_sentences])


def write_report_json(report: MetricReport, path: str | Path) -> None:
    doc = {
        "convention": report.convention,
        "rows": [
            {
                "checkpoint": r.checkpoint,
                "lang": r.lang,
                "metric": r.metric.value,
                "value": r.value,
                "n_sentences": r.n_sentences,
                **({"note": "unavailable (ranks missing)"} if r.value is None else {}),
            }
            for r in report.sorted_rows()
        ],
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
