"""Range verdicts, sorted splits, order-invariance, report assembly."""

import json
import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from parcomp.consistency import (
    ConsistencyReport,
    SampleVerdict,
    Verdict,
    figure_data,
    inconsistency_rate,
    run_consistency,
    sample_verdict,
    sorted_split_names,
    sorted_splits,
    split_level_verdict,
    write_consistency_json,
)
from parcomp.corpus import LanguageCode
from parcomp.errors import ConsistencyError
from parcomp.metrics import LN2, Metric
from parcomp.records import ScoredSequence, ScoreSet


def nll_set(values, lang="eng"):
    """One-token sequences whose NLL equals the given values exactly."""
    seqs = tuple(
        ScoredSequence(LanguageCode(lang), i, ("w",), (-v,), (1,), 1)
        for i, v in enumerate(values)
    )
    return ScoreSet(LanguageCode(lang), seqs)


class TestSampleVerdict:
    def test_source_below_range_is_consistent(self):
        v = sample_verdict(2.19, [4.45, 4.63, 6.30, 6.36])
        assert v.verdict == Verdict.CONSISTENT

    def test_source_inside_range_is_inconsistent(self):
        v = sample_verdict(3.10, [2.84, 3.55, 5.11, 5.66])
        assert v.verdict == Verdict.INCONSISTENT

    def test_edge_equality_is_inconsistent(self):
        assert sample_verdict(1.0, [1.0, 2.0]).verdict == Verdict.INCONSISTENT
        assert sample_verdict(2.0, [1.0, 2.0]).verdict == Verdict.INCONSISTENT

    def test_source_above_range_is_consistent(self):
        assert sample_verdict(9.0, [1.0, 2.0]).verdict == Verdict.CONSISTENT

    def test_too_few_paraphrases_rejected(self):
        with pytest.raises(ConsistencyError):
            sample_verdict(1.0, [2.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ConsistencyError):
            sample_verdict(float("nan"), [1.0, 2.0])
        with pytest.raises(ConsistencyError):
            sample_verdict(1.0, [1.0, float("inf")])

    def test_contradictory_verdict_rejected(self):
        with pytest.raises(ConsistencyError):
            SampleVerdict(0, 5.0, (1.0, 2.0), Verdict.INCONSISTENT)


class TestInconsistencyRate:
    def test_counting(self):
        vs = [
            sample_verdict(1.5, [1.0, 2.0]),  # inside
            sample_verdict(0.5, [1.0, 2.0]),  # below
            sample_verdict(3.0, [1.0, 2.0]),  # above
            sample_verdict(2.0, [1.0, 2.0]),  # edge
        ]
        assert inconsistency_rate(vs) == 0.5

    def test_all_consistent_is_zero(self):
        vs = [sample_verdict(0.0, [1.0, 2.0]) for _ in range(3)]
        assert inconsistency_rate(vs) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ConsistencyError):
            inconsistency_rate([])

    @given(
        st.lists(st.booleans(), min_size=1, max_size=20),
        st.lists(st.booleans(), min_size=1, max_size=20),
    )
    def test_concatenation_is_weighted_mean(self, flags_a, flags_b):
        def make(flag):
            # flag True -> inconsistent (inside), False -> consistent
            return sample_verdict(1.5 if flag else 0.0, [1.0, 2.0])

        va = [make(f) for f in flags_a]
        vb = [make(f) for f in flags_b]
        whole = inconsistency_rate(va + vb)
        parts = (
            inconsistency_rate(va) * len(va) + inconsistency_rate(vb) * len(vb)
        ) / (len(va) + len(vb))
        assert whole == pytest.approx(parts, abs=1e-12)


class TestSortedSplits:
    def test_per_row_sort(self):
        assert sorted_splits([[3, 1, 2], [6, 4, 5]]) == [[1, 2, 3], [4, 5, 6]]

    def test_sorted_input_is_fixed_point(self):
        m = [[1.0, 2.0], [3.0, 4.0]]
        assert sorted_splits(m) == m
        assert sorted_splits(sorted_splits(m)) == sorted_splits(m)

    def test_ragged_rejected(self):
        with pytest.raises(ConsistencyError):
            sorted_splits([[1, 2], [3]])

    @given(
        st.lists(
            st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=3),
            min_size=1,
            max_size=15,
        )
    )
    def test_order_statistic_properties(self, matrix):
        out = sorted_splits(matrix)
        # row multisets preserved
        for before, after in zip(matrix, out):
            assert sorted(before) == after
        # column means nondecreasing
        k = len(out[0])
        means = [sum(row[j] for row in out) / len(out) for j in range(k)]
        assert all(a <= b + 1e-12 for a, b in zip(means, means[1:]))


class TestSplitLevelVerdict:
    def cols_with_means(self, means, n=4):
        # constant columns hit the target means exactly
        return [[m for m in means] for _ in range(n)]

    def test_source_outside_tight_band_is_consistent(self):
        # monolingual fixed-split shape: splits hover in [6.43, 6.64],
        # source sits at 6.91
        analysis = split_level_verdict(
            [6.91] * 4, self.cols_with_means([6.43, 6.55, 6.60, 6.64]), Metric.NLL
        )
        assert analysis.verdict == Verdict.CONSISTENT
        assert analysis.split_range == (6.43, 6.64)

    def test_source_inside_wide_band_is_inconsistent(self):
        # sorted-split shape: the band stretches to [5.89, 7.23] and
        # swallows the same source mean
        analysis = split_level_verdict(
            [6.91] * 4, self.cols_with_means([5.89, 6.40, 6.95, 7.23]), Metric.NLL
        )
        assert analysis.verdict == Verdict.INCONSISTENT

    def test_all_equal_is_inconsistent(self):
        analysis = split_level_verdict([2.0] * 3, self.cols_with_means([2.0, 2.0], n=3), Metric.NLL)
        assert analysis.verdict == Verdict.INCONSISTENT

    def test_shape_errors(self):
        with pytest.raises(ConsistencyError):
            split_level_verdict([], [], Metric.NLL)
        with pytest.raises(ConsistencyError):
            split_level_verdict([1.0], [[1.0]], Metric.NLL)
        with pytest.raises(ConsistencyError):
            split_level_verdict([1.0, 2.0], [[1.0, 2.0]], Metric.NLL)
        with pytest.raises(ConsistencyError):
            split_level_verdict([1.0, 2.0], [[1.0, 2.0], [3.0]], Metric.NLL)


def piecewise_linear(knots_x, knots_y):
    """Strictly increasing piecewise-linear map from sorted knots."""

    def f(v):
        if v <= knots_x[0]:
            slope = (knots_y[1] - knots_y[0]) / (knots_x[1] - knots_x[0])
            return knots_y[0] + (v - knots_x[0]) * slope
        if v >= knots_x[-1]:
            slope = (knots_y[-1] - knots_y[-2]) / (knots_x[-1] - knots_x[-2])
            return knots_y[-1] + (v - knots_x[-1]) * slope
        for a, b, ya, yb in zip(knots_x, knots_x[1:], knots_y, knots_y[1:]):
            if a <= v <= b:
                return ya + (v - a) * (yb - ya) / (b - a)
        raise AssertionError

    return f


@st.composite
def monotone_map(draw):
    xs = sorted(draw(st.sets(st.integers(-50, 50), min_size=3, max_size=6)))
    steps = [draw(st.floats(0.1, 5.0)) for _ in range(len(xs) - 1)]
    ys = [float(xs[0])]
    for s in steps:
        ys.append(ys[-1] + s)
    return piecewise_linear([float(x) for x in xs], ys)


class TestOrderInvariance:
    # quarter-integer lattice keeps order gaps far above float rounding, so
    # the float-evaluated map is genuinely strictly increasing on the inputs
    lattice = st.integers(-80, 80).map(lambda n: n / 4)

    @given(lattice, st.lists(lattice, min_size=2, max_size=6), monotone_map())
    def test_monotone_transform_preserves_sample_verdict(self, source, paras, f):
        before = sample_verdict(source, paras).verdict
        after = sample_verdict(f(source), [f(v) for v in paras]).verdict
        assert before == after

    @given(
        st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=8),
        st.integers(2, 4),
        st.floats(0.5, 3.0),
        st.floats(-5.0, 5.0),
        st.randoms(use_true_random=False),
    )
    def test_affine_transform_preserves_split_verdict(self, source, k, a, b, rnd):
        matrix = [[rnd.uniform(-10, 10) for _ in range(k)] for _ in source]
        base = split_level_verdict(source, matrix, Metric.NLL)
        # skip near-ties where float noise could legitimately flip the verdict
        gap = min(abs(base.source_mean - m) for m in base.split_means)
        assume(gap > 1e-6)
        mapped = split_level_verdict(
            [a * v + b for v in source],
            [[a * v + b for v in row] for row in matrix],
            Metric.NLL,
        )
        assert mapped.verdict == base.verdict

    @given(
        st.lists(st.floats(-5, 5, allow_nan=False, allow_infinity=False), min_size=2, max_size=10),
        st.integers(2, 5),
        st.randoms(use_true_random=False),
    )
    def test_same_side_samples_force_sorted_split_consistency(self, source, k, rnd):
        # paraphrases strictly above every source value: each sample verdict
        # is consistent from below, so the sorted-split verdict must be too
        matrix = [
            [v + rnd.uniform(0.5, 3.0) for _ in range(k)] for v in source
        ]
        for v, row in zip(source, matrix):
            assert sample_verdict(v, row).verdict == Verdict.CONSISTENT
        analysis = split_level_verdict(source, sorted_splits(matrix), Metric.NLL)
        assert analysis.verdict == Verdict.CONSISTENT


class TestRunConsistency:
    def test_degenerate_equality_rate_one(self):
        src = nll_set([1.0, 2.0, 3.0])
        paras = [nll_set([1.0, 2.0, 3.0], lang="deu") for _ in range(3)]
        report = run_consistency(src, paras, Metric.NLL)
        assert report.rate == 1.0

    def test_separated_source_rate_zero(self):
        src = nll_set([11.0, 12.0, 13.0])
        paras = [nll_set([1.0, 2.0, 3.0], lang="deu"), nll_set([1.5, 2.5, 3.5], lang="deu")]
        report = run_consistency(src, paras, Metric.NLL)
        assert report.rate == 0.0
        assert report.splits_original.verdict == Verdict.CONSISTENT

    def test_four_split_setup_produces_full_report(self):
        src = nll_set([2.0, 6.0, 4.0])
        paras = [nll_set([2.0 + j * 0.3, 5.0, 4.2], lang="deu") for j in range(4)]
        report = run_consistency(src, paras, Metric.NLL, split_names=["A", "B", "C", "D"])
        assert report.n == 3 and len(report.verdicts) == 3
        assert report.splits_original.split_names == ("A", "B", "C", "D")
        assert report.splits_sorted.split_names[0].startswith("rank1")
        assert report.note  # PPL exclusion documented

    def test_misalignment_reports_first_missing_id(self):
        src = nll_set([1.0, 2.0, 3.0])
        short = nll_set([1.0, 2.0], lang="deu")
        with pytest.raises(ConsistencyError) as ei:
            run_consistency(src, [short, short], Metric.NLL)
        assert "sample_id 2" in str(ei.value)

    def test_ppl_needs_explicit_flag(self):
        src = nll_set([1.0, 2.0])
        paras = [nll_set([1.5, 2.5], lang="deu"), nll_set([0.5, 1.5], lang="deu")]
        with pytest.raises(ConsistencyError):
            run_consistency(src, paras, Metric.PPL)
        report = run_consistency(src, paras, Metric.PPL, allow_ppl=True)
        assert report.metric == Metric.PPL

    def test_ppl_sample_verdicts_match_nll(self):
        src = nll_set([1.0, 2.0, 0.3])
        paras = [
            nll_set([1.5, 2.5, 0.1], lang="deu"),
            nll_set([0.5, 1.5, 0.2], lang="deu"),
        ]
        by_nll = run_consistency(src, paras, Metric.NLL)
        by_ppl = run_consistency(src, paras, Metric.PPL, allow_ppl=True)
        assert [v.verdict for v in by_nll.verdicts] == [v.verdict for v in by_ppl.verdicts]

    def test_mrr_without_ranks_rejected(self):
        rankless = ScoreSet(
            LanguageCode("deu"),
            (ScoredSequence(LanguageCode("deu"), 0, ("w",), (-1.0,), None, 1),),
        )
        src = nll_set([1.0])
        with pytest.raises(ConsistencyError) as ei:
            run_consistency(src, [rankless, rankless], Metric.MRR)
        assert "ranks" in str(ei.value)

    def test_bpc_uses_char_counts(self):
        def bpc_set(values, chars, lang):
            seqs = tuple(
                ScoredSequence(
                    LanguageCode(lang), i, ("w",), (-v * LN2 * c,), (1,), c
                )
                for i, (v, c) in enumerate(zip(values, chars))
            )
            return ScoreSet(LanguageCode(lang), seqs)

        src = bpc_set([5.0], [3], "eng")
        paras = [bpc_set([1.0], [7], "deu"), bpc_set([2.0], [2], "deu")]
        report = run_consistency(src, paras, Metric.BPC)
        assert report.verdicts[0].source_value == pytest.approx(5.0, rel=1e-12)
        assert report.verdicts[0].verdict == Verdict.CONSISTENT


class TestReportSerialization:
    def report(self):
        src = nll_set([2.0, 6.0])
        paras = [nll_set([2.5, 5.0], lang="deu"), nll_set([1.5, 5.5], lang="deu")]
        return run_consistency(src, paras, Metric.NLL)

    def test_json_structure(self, tmp_path):
        p = tmp_path / "consistency.json"
        write_consistency_json(self.report(), p)
        doc = json.loads(p.read_text(encoding="utf-8"))
        assert doc["metric"] == "nll"
        assert doc["n"] == 2
        assert 0 <= doc["inconsistency_rate"] <= 1
        assert {"id", "source", "paraphrases", "verdict"} <= set(doc["samples"][0])
        for key in ("splits_original", "splits_sorted"):
            assert {"names", "means", "range", "source_mean", "verdict"} <= set(doc[key])

    def test_figure_data_sorted_by_source(self):
        data = figure_data(self.report())
        sources = [row["source"] for row in data["series"]]
        assert sources == sorted(sources)

    def test_json_byte_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_consistency_json(self.report(), a)
        write_consistency_json(self.report(), b)
        assert a.read_bytes() == b.read_bytes()

    def test_report_invariants_enforced(self):
        r = self.report()
        with pytest.raises(ConsistencyError):
            ConsistencyReport(
                metric=r.metric,
                n=r.n + 1,
                verdicts=r.verdicts,
                rate=r.rate,
                splits_original=r.splits_original,
                splits_sorted=r.splits_sorted,
            )
        with pytest.raises(ConsistencyError):
            ConsistencyReport(
                metric=r.metric,
                n=r.n,
                verdicts=r.verdicts,
                rate=0.123,
                splits_original=r.splits_original,
                splits_sorted=r.splits_sorted,
            )
