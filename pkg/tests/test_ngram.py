"""Witten-Bell n-gram model: hand oracle, normalization, ranks, checkpoints."""

import math

import numpy as np
import pytest

from parcomp.errors import ScorerError
from parcomp.ngram import (
    CheckpointSeries,
    NGramModel,
    load_ngram,
    next_token_distribution,
    save_ngram,
    score_sequence,
    score_token_line,
    token_probability,
    train_checkpoints,
    train_ngram,
)
from parcomp.tokenizer import train_bpe


def random_lines(rng, n_lines, vocab, max_len=12):
    return [
        [int(rng.integers(0, vocab)) for _ in range(int(rng.integers(1, max_len)))]
        for _ in range(n_lines)
    ]


class TestWittenBellHandOracle:
    """Single line [a,a,a], order 3, V=5, a=0, bos=3, eos=4.

    Counts: (): {a:3, eos:1}; (bos): {a:1}; (a): {a:2, eos:1};
    (bos,a): {a:1}; (a,a): {a:1, eos:1}. Recursion by hand:
        P1(a)        = (3 + 2/5) / 6          = 17/30
        P2(a | a)    = (2 + 2*17/30) / 5      = 47/75
        P3(a | a,a)  = (1 + 2*47/75) / 4      = 169/300
        P3(eos|a,a)  = (1 + 2*22/75) / 4      = 119/300
        P3(w  |a,a)  = (0 + 2*2/75) / 4       = 4/300   for unseen w
    which sums to (169 + 119 + 3*4)/300 = 1 exactly.
    """

    A, BOS, EOS = 0, 3, 4

    def model(self):
        return train_ngram([[self.A] * 3], order=3, vocab_size=5, bos_id=self.BOS, eos_id=self.EOS)

    def test_recursion_matches_hand_values(self):
        m = self.model()
        assert token_probability(m, [], self.A) == pytest.approx(17 / 30, abs=1e-12)
        assert token_probability(m, [self.A], self.A) == pytest.approx(47 / 75, abs=1e-12)
        dist = next_token_distribution(m, [self.A, self.A])
        assert dist[self.A] == pytest.approx(169 / 300, abs=1e-12)
        assert dist[self.EOS] == pytest.approx(119 / 300, abs=1e-12)
        for unseen in (1, 2, self.BOS):
            assert dist[unseen] == pytest.approx(4 / 300, abs=1e-12)

    def test_tokens_seen_counts_predictions(self):
        assert self.model().tokens_seen == 4  # a, a, a, eos

    def test_scalar_equals_vector_bit_exact(self):
        m = self.model()
        for ctx in ([], [self.A], [self.A, self.A], [self.BOS, self.A]):
            dist = next_token_distribution(m, ctx)
            for w in range(5):
                assert token_probability(m, ctx, w) == dist[w]


class TestUntrainedUniform:
    def test_distribution_uniform(self):
        m = train_ngram([], order=2, vocab_size=10, bos_id=8, eos_id=9)
        np.testing.assert_allclose(next_token_distribution(m, [3]), np.full(10, 0.1))

    def test_score_uniform_logprobs_and_id_order_ranks(self):
        m = train_ngram([], order=2, vocab_size=10, bos_id=8, eos_id=9)
        s = score_token_line(m, [0, 5], lang="eng", sample_id=0, char_count=3)
        assert s.logprobs == pytest.approx([-math.log(10)] * 3)
        # uniform ties resolve by ascending id: rank of id k is k + 1
        assert s.ranks == (1, 6, 10)


class TestDistributionProperties:
    def trained(self, seed=0, vocab=30, order=3):
        rng = np.random.default_rng(seed)
        return train_ngram(
            random_lines(rng, 60, vocab - 2), order, vocab, bos_id=vocab - 2, eos_id=vocab - 1
        )

    def test_normalization_many_contexts(self):
        m = self.trained()
        rng = np.random.default_rng(1)
        for _ in range(300):
            ctx = [int(rng.integers(0, 30)) for _ in range(int(rng.integers(0, 5)))]
            p = next_token_distribution(m, ctx)
            assert abs(p.sum() - 1.0) < 1e-9

    def test_strict_positivity(self):
        m = self.trained(seed=2)
        rng = np.random.default_rng(3)
        for _ in range(100):
            ctx = [int(rng.integers(0, 30)) for _ in range(2)]
            assert next_token_distribution(m, ctx).min() > 0

    def test_markov_truncation(self):
        m = self.trained(seed=4)
        long_ctx = [1, 2, 3, 4, 5, 6, 7]
        np.testing.assert_array_equal(
            next_token_distribution(m, long_ctx),
            next_token_distribution(m, long_ctx[-2:]),
        )

    def test_unseen_context_backs_off(self):
        # a context never observed at the top level passes the lower-order
        # estimate through unchanged
        m = train_ngram([[0, 1, 0, 1]], order=3, vocab_size=5, bos_id=3, eos_id=4)
        np.testing.assert_array_equal(
            next_token_distribution(m, [2, 2]),
            next_token_distribution(m, []),
        )

    def test_out_of_range_ids_rejected(self):
        m = self.trained()
        with pytest.raises(ScorerError):
            next_token_distribution(m, [99])
        with pytest.raises(ScorerError):
            train_ngram([[42]], order=1, vocab_size=10)

    def test_order_must_be_positive(self):
        with pytest.raises(ScorerError):
            train_ngram([[0]], order=0, vocab_size=5)


class TestRanks:
    def brute_rank(self, p, token):
        order = sorted(range(len(p)), key=lambda v: (-p[v], v))
        return order.index(token) + 1

    def test_rank_matches_brute_force_sort(self):
        rng = np.random.default_rng(5)
        m = train_ngram(random_lines(rng, 40, 18), 3, 20, bos_id=18, eos_id=19)
        for _ in range(50):
            line = [int(rng.integers(0, 18)) for _ in range(4)]
            s = score_token_line(m, line, lang="eng", sample_id=0, char_count=1)
            # recompute each position's rank by sorting the full distribution
            context = [m.bos_id]
            for t, w in enumerate(line + [m.eos_id]):
                p = next_token_distribution(m, context)
                assert s.ranks[t] == self.brute_rank(list(p), w)
                context.append(w)

    def test_logprobs_equal_log_of_distribution(self):
        rng = np.random.default_rng(6)
        m = train_ngram(random_lines(rng, 30, 12), 3, 14, bos_id=12, eos_id=13)
        line = [3, 1, 4, 1, 5]
        s = score_token_line(m, line, lang="eng", sample_id=0, char_count=5)
        context = [m.bos_id]
        for t, w in enumerate(line + [m.eos_id]):
            p = next_token_distribution(m, context)
            assert abs(s.logprobs[t] - math.log(p[w])) < 1e-12
            context.append(w)


class TestScoreSequence:
    def setup_scorer(self):
        lines = ["das haus ist alt", "das alte haus", "ist das haus alt"]
        tok = train_bpe(lines, 270)
        from parcomp.tokenizer import encode

        m = train_ngram([encode(tok, l) for l in lines], 3, tok.vocab_size)
        return tok, m

    def test_char_count_is_nfc_length(self):
        tok, m = self.setup_scorer()
        s = score_sequence(m, tok, "café", lang="fra")  # decomposed é
        assert s.char_count == 4

    def test_certainty_gives_zero_logprob(self):
        m = train_ngram([[0], [0]], order=1, vocab_size=1, bos_id=0, eos_id=0)
        s = score_token_line(m, [0], lang="eng", sample_id=0, char_count=1)
        assert s.logprobs == (0.0, 0.0)

    def test_eos_scored_bos_not(self):
        tok, m = self.setup_scorer()
        s = score_sequence(m, tok, "das haus", lang="deu")
        assert s.tokens[-1] == "</s>"
        from parcomp.tokenizer import encode

        assert len(s.logprobs) == len(encode(tok, "das haus")) + 1

    def test_surfaces_concatenate_to_text(self):
        tok, m = self.setup_scorer()
        s = score_sequence(m, tok, "das haus ist alt", lang="deu")
        assert "".join(s.tokens[:-1]) == "das haus ist alt"

    def test_empty_text_rejected(self):
        tok, m = self.setup_scorer()
        with pytest.raises(ScorerError):
            score_sequence(m, tok, "", lang="deu")

    def test_vocab_mismatch_rejected(self):
        tok, _ = self.setup_scorer()
        other = train_ngram([], order=2, vocab_size=500)
        with pytest.raises(ScorerError):
            score_sequence(other, tok, "das haus", lang="deu")


class TestCheckpoints:
    def lines(self, n):
        rng = np.random.default_rng(7)
        return random_lines(rng, n, 8)

    def test_marks_with_exact_division(self):
        series = train_checkpoints(self.lines(10), 2, 5, 10, bos_id=8, eos_id=9)
        assert series.marks == [5, 10]

    def test_marks_with_remainder(self):
        series = train_checkpoints(self.lines(10), 2, 4, 10, bos_id=8, eos_id=9)
        assert series.marks == [4, 8, 10]

    def test_each_checkpoint_equals_fresh_training(self):
        lines = self.lines(10)
        series = train_checkpoints(lines, 3, 4, 10, bos_id=8, eos_id=9)
        for mark, model in series.checkpoints:
            assert model == train_ngram(lines[:mark], 3, 10, bos_id=8, eos_id=9)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ScorerError):
            train_checkpoints([], 2, 5, 10)

    def test_non_increasing_marks_rejected(self):
        m = train_ngram([], 1, 4, bos_id=2, eos_id=3)
        with pytest.raises(ScorerError):
            CheckpointSeries(checkpoints=((3, m), (3, m)))


class TestMonotoneTrainingNLL:
    def corpus_nll(self, model, lines):
        total, count = 0.0, 0
        for line in lines:
            s = score_token_line(model, line, lang="eng", sample_id=0, char_count=1)
            total += -sum(s.logprobs)
            count += len(s.logprobs)
        return total / count

    def test_unigram_nll_never_rises_with_repeats(self):
        # consuming the same corpus again cannot make the unigram model
        # worse on that corpus
        rng = np.random.default_rng(8)
        for _ in range(5):
            lines = random_lines(rng, 6, 6, max_len=6)
            m1 = train_ngram(lines, 1, 8, bos_id=6, eos_id=7)
            m2 = train_ngram(lines * 2, 1, 8, bos_id=6, eos_id=7)
            assert self.corpus_nll(m2, lines) <= self.corpus_nll(m1, lines) + 1e-12


class TestPersistence:
    def test_save_load_bit_exact(self, tmp_path):
        rng = np.random.default_rng(9)
        m = train_ngram(random_lines(rng, 25, 10), 3, 12, bos_id=10, eos_id=11)
        p = tmp_path / "model.json"
        save_ngram(m, p)
        loaded = load_ngram(p)
        assert loaded == m
        np.testing.assert_array_equal(
            next_token_distribution(loaded, [1, 2]),
            next_token_distribution(m, [1, 2]),
        )

    def test_save_is_byte_deterministic(self, tmp_path):
        rng = np.random.default_rng(10)
        m = train_ngram(random_lines(rng, 25, 10), 2, 12, bos_id=10, eos_id=11)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_ngram(m, a)
        save_ngram(m, b)
        assert a.read_bytes() == b.read_bytes()

    def test_bad_version_rejected(self, tmp_path):
        p = tmp_path / "model.json"
        p.write_text('{"version": 99}')
        with pytest.raises(ScorerError):
            load_ngram(p)
