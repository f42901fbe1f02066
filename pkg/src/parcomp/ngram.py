"""Witten-Bell n-gram scorer: the built-in deterministic probability source.

The model is a plain count table at every context length 0..order-1 plus the
interpolated Witten-Bell estimate

    P_k(w | c) = (count(c, w) + T(c) * P_{k-1}(w | c'))  /  (count(c) + T(c))

where T(c) is the number of distinct successors of context c, c' drops the
oldest context token, and P_0 is uniform 1/|V|. Context lengths with
count(c) = 0 are skipped (the estimate passes through unchanged), so every
probability is strictly positive and each conditional distribution sums
to 1. There are no tunable parameters: two trainings on the same token
lines produce bit-identical models.

Lines are wrapped with a single bos and a terminating eos. Predicted
positions are every token including eos and excluding bos; tokens_seen
counts those positions. Checkpointed training snapshots the counts every
checkpoint_every lines, which stands in for step-wise checkpoints of a
gradient-trained model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from parcomp.corpus import LanguageCode, nfc
from parcomp.errors import ScorerError
from parcomp.records import ScoredSequence
from parcomp.tokenizer import BOS_ID, EOS_ID, TokenizerModel, encode

NGRAM_FORMAT_VERSION = 1

# context -> (successor ids array, counts array, total, distinct)
_Table = dict[tuple[int, ...], dict[int, int]]


@dataclass(frozen=True)
class NGramModel:
    """Immutable trained model; treat the count dicts as read-only."""

    order: int
    vocab_size: int
    bos_id: int
    eos_id: int
    tokens_seen: int
    tables: tuple[_Table, ...]  # index k = context length

    def __post_init__(self):
        if self.order < 1:
            raise ScorerError(f"order must be >= 1, got {self.order}")
        if len(self.tables) != self.order:
            raise ScorerError(
                f"{len(self.tables)} count tables for order {self.order}"
            )
        if not (0 <= self.bos_id < self.vocab_size and 0 <= self.eos_id < self.vocab_size):
            raise ScorerError("bos/eos ids must be < vocab_size")
        for k, table in enumerate(self.tables):
            for ctx, succ in table.items():
                if len(ctx) != k:
                    raise ScorerError(f"context {ctx} stored at length {k}")
                if any(c < 1 for c in succ.values()):
                    raise ScorerError(f"non-positive count under context {ctx}")


def _check_ids(ids, vocab_size, what):
    for t in ids:
        if not 0 <= t < vocab_size:
            raise ScorerError(f"{what}: token id {t} out of range for vocab {vocab_size}")


def _empty_tables(order: int) -> list[_Table]:
    return [{} for _ in range(order)]


def _accumulate(tables: list[_Table], line: list[int], order: int, bos_id: int, eos_id: int) -> int:
    """Add one line's counts; returns number of predicted positions."""
    seq = [bos_id] + list(line) + [eos_id]
    for i in range(1, len(seq)):
        w = seq[i]
        for k in range(order):
            if i < k:
                break  # not enough preceding tokens at this context length
            ctx = tuple(seq[i - k : i])
            succ = tables[k].setdefault(ctx, {})
            succ[w] = succ.get(w, 0) + 1
    return len(seq) - 1


def train_ngram(
    token_lines: list[list[int]],
    order: int,
    vocab_size: int,
    bos_id: int = BOS_ID,
    eos_id: int = EOS_ID,
) -> NGramModel:
    """Count n-grams of every length 0..order-1 over bos/eos-wrapped lines."""
    if order < 1:
        raise ScorerError(f"order must be >= 1, got {order}")
    if vocab_size < 1:
        raise ScorerError(f"vocab_size must be >= 1, got {vocab_size}")
    tables = _empty_tables(order)
    seen = 0
    for j, line in enumerate(token_lines):
        _check_ids(line, vocab_size, f"line {j}")
        seen += _accumulate(tables, line, order, bos_id, eos_id)
    return NGramModel(
        order=order,
        vocab_size=vocab_size,
        bos_id=bos_id,
        eos_id=eos_id,
        tokens_seen=seen,
        tables=tuple(tables),
    )


def next_token_distribution(model: NGramModel, context: list[int]) -> np.ndarray:
    """Dense P(w | context) over the full vocabulary; strictly positive.

    Only the last order-1 context tokens matter (Markov property).
    """
    _check_ids(context, model.vocab_size, "context")
    ctx = tuple(context[max(0, len(context) - (model.order - 1)) :]) if model.order > 1 else ()
    p = np.full(model.vocab_size, 1.0 / model.vocab_size)
    for k in range(model.order):
        if k > len(ctx):
            break
        c = ctx[len(ctx) - k :]
        succ = model.tables[k].get(c)
        if not succ:
            continue
        total = sum(succ.values())
        distinct = len(succ)
        denom = total + distinct
        p *= distinct / denom
        ids = np.fromiter(succ.keys(), dtype=np.int64, count=distinct)
        counts = np.fromiter(succ.values(), dtype=np.float64, count=distinct)
        p[ids] += counts / denom
    return p


def token_probability(model: NGramModel, context: list[int], token: int) -> float:
    """Scalar P(token | context); equals next_token_distribution(...)[token]."""
    _check_ids(context, model.vocab_size, "context")
    _check_ids([token], model.vocab_size, "token")
    ctx = tuple(context[max(0, len(context) - (model.order - 1)) :]) if model.order > 1 else ()
    p = 1.0 / model.vocab_size
    for k in range(model.order):
        if k > len(ctx):
            break
        c = ctx[len(ctx) - k :]
        succ = model.tables[k].get(c)
        if not succ:
            continue
        total = sum(succ.values())
        distinct = len(succ)
        denom = total + distinct
        # same op order as the vector path so results are bit-identical
        p = p * (distinct / denom) + succ.get(token, 0) / denom
    return p


def _rank_of(p: np.ndarray, token: int) -> int:
    """Position of token in the (probability desc, id asc) total order."""
    pt = p[token]
    ahead = int(np.count_nonzero(p > pt))
    tied_before = int(np.count_nonzero(p[:token] == pt))
    return 1 + ahead + tied_before


def score_token_line(
    model: NGramModel,
    token_ids: list[int],
    *,
    lang: str,
    sample_id: int,
    char_count: int,
    surfaces: list[str] | None = None,
) -> ScoredSequence:
    """Score a raw token line (no bos/eos; the model adds both).

    Emits one (logprob, rank) per predicted position: every token plus the
    terminating eos. surfaces defaults to decimal token ids; eos surface is
    "</s>".
    """
    _check_ids(token_ids, model.vocab_size, "token_ids")
    predicted = list(token_ids) + [model.eos_id]
    if surfaces is None:
        surfaces = [str(t) for t in token_ids]
    if len(surfaces) != len(token_ids):
        raise ScorerError(f"{len(surfaces)} surfaces for {len(token_ids)} tokens")
    context = [model.bos_id]
    logprobs: list[float] = []
    ranks: list[int] = []
    for w in predicted:
        dist = next_token_distribution(model, context)
        logprobs.append(math.log(dist[w]))
        ranks.append(_rank_of(dist, w))
        context.append(w)
    return ScoredSequence(
        lang=LanguageCode(lang),
        sample_id=sample_id,
        tokens=tuple(surfaces) + ("</s>",),
        logprobs=tuple(logprobs),
        ranks=tuple(ranks),
        char_count=char_count,
    )


def score_sequence(
    model: NGramModel,
    tok: TokenizerModel,
    text: str,
    *,
    lang: str = "und",
    sample_id: int = 0,
) -> ScoredSequence:
    """Encode text, score every position including eos, count NFC characters."""
    normalized = nfc(text)
    if not normalized:
        raise ScorerError("cannot score empty text")
    if tok.vocab_size != model.vocab_size:
        raise ScorerError(
            f"tokenizer vocab {tok.vocab_size} != model vocab {model.vocab_size}"
        )
    ids = encode(tok, normalized)
    surfaces = [
        tok.token_bytes[i].decode("utf-8", errors="backslashreplace") for i in ids
    ]
    return score_token_line(
        model,
        ids,
        lang=lang,
        sample_id=sample_id,
        char_count=len(normalized),
        surfaces=surfaces,
    )


@dataclass(frozen=True)
class CheckpointSeries:
    """Models snapshotted at strictly increasing lines-consumed marks."""

    checkpoints: tuple[tuple[int, NGramModel], ...]

    def __post_init__(self):
        if not self.checkpoints:
            raise ScorerError("checkpoint series is empty")
        marks = [lines for lines, _ in self.checkpoints]
        if any(b <= a for a, b in zip(marks, marks[1:])):
            raise ScorerError(f"lines_consumed not strictly increasing: {marks}")

    @property
    def marks(self) -> list[int]:
        return [lines for lines, _ in self.checkpoints]

    def final(self) -> NGramModel:
        return self.checkpoints[-1][1]


def _snapshot(tables: list[_Table]) -> tuple[_Table, ...]:
    return tuple({ctx: dict(succ) for ctx, succ in table.items()} for table in tables)


def train_checkpoints(
    token_lines: list[list[int]],
    order: int,
    checkpoint_every: int,
    vocab_size: int,
    bos_id: int = BOS_ID,
    eos_id: int = EOS_ID,
) -> CheckpointSeries:
    """Accumulate counts, snapshotting every checkpoint_every lines.

    The last checkpoint always covers the full corpus. Each snapshot is
    bit-identical to a fresh train_ngram on the same prefix.
    """
    if checkpoint_every < 1:
        raise ScorerError(f"checkpoint_every must be >= 1, got {checkpoint_every}")
    if not token_lines:
        raise ScorerError("cannot train checkpoints on an empty corpus")
    tables = _empty_tables(order)
    seen = 0
    out: list[tuple[int, NGramModel]] = []
    for j, line in enumerate(token_lines, start=1):
        _check_ids(line, vocab_size, f"line {j - 1}")
        seen += _accumulate(tables, line, order, bos_id, eos_id)
        if j % checkpoint_every == 0 or j == len(token_lines):
            out.append(
                (
                    j,
                    NGramModel(
                        order=order,
                        vocab_size=vocab_size,
                        bos_id=bos_id,
                        eos_id=eos_id,
                        tokens_seen=seen,
                        tables=_snapshot(tables),
                    ),
                )
            )
    return CheckpointSeries(checkpoints=tuple(out))


def save_ngram(model: NGramModel, path: str | Path) -> None:
    """Versioned JSON of the count tables; loads back bit-exactly."""
    tables_doc = []
    for table in model.tables:
        tables_doc.append(
            {
                ",".join(map(str, ctx)): {str(w): c for w, c in succ.items()}
                for ctx, succ in table.items()
            }
        )
    doc = {
        "version": NGRAM_FORMAT_VERSION,
        "order": model.order,
        "vocab_size": model.vocab_size,
        "bos_id": model.bos_id,
        "eos_id": model.eos_id,
        "tokens_seen": model.tokens_seen,
        "tables": tables_doc,
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, indent=None, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_ngram(path: str | Path) -> NGramModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ScorerError(f"model file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ScorerError(f"model file {path} is not valid JSON: {e}") from None
    if doc.get("version") != NGRAM_FORMAT_VERSION:
        raise ScorerError(f"unsupported model format version {doc.get('version')!r}")
    tables: list[_Table] = []
    for table_doc in doc["tables"]:
        table: _Table = {}
        for ctx_key, succ_doc in table_doc.items():
            ctx = tuple(int(x) for x in ctx_key.split(",")) if ctx_key else ()
            table[ctx] = {int(w): int(c) for w, c in succ_doc.items()}
        tables.append(table)
    return NGramModel(
        order=int(doc["order"]),
        vocab_size=int(doc["vocab_size"]),
        bos_id=int(doc["bos_id"]),
        eos_id=int(doc["eos_id"]),
        tokens_seen=int(doc["tokens_seen"]),
        tables=tuple(tables),
    )
