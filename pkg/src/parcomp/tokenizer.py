"""Deterministic byte-fallback BPE tokenizer.

The base vocabulary is fixed: ids 0..255 are the raw bytes, 256 is bos,
257 is eos. Merges learned by training get ids 258 upward, so any valid
UTF-8 string is encodable even by an untrained model and
``decode(encode(x)) == x`` always holds (encode never normalizes).

Determinism rules, which make independently trained models bit-identical:

- pre-tokenization splits at whitespace, attaching one leading space to the
  following unit; merges never cross unit boundaries;
- the most frequent pair wins each round, ties broken by the
  lexicographically smallest (left bytes, right bytes) pair;
- training stops at the requested vocab size or when no pair occurs twice.

bos/eos are never produced by encode and decode maps them to empty bytes;
attaching them around a sequence is the scorer's job.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from parcomp.errors import TokenizerError

N_BYTES = 256
BOS_ID = 256
EOS_ID = 257
N_BASE = 258

TOKENIZER_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TokenizerModel:
    """Immutable trained tokenizer: ordered merges plus the derived vocab table."""

    merges: tuple[tuple[int, int], ...]  # (left id, right id), training order
    token_bytes: tuple[bytes, ...]  # id -> byte string; bos/eos map to b""

    def __post_init__(self):
        if len(self.token_bytes) != N_BASE + len(self.merges):
            raise TokenizerError(
                f"vocab has {len(self.token_bytes)} entries, "
                f"expected {N_BASE + len(self.merges)}"
            )
        for k, (a, b) in enumerate(self.merges):
            new_id = N_BASE + k
            if not (0 <= a < new_id and 0 <= b < new_id):
                raise TokenizerError(f"merge {k} references id >= {new_id}")
            if self.token_bytes[new_id] != self.token_bytes[a] + self.token_bytes[b]:
                raise TokenizerError(f"merge {k}: bytes are not the parents' concatenation")

    @property
    def vocab_size(self) -> int:
        return len(self.token_bytes)


def _base_token_bytes() -> list[bytes]:
    table = [bytes([i]) for i in range(N_BYTES)]
    table.append(b"")  # bos
    table.append(b"")  # eos
    return table


def pretokenize(text: str) -> list[str]:
    """Split into units at whitespace; a single space sticks to the next unit.

    Concatenating the units reproduces the input exactly. Only the ASCII
    space directly before a non-space run is attached; any other whitespace
    stays in standalone runs.
    """
    units: list[str] = []
    i, n = 0, len(text)
    while i < n:
        if not text[i].isspace():
            j = i
            while j < n and not text[j].isspace():
                j += 1
            units.append(text[i:j])
            i = j
        else:
            j = i
            while j < n and text[j].isspace():
                j += 1
            if j < n and text[j - 1] == " ":
                if j - i > 1:
                    units.append(text[i : j - 1])
                k = j
                while k < n and not text[k].isspace():
                    k += 1
                units.append(" " + text[j:k])
                i = k
            else:
                units.append(text[i:j])
                i = j
    return units


def _merge_pair(seq: list[int], pair: tuple[int, int], new_id: int) -> list[int]:
    """Replace left-to-right occurrences of pair with new_id."""
    out: list[int] = []
    i = 0
    while i < len(seq):
        if i + 1 < len(seq) and seq[i] == pair[0] and seq[i + 1] == pair[1]:
            out.append(new_id)
            i += 2
        else:
            out.append(seq[i])
            i += 1
    return out


def train_bpe(corpus_lines: list[str], vocab_size: int) -> TokenizerModel:
    """Train greedy BPE over pre-token units.

    Each round merges the globally most frequent adjacent pair (ties: the
    lexicographically smallest pair of byte strings). Stops when the vocab
    reaches vocab_size or no pair occurs at least twice.
    """
    if vocab_size < N_BASE:
        raise TokenizerError(f"vocab_size must be >= {N_BASE}, got {vocab_size}")
    if not corpus_lines:
        raise TokenizerError("cannot train on an empty corpus")

    # unit frequency table; BPE state is one id sequence per distinct unit
    unit_freq: dict[tuple[int, ...], int] = {}
    for line in corpus_lines:
        for unit in pretokenize(line):
            key = tuple(unit.encode("utf-8"))
            unit_freq[key] = unit_freq.get(key, 0) + 1

    token_bytes = _base_token_bytes()
    merges: list[tuple[int, int]] = []

    while len(token_bytes) < vocab_size:
        pair_counts: dict[tuple[int, int], int] = {}
        for seq, freq in unit_freq.items():
            for pair in zip(seq, seq[1:]):
                pair_counts[pair] = pair_counts.get(pair, 0) + freq
        if not pair_counts:
            break
        top = max(pair_counts.values())
        if top < 2:
            break
        best = min(
            (p for p, c in pair_counts.items() if c == top),
            key=lambda p: (token_bytes[p[0]], token_bytes[p[1]]),
        )
        new_id = len(token_bytes)
        token_bytes.append(token_bytes[best[0]] + token_bytes[best[1]])
        merges.append(best)
        unit_freq = {
            tuple(_merge_pair(list(seq), best, new_id)): freq
            for seq, freq in unit_freq.items()
        }

    return TokenizerModel(merges=tuple(merges), token_bytes=tuple(token_bytes))


def encode(model: TokenizerModel, text: str) -> list[int]:
    """Tokenize text to ids. Total on any string; never emits bos/eos."""
    rank = {pair: i for i, pair in enumerate(model.merges)}
    out: list[int] = []
    for unit in pretokenize(text):
        seq = list(unit.encode("utf-8"))
        while len(seq) >= 2:
            # lowest-rank pair first reproduces training merge order
            best_rank, best_pair = None, None
            for pair in zip(seq, seq[1:]):
                r = rank.get(pair)
                if r is not None and (best_rank is None or r < best_rank):
                    best_rank, best_pair = r, pair
            if best_pair is None:
                break
            seq = _merge_pair(seq, best_pair, N_BASE + best_rank)
        out.extend(seq)
    return out


def decode(model: TokenizerModel, ids: list[int]) -> str:
    """Inverse of encode. bos/eos decode to nothing."""
    chunks = []
    for i in ids:
        if not 0 <= i < model.vocab_size:
            raise TokenizerError(f"unknown token id {i} (vocab size {model.vocab_size})")
        chunks.append(model.token_bytes[i])
    raw = b"".join(chunks)
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise TokenizerError(
            f"decoded bytes are not valid UTF-8 at byte offset {e.start}"
        ) from None


def save_tokenizer(model: TokenizerModel, path: str | Path) -> None:
    """Write the model as versioned JSON; bit-exact across platforms."""
    base_table = [{"id": i, "bytes": bytes([i]).hex()} for i in range(N_BYTES)]
    base_table.append({"id": BOS_ID, "special": "bos"})
    base_table.append({"id": EOS_ID, "special": "eos"})
    doc = {
        "version": TOKENIZER_FORMAT_VERSION,
        "base_tokens": base_table,
        "merges": [
            {
                "pair": [a, b],
                "bytes": [model.token_bytes[a].hex(), model.token_bytes[b].hex()],
            }
            for a, b in model.merges
        ],
        "vocab_size": model.vocab_size,
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_tokenizer(path: str | Path) -> TokenizerModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise TokenizerError(f"tokenizer file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise TokenizerError(f"tokenizer file {path} is not valid JSON: {e}") from None
    if doc.get("version") != TOKENIZER_FORMAT_VERSION:
        raise TokenizerError(
            f"unsupported tokenizer format version {doc.get('version')!r}"
        )
    token_bytes = _base_token_bytes()
    merges: list[tuple[int, int]] = []
    for k, m in enumerate(doc.get("merges", [])):
        a, b = m["pair"]
        if not (0 <= a < len(token_bytes) and 0 <= b < len(token_bytes)):
            raise TokenizerError(f"merge {k} references an id out of range")
        expect = [token_bytes[a].hex(), token_bytes[b].hex()]
        if m.get("bytes") != expect:
            raise TokenizerError(f"merge {k}: byte strings disagree with parent ids")
        token_bytes.append(token_bytes[a] + token_bytes[b])
        merges.append((a, b))
    model = TokenizerModel(merges=tuple(merges), token_bytes=tuple(token_bytes))
    if doc.get("vocab_size") != model.vocab_size:
        raise TokenizerError(
            f"vocab_size field {doc.get('vocab_size')} disagrees with "
            f"{model.vocab_size} reconstructed tokens"
        )
    return model
