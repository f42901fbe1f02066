"""Export per-token log probabilities from a causal LM as score records.

Each corpus line becomes one JSONL record::

    {"lang": "eng", "sample_id": 0, "tokens": [...], "logprobs": [...],
     "ranks": [...], "char_count": 42}

The contract mirrors the parcomp score-records schema exactly: natural-log
probabilities for every scored token, optional full-vocabulary ranks, and
char_count = the NFC code-point count of the raw sentence. Records are
emitted in sample_id order regardless of internal batching.

Scoring convention: the sentence is NFC-normalized, tokenized without
special tokens, then wrapped as [bos] + pieces + [eos] (each side
controlled by a flag; the choice is recorded in a provenance sidecar, not
in the records). Every token after the first input id is scored from the
model's next-token distribution at its position; a leading bos is
therefore pure context and never scored. Ranks order candidates by
probability descending with token id ascending as the tie-break, computed
on the same log-softmax row the logprob is read from.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import asdict, dataclass
from pathlib import Path


class ExportError(Exception):
    """Raised for model load failures and unusable corpus lines."""


@dataclass(frozen=True)
class ExportJob:
    """One export run; CLI flags mirror these fields."""

    model: str
    corpus: Path
    lang: str
    out: Path
    batch_size: int = 8
    with_ranks: bool = True
    include_bos: bool = True
    include_eos: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ExportError(f"batch_size = {self.batch_size} (must be >= 1)")
        if not (len(self.lang) == 3 and self.lang.isascii() and self.lang.islower()):
            raise ExportError(f"language code {self.lang!r} is not a lowercase 3-letter code")


def load_sentences(path: Path) -> list[str]:
    """Read one NFC-normalized sentence per line; blank lines are an error."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ExportError(f"corpus file not found: {path}") from None
    except UnicodeDecodeError as e:
        raise ExportError(f"{path} is not valid UTF-8 at byte {e.start}") from None
    sentences = []
    for i, line in enumerate(raw.split("\n")[:-1] if raw.endswith("\n") else raw.split("\n"), 1):
        line = line.rstrip("\r")
        if not line.strip():
            raise ExportError(f"{path}:{i}: blank line (one sentence per line required)")
        sentences.append(unicodedata.normalize("NFC", line))
    if not sentences:
        raise ExportError(f"{path} contains no sentences")
    return sentences


def _load_model(name: str):
    from transformers import AutoModelForCausalLM, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(name)
        model = AutoModelForCausalLM.from_pretrained(name)
    except Exception as e:
        raise ExportError(f"could not load model {name!r}: {e}") from None
    model.eval()
    return tokenizer, model


def _special_id(tokenizer, which: str) -> int:
    token_id = getattr(tokenizer, f"{which}_token_id")
    if token_id is None:
        raise ExportError(
            f"tokenizer defines no {which} token; rerun with --no-{which}"
        )
    return token_id


def _score_batch(model, rows: list[list[int]], with_ranks: bool):
    """Forward one right-padded batch; return (logprobs, ranks) per row.

    Right padding keeps every real position's logits independent of the
    padding (causal attention never looks ahead), so batch composition
    does not change which distribution a token is scored under.
    """
    import torch

    pad = 0  # masked out; value is irrelevant
    width = max(len(r) for r in rows)
    ids = torch.full((len(rows), width), pad, dtype=torch.long)
    mask = torch.zeros((len(rows), width), dtype=torch.long)
    for b, row in enumerate(rows):
        ids[b, : len(row)] = torch.tensor(row, dtype=torch.long)
        mask[b, : len(row)] = 1
    with torch.no_grad():
        logits = model(input_ids=ids, attention_mask=mask).logits.float()
    out = []
    for b, row in enumerate(rows):
        dist = torch.log_softmax(logits[b, : len(row) - 1], dim=-1)
        targets = torch.tensor(row[1:], dtype=torch.long)
        logprobs = dist.gather(1, targets.unsqueeze(1)).squeeze(1)
        ranks = None
        if with_ranks:
            ranks = []
            for t, w in enumerate(row[1:]):
                r = dist[t]
                pt = r[w]
                ranks.append(1 + int((r > pt).sum()) + int((r[:w] == pt).sum()))
        out.append((logprobs.tolist(), ranks))
    return out


def export_model_scores(job: ExportJob) -> int:
    """Run the job; write records plus a provenance sidecar. Returns n records."""
    sentences = load_sentences(job.corpus)
    tokenizer, model = _load_model(job.model)
    bos = _special_id(tokenizer, "bos") if job.include_bos else None
    eos = _special_id(tokenizer, "eos") if job.include_eos else None

    rows, token_strs = [], []
    for i, sent in enumerate(sentences):
        pieces = tokenizer.encode(sent, add_special_tokens=False)
        if not pieces:
            raise ExportError(f"{job.corpus}:{i + 1}: tokenization produced an empty sequence")
        full = ([bos] if bos is not None else []) + pieces + ([eos] if eos is not None else [])
        if len(full) < 2:
            raise ExportError(
                f"{job.corpus}:{i + 1}: nothing to score "
                "(single token with bos and eos both excluded)"
            )
        rows.append(full)
        token_strs.append(tokenizer.convert_ids_to_tokens(full[1:]))

    scored: dict[int, tuple[list[float], list[int] | None]] = {}
    for start in range(0, len(rows), job.batch_size):
        batch = rows[start : start + job.batch_size]
        for offset, result in enumerate(_score_batch(model, batch, job.with_ranks)):
            scored[start + offset] = result

    out = Path(job.out)
    with out.open("w", encoding="utf-8", newline="\n") as fh:
        for i in range(len(rows)):  # sample_id order, whatever the batch layout
            logprobs, ranks = scored[i]
            record = {
                "lang": job.lang,
                "sample_id": i,
                "tokens": token_strs[i],
                "logprobs": logprobs,
            }
            if ranks is not None:
                record["ranks"] = ranks
            record["char_count"] = len(sentences[i])
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    provenance = dict(asdict(job), corpus=str(job.corpus), out=str(out), n_sentences=len(rows))
    sidecar = out.with_name(out.name + ".provenance.json")
    sidecar.write_text(
        json.dumps(provenance, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return len(rows)
