"""Score records: the interchange format between scorers and metrics.

One ScoredSequence is one scored sentence: token surfaces, per-token
natural-log probabilities, optional predicted ranks, and the NFC character
count of the raw sentence. Any scorer that can emit these feeds the metric
and consistency engines identically.

Wire format is line-delimited JSON, one record per line::

    {"lang": "deu", "sample_id": 17, "tokens": ["▁Das", "▁Haus"],
     "logprobs": [-2.31, -0.94], "ranks": [5, 1], "char_count": 8}

``ranks`` is the only optional field. Unknown fields are an error in strict
mode and ignored in lenient mode. Floats are serialized with the shortest
decimal form that roundtrips, so export followed by ingest is bit-exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from parcomp.corpus import LanguageCode
from parcomp.errors import RecordError

_REQUIRED_FIELDS = ("lang", "sample_id", "tokens", "logprobs", "char_count")
_ALL_FIELDS = _REQUIRED_FIELDS + ("ranks",)


@dataclass(frozen=True)
class ScoredSequence:
    """Per-token scores for one sentence."""

    lang: LanguageCode
    sample_id: int
    tokens: tuple[str, ...]
    logprobs: tuple[float, ...]
    ranks: tuple[int, ...] | None
    char_count: int

    def __post_init__(self):
        s = len(self.tokens)
        if s < 1:
            raise RecordError(f"sample {self.sample_id}: tokens must be non-empty")
        if len(self.logprobs) != s:
            raise RecordError(
                f"sample {self.sample_id}: {len(self.logprobs)} logprobs for {s} tokens"
            )
        for t, lp in enumerate(self.logprobs):
            # finite required: -inf would poison every downstream mean
            if not math.isfinite(lp) or lp > 0:
                raise RecordError(
                    f"sample {self.sample_id}: logprobs[{t}] = {lp} "
                    "(must be finite and <= 0)"
                )
        if self.ranks is not None:
            if len(self.ranks) != s:
                raise RecordError(
                    f"sample {self.sample_id}: {len(self.ranks)} ranks for {s} tokens"
                )
            for t, r in enumerate(self.ranks):
                if r < 1:
                    raise RecordError(
                        f"sample {self.sample_id}: ranks[{t}] = {r} (must be >= 1)"
                    )
        if self.char_count < 1:
            raise RecordError(
                f"sample {self.sample_id}: char_count = {self.char_count} (must be >= 1)"
            )

    @property
    def n_tokens(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class ScoreSet:
    """All scored sentences of one language, ordered by dense sample_id."""

    lang: LanguageCode
    sequences: tuple[ScoredSequence, ...]
    provenance: str = field(default="", compare=False)  # scorer id / checkpoint note

    def __post_init__(self):
        for i, seq in enumerate(self.sequences):
            if seq.lang != self.lang:
                raise RecordError(
                    f"sequence {i} has lang {seq.lang}, set is {self.lang}"
                )
            if seq.sample_id != i:
                raise RecordError(
                    f"sample_ids must be dense 0..{len(self.sequences) - 1}; "
                    f"position {i} holds id {seq.sample_id}"
                )

    def __len__(self) -> int:
        return len(self.sequences)

    @property
    def mrr_available(self) -> bool:
        """True when every record carries ranks."""
        return all(s.ranks is not None for s in self.sequences)


def _typed(obj: dict, key: str, line_no: int):
    val = obj[key]
    if key == "lang":
        if not isinstance(val, str):
            raise RecordError(f"line {line_no}: field 'lang' must be a string")
        return val
    if key in ("sample_id", "char_count"):
        if isinstance(val, bool) or not isinstance(val, int):
            raise RecordError(f"line {line_no}: field {key!r} must be an integer")
        return val
    if key == "tokens":
        if not isinstance(val, list) or not all(isinstance(t, str) for t in val):
            raise RecordError(f"line {line_no}: field 'tokens' must be a list of strings")
        return tuple(val)
    if key == "logprobs":
        if not isinstance(val, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in val
        ):
            raise RecordError(f"line {line_no}: field 'logprobs' must be a list of numbers")
        return tuple(float(x) for x in val)
    if key == "ranks":
        if not isinstance(val, list) or not all(
            isinstance(r, int) and not isinstance(r, bool) for r in val
        ):
            raise RecordError(f"line {line_no}: field 'ranks' must be a list of integers")
        return tuple(val)
    raise RecordError(f"line {line_no}: unhandled field {key!r}")


def parse_record(line: str, line_no: int, strict: bool = True) -> ScoredSequence:
    """Parse and validate a single JSONL record. line_no is 1-based, for errors."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise RecordError(f"line {line_no}: malformed JSON ({e.msg})") from None
    if not isinstance(obj, dict):
        raise RecordError(f"line {line_no}: record must be a JSON object")
    missing = [k for k in _REQUIRED_FIELDS if k not in obj]
    if missing:
        raise RecordError(f"line {line_no}: missing field {missing[0]!r}")
    extra = [k for k in obj if k not in _ALL_FIELDS]
    if extra and strict:
        raise RecordError(
            f"line {line_no}: unknown field {extra[0]!r} (strict mode rejects extras)"
        )
    try:
        return ScoredSequence(
            lang=LanguageCode(_typed(obj, "lang", line_no)),
            sample_id=_typed(obj, "sample_id", line_no),
            tokens=_typed(obj, "tokens", line_no),
            logprobs=_typed(obj, "logprobs", line_no),
            ranks=_typed(obj, "ranks", line_no) if "ranks" in obj else None,
            char_count=_typed(obj, "char_count", line_no),
        )
    except RecordError as e:
        raise RecordError(f"line {line_no}: {e}") from None
    except Exception as e:  # lang code errors and the like
        raise RecordError(f"line {line_no}: {e}") from None


def ingest_scores(
    lines: Iterable[str],
    strict: bool = True,
    expected_lang: str | None = None,
    provenance: str = "",
) -> ScoreSet:
    """Validate a JSONL stream into a ScoreSet, re-sorted by sample_id.

    Blank lines are skipped. All records must share one language; sample_ids
    must be exactly 0..N-1 after sorting. An empty stream is only valid when
    expected_lang names the (then empty) set's language.
    """
    records: list[ScoredSequence] = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        records.append(parse_record(line, line_no, strict=strict))

    if not records:
        if expected_lang is None:
            raise RecordError("no records in stream (pass expected_lang to allow empty)")
        return ScoreSet(lang=LanguageCode(expected_lang), sequences=(), provenance=provenance)

    lang = records[0].lang
    for r in records:
        if r.lang != lang:
            raise RecordError(f"mixed languages in stream: {lang} and {r.lang}")
    if expected_lang is not None and lang != expected_lang:
        raise RecordError(f"stream language {lang} does not match expected {expected_lang}")

    records.sort(key=lambda r: r.sample_id)
    seen = set()
    for r in records:
        if r.sample_id in seen:
            raise RecordError(f"duplicate sample_id {r.sample_id}")
        seen.add(r.sample_id)
    for i, r in enumerate(records):
        if r.sample_id != i:
            raise RecordError(f"missing sample_id {i} (ids must be dense from 0)")

    return ScoreSet(lang=lang, sequences=tuple(records), provenance=provenance)


def export_scores(score_set: ScoreSet) -> list[str]:
    """Serialize to JSONL lines (no trailing newlines), canonical field order.

    json.dumps uses repr-shortest float form, so ingest(export(s)) == s.
    """
    lines = []
    for seq in score_set.sequences:
        obj = {
            "lang": str(seq.lang),
            "sample_id": seq.sample_id,
            "tokens": list(seq.tokens),
            "logprobs": list(seq.logprobs),
        }
        if seq.ranks is not None:
            obj["ranks"] = list(seq.ranks)
        obj["char_count"] = seq.char_count
        lines.append(json.dumps(obj, ensure_ascii=False))
    return lines


def write_scores(score_set: ScoreSet, path: str | Path) -> None:
    text = "".join(line + "\n" for line in export_scores(score_set))
    Path(path).write_text(text, encoding="utf-8")


def read_scores(
    path: str | Path,
    strict: bool = True,
    expected_lang: str | None = None,
    provenance: str = "",
) -> ScoreSet:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise RecordError(f"score file not found: {path}") from None
    return ingest_scores(
        text.splitlines(), strict=strict, expected_lang=expected_lang, provenance=provenance
    )
