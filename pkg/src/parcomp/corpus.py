"""Multi-parallel corpus loading, pivot alignment, and splitting.

A corpus is a matrix of sentences: one row per sample, one column per
language, all rows meaning-aligned. Everything here is plain text plumbing
with two hard rules applied at the boundary:

- every line is NFC-normalized with the trailing newline stripped, interior
  whitespace untouched, so character counts are unambiguous downstream;
- columns must stay exactly row-aligned, and misalignment is always a hard
  error, never a silent truncation.

Manifests are JSON documents; see ``load_corpus`` and
``load_paraphrase_set`` for the two accepted shapes.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from parcomp.errors import CorpusError
from parcomp.prng import stream_at


class LanguageCode(str):
    """ISO-639-3 code: exactly three lowercase ASCII letters."""

    def __new__(cls, code: str) -> "LanguageCode":
        if len(code) != 3 or not all("a" <= c <= "z" for c in code):
            raise CorpusError(
                f"invalid language code {code!r}: expected exactly 3 lowercase ASCII letters"
            )
        return super().__new__(cls, code)


def nfc(text: str) -> str:
    """Canonical composition; the single normalization rule used everywhere."""
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class ParallelCorpus:
    """Line-aligned multilingual text: ``rows[j][i]`` is sample j in languages[i]."""

    languages: tuple[LanguageCode, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if len(set(self.languages)) != len(self.languages):
            raise CorpusError(f"duplicate language codes in {list(self.languages)}")
        width = len(self.languages)
        for j, row in enumerate(self.rows):
            if len(row) != width:
                raise CorpusError(
                    f"row {j} has {len(row)} columns, expected {width}"
                )
            for i, cell in enumerate(row):
                if cell == "":
                    raise CorpusError(
                        f"empty sentence at row {j}, language {self.languages[i]}"
                    )

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column(self, lang: str) -> list[str]:
        """All sentences of one language, in row order."""
        try:
            i = self.languages.index(lang)
        except ValueError:
            raise CorpusError(
                f"language {lang!r} not in corpus ({list(self.languages)})"
            ) from None
        return [row[i] for row in self.rows]


@dataclass(frozen=True)
class Bitext:
    """Aligned sentence pairs between two languages."""

    lang_a: LanguageCode
    lang_b: LanguageCode
    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        for k, (a, b) in enumerate(self.pairs):
            if a == "" or b == "":
                raise CorpusError(f"empty side in pair {k} of bitext {self.lang_a}-{self.lang_b}")


@dataclass(frozen=True)
class ParaphraseSet:
    """A source column plus k >= 2 named, row-aligned paraphrase columns."""

    source_lang: LanguageCode
    target_lang: LanguageCode
    source: tuple[str, ...]
    split_names: tuple[str, ...]
    splits: tuple[tuple[str, ...], ...]  # one inner tuple per named split

    def __post_init__(self):
        if len(self.splits) < 2:
            raise CorpusError(f"paraphrase set needs at least 2 splits, got {len(self.splits)}")
        if len(self.split_names) != len(self.splits):
            raise CorpusError("split_names and splits differ in length")
        n = len(self.source)
        for name, col in zip(self.split_names, self.splits):
            if len(col) != n:
                raise CorpusError(
                    f"split {name!r} has {len(col)} rows, source has {n}"
                )

    @property
    def n_rows(self) -> int:
        return len(self.source)

    @property
    def k(self) -> int:
        return len(self.splits)


def _read_lines(path: Path) -> list[str]:
    """Read one-sentence-per-line UTF-8 text, NFC-normalized.

    Accepts LF or CRLF terminators. Raises CorpusError with the byte offset
    for invalid UTF-8 and the row index for empty lines.
    """
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise CorpusError(f"file not found: {path}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise CorpusError(f"invalid UTF-8 in {path} at byte offset {e.start}") from None
    if text.endswith("\n"):
        text = text[:-1]
    lines = []
    for j, line in enumerate(text.split("\n")):
        if line.endswith("\r"):
            line = line[:-1]
        if line == "":
            raise CorpusError(f"empty line at row {j} in {path}")
        lines.append(nfc(line))
    return lines


def _manifest_dir(manifest_path: str | Path) -> tuple[dict, Path]:
    path = Path(manifest_path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CorpusError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as e:
        raise CorpusError(f"manifest {path} is not valid JSON: {e}") from None
    return doc, path.parent


def load_corpus(manifest_path: str | Path) -> ParallelCorpus:
    """Load a parallel corpus from a JSON manifest.

    Manifest shape::

        {"languages": [{"code": "eng", "path": "eng.txt"}, ...]}

    Paths are resolved relative to the manifest file. All files must have
    the same line count; the error for a mismatch names the first offending
    file and both counts.
    """
    doc, base = _manifest_dir(manifest_path)
    entries = doc.get("languages")
    if not isinstance(entries, list) or not entries:
        raise CorpusError(f"manifest {manifest_path}: 'languages' must be a non-empty list")
    languages: list[LanguageCode] = []
    columns: list[list[str]] = []
    for entry in entries:
        code = LanguageCode(entry["code"])
        lines = _read_lines(base / entry["path"])
        if columns and len(lines) != len(columns[0]):
            raise CorpusError(
                f"line-count mismatch: {entry['path']} has {len(lines)} lines, "
                f"{entries[0]['path']} has {len(columns[0])}"
            )
        languages.append(code)
        columns.append(lines)
    rows = tuple(zip(*columns))
    return ParallelCorpus(languages=tuple(languages), rows=rows)


def load_bitexts(manifest_path: str | Path) -> list[Bitext]:
    """Load line-aligned bitexts from a JSON manifest.

    Manifest shape::

        {"bitexts": [{"lang_a": "eng", "path_a": "eng.txt",
                      "lang_b": "deu", "path_b": "deu.txt"}, ...]}
    """
    doc, base = _manifest_dir(manifest_path)
    entries = doc.get("bitexts")
    if not isinstance(entries, list) or not entries:
        raise CorpusError(f"manifest {manifest_path}: 'bitexts' must be a non-empty list")
    out = []
    for entry in entries:
        side_a = _read_lines(base / entry["path_a"])
        side_b = _read_lines(base / entry["path_b"])
        if len(side_a) != len(side_b):
            raise CorpusError(
                f"line-count mismatch: {entry['path_a']} has {len(side_a)} lines, "
                f"{entry['path_b']} has {len(side_b)}"
            )
        out.append(
            Bitext(
                lang_a=LanguageCode(entry["lang_a"]),
                lang_b=LanguageCode(entry["lang_b"]),
                pairs=tuple(zip(side_a, side_b)),
            )
        )
    return out


def load_paraphrase_set(manifest_path: str | Path) -> ParaphraseSet:
    """Load a paraphrase set from a JSON manifest.

    Manifest shape::

        {"source": {"code": "eng", "path": "eng.txt"},
         "target_code": "deu",
         "splits": [{"name": "DE1", "path": "de1.txt"}, ...]}

    Requires k >= 2 splits, all files with equal line counts.
    """
    doc, base = _manifest_dir(manifest_path)
    src = doc.get("source")
    splits = doc.get("splits")
    if not isinstance(src, dict) or not isinstance(splits, list):
        raise CorpusError(f"manifest {manifest_path}: needs 'source' object and 'splits' list")
    if len(splits) < 2:
        raise CorpusError(f"paraphrase set needs at least 2 splits, got {len(splits)}")
    source_lang = LanguageCode(src["code"])
    target_lang = LanguageCode(doc.get("target_code", src["code"]))
    source = _read_lines(base / src["path"])
    names: list[str] = []
    cols: list[tuple[str, ...]] = []
    for entry in splits:
        lines = _read_lines(base / entry["path"])
        if len(lines) != len(source):
            raise CorpusError(
                f"line-count mismatch: {entry['path']} has {len(lines)} lines, "
                f"{src['path']} has {len(source)}"
            )
        names.append(str(entry["name"]))
        cols.append(tuple(lines))
    return ParaphraseSet(
        source_lang=source_lang,
        target_lang=target_lang,
        source=tuple(source),
        split_names=tuple(names),
        splits=tuple(cols),
    )


def select_pivot(bitexts: list[Bitext]) -> LanguageCode:
    """Pick the language with the largest total pair overlap with the others.

    A bitext of n pairs contributes n to both of its languages' overlap
    totals. Ties break toward the lexicographically smallest code.
    """
    if not bitexts:
        raise CorpusError("cannot select a pivot from an empty bitext list")
    totals: dict[LanguageCode, int] = {}
    for bt in bitexts:
        totals[bt.lang_a] = totals.get(bt.lang_a, 0) + len(bt.pairs)
        totals[bt.lang_b] = totals.get(bt.lang_b, 0) + len(bt.pairs)
    if len(totals) < 2:
        raise CorpusError("bitexts must cover at least 2 languages")
    return max(sorted(totals), key=lambda lang: totals[lang])


def align_by_pivot(bitexts: list[Bitext], pivot: str) -> ParallelCorpus:
    """Intersect bitexts on exact NFC-equal pivot sentences.

    Output rows are the pivot sentences present in every bitext, ordered by
    first occurrence on the pivot side of the first bitext. A pivot sentence
    repeated within one bitext keeps only its first translation. Output
    languages are the pivot followed by the other languages in bitext order.
    """
    if not bitexts:
        raise CorpusError("cannot align an empty bitext list")
    pivot = LanguageCode(pivot)
    other_langs: list[LanguageCode] = []
    maps: list[dict[str, str]] = []  # pivot sentence -> translation, per bitext
    for bt in bitexts:
        if bt.lang_a == pivot:
            oriented = [(nfc(a), nfc(b)) for a, b in bt.pairs]
            other = bt.lang_b
        elif bt.lang_b == pivot:
            oriented = [(nfc(b), nfc(a)) for a, b in bt.pairs]
            other = bt.lang_a
        else:
            raise CorpusError(
                f"bitext {bt.lang_a}-{bt.lang_b} does not include pivot {pivot}"
            )
        m: dict[str, str] = {}
        for key, val in oriented:
            if key not in m:
                m[key] = val
        other_langs.append(other)
        maps.append(m)

    # Row order: first occurrence on the pivot side of the first bitext.
    key_order: list[str] = []
    seen: set[str] = set()
    pivot_side = 0 if bitexts[0].lang_a == pivot else 1
    for pair in bitexts[0].pairs:
        key = nfc(pair[pivot_side])
        if key not in seen:
            seen.add(key)
            key_order.append(key)

    rows = []
    for key in key_order:
        if all(key in m for m in maps):
            rows.append(tuple([key] + [m[key] for m in maps]))
    if not rows:
        raise CorpusError("pivot alignment produced zero rows")
    return ParallelCorpus(
        languages=tuple([pivot] + other_langs),
        rows=tuple(rows),
    )


def make_dev_split(
    corpus: ParallelCorpus, dev_fraction: float, seed: int
) -> tuple[ParallelCorpus, ParallelCorpus]:
    """Split rows into (train, dev) by seeded random sampling.

    dev size is round(dev_fraction * rows), round-half-to-even. Selection
    rule: row i gets the key ``stream_at(seed, i)`` (SplitMix64); the
    dev_count rows with the smallest keys form the dev set, ties broken by
    row index. Both halves keep original row order, so the split is row-wise
    and identical across all languages.
    """
    if not 0.0 < dev_fraction < 1.0:
        raise CorpusError(f"dev_fraction must be in (0, 1), got {dev_fraction}")
    n = corpus.n_rows
    n_dev = round(dev_fraction * n)
    if n_dev == 0:
        raise CorpusError(f"dev size rounds to 0 rows (fraction {dev_fraction} of {n})")
    if n_dev == n:
        raise CorpusError(f"dev size rounds to all {n} rows (fraction {dev_fraction})")
    keyed = sorted(range(n), key=lambda i: (stream_at(seed, i), i))
    dev_idx = sorted(keyed[:n_dev])
    dev_set = set(dev_idx)
    train_rows = tuple(corpus.rows[i] for i in range(n) if i not in dev_set)
    dev_rows = tuple(corpus.rows[i] for i in dev_idx)
    return (
        ParallelCorpus(languages=corpus.languages, rows=train_rows),
        ParallelCorpus(languages=corpus.languages, rows=dev_rows),
    )


def save_corpus(corpus: ParallelCorpus, out_dir: str | Path) -> Path:
    """Write one text file per language plus manifest.json; returns manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for lang in corpus.languages:
        fname = f"{lang}.txt"
        (out / fname).write_text(
            "".join(line + "\n" for line in corpus.column(lang)), encoding="utf-8"
        )
        entries.append({"code": str(lang), "path": fname})
    manifest = out / "manifest.json"
    manifest.write_text(
        json.dumps({"languages": entries}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return manifest
