"""Generate the bundled synthetic fixtures.

Writes three corpora under fixtures/ (all text deterministic, seeded through
the package PRNG, so reruns reproduce the files byte for byte):

  micro/       20 rows, eng+deu, tiny word inventory (< 50 types incl.
               bos/eos) for brute-force oracle checks at order 3.
  train/       400 rows, eng+deu, Zipf-weighted common words plus a thin
               sprinkle of rare words; the training corpus for the
               desk-scale run.
  paraphrase/  200 rows: eng source plus four deu paraphrase splits. The
               splits draw difficulty (rare-word insertions) independently
               per variant, and the source sits a controlled margin above
               the split means, which produces the target shape: a mixed
               sample-level verdict, split-level consistency on the
               original columns, and inconsistency after row-wise sorting.

The script ends by training the actual models and checking that shape,
printing the achieved numbers; it fails loudly if the fixture drifts.

Run from the repository root:  python3 scripts/gen_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from parcomp.consistency import Verdict, run_consistency
from parcomp.corpus import LanguageCode
from parcomp.metrics import Metric
from parcomp.ngram import score_sequence, train_ngram
from parcomp.prng import SplitMix64
from parcomp.records import ScoreSet
from parcomp.tokenizer import encode, train_bpe

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

# two synthetic "languages" distinguished by syllable inventory
ENG_CONSONANTS = "bdkmnpst"
ENG_VOWELS = "aeio"
DEU_CONSONANTS = "fghlrvwz"
DEU_VOWELS = "aeiuy"

TRAIN_ROWS = 400
PARA_ROWS = 200
N_SPLITS = 4

COMMON_WORDS = 40
RARE_WORDS = 250
TRAIN_RARE_P = 0.02
SPLIT_RARE_P = 0.06
SOURCE_RARE_P = 0.10
SWAP_P = 0.25

VOCAB_SIZE = 500
ORDER = 3


def make_words(rng: SplitMix64, n: int, consonants: str, vowels: str) -> list[str]:
    words: list[str] = []
    seen = set()
    while len(words) < n:
        syllables = 2 + rng.next_below(2)
        w = "".join(
            consonants[rng.next_below(len(consonants))] + vowels[rng.next_below(len(vowels))]
            for _ in range(syllables)
        )
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def zipf_cumulative(n: int) -> list[float]:
    weights = [1.0 / (k + 2) for k in range(n)]
    total = sum(weights)
    acc, out = 0.0, []
    for w in weights:
        acc += w / total
        out.append(acc)
    return out


def pick_zipf(rng: SplitMix64, words: list[str], cum: list[float]) -> str:
    x = rng.next_float()
    for word, edge in zip(words, cum):
        if x < edge:
            return word
    return words[-1]


class Lexicon:
    def __init__(self, rng: SplitMix64, consonants: str, vowels: str):
        self.common = make_words(rng, COMMON_WORDS, consonants, vowels)
        pool = make_words(rng, COMMON_WORDS + RARE_WORDS, consonants, vowels)
        self.rare = [w for w in pool if w not in set(self.common)][:RARE_WORDS]
        self.cum = zipf_cumulative(COMMON_WORDS)

    def common_word(self, rng: SplitMix64) -> str:
        return pick_zipf(rng, self.common, self.cum)

    def rare_word(self, rng: SplitMix64) -> str:
        return self.rare[rng.next_below(len(self.rare))]

    def token(self, rng: SplitMix64, rare_p: float) -> str:
        if rng.next_float() < rare_p:
            return self.rare_word(rng)
        return self.common_word(rng)


def sentence(rng: SplitMix64, lex: Lexicon, rare_p: float, min_len=6, max_len=12) -> str:
    length = min_len + rng.next_below(max_len - min_len + 1)
    return " ".join(lex.token(rng, rare_p) for _ in range(length))


def write_lines(path: Path, lines: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(l + "\n" for l in lines), encoding="utf-8")


def write_corpus_manifest(path: Path, entries: list[tuple[str, str]]) -> None:
    doc = {"languages": [{"code": c, "path": p} for c, p in entries]}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def gen_micro(eng: Lexicon, deu: Lexicon) -> None:
    rng = SplitMix64(101)
    # tiny inventories: first 12 common words of each language only
    eng_small, deu_small = eng.common[:12], deu.common[:12]
    cum = zipf_cumulative(12)
    rows_e, rows_d = [], []
    for _ in range(20):
        length = 4 + rng.next_below(4)
        rows_e.append(" ".join(pick_zipf(rng, eng_small, cum) for _ in range(length)))
        rows_d.append(" ".join(pick_zipf(rng, deu_small, cum) for _ in range(length)))
    types = set(w for r in rows_e + rows_d for w in r.split())
    assert len(types) + 2 <= 50, f"micro vocabulary too large: {len(types)} types"
    out = FIXTURES / "micro"
    write_lines(out / "eng.txt", rows_e)
    write_lines(out / "deu.txt", rows_d)
    write_corpus_manifest(out / "manifest.json", [("eng", "eng.txt"), ("deu", "deu.txt")])
    print(f"micro: 20 rows, {len(types)} word types")


def gen_train(eng: Lexicon, deu: Lexicon) -> tuple[list[str], list[str]]:
    rng = SplitMix64(202)
    rows_e = [sentence(rng, eng, TRAIN_RARE_P) for _ in range(TRAIN_ROWS)]
    rows_d = [sentence(rng, deu, TRAIN_RARE_P) for _ in range(TRAIN_ROWS)]
    out = FIXTURES / "train"
    write_lines(out / "eng.txt", rows_e)
    write_lines(out / "deu.txt", rows_d)
    write_corpus_manifest(out / "manifest.json", [("eng", "eng.txt"), ("deu", "deu.txt")])
    print(f"train: {TRAIN_ROWS} rows per language")
    return rows_e, rows_d


def paraphrase_variants(rng: SplitMix64, deu: Lexicon, length: int) -> list[str]:
    """One row: k variants sharing a base wording, difficulty drawn iid."""
    base = [deu.common_word(rng) for _ in range(length)]
    variants = []
    for _ in range(N_SPLITS):
        toks = []
        for w in base:
            if rng.next_float() < SWAP_P:
                w = deu.common_word(rng)
            if rng.next_float() < SPLIT_RARE_P:
                w = deu.rare_word(rng)
            toks.append(w)
        variants.append(" ".join(toks))
    return variants


def gen_paraphrase(eng: Lexicon, deu: Lexicon) -> tuple[list[str], list[list[str]]]:
    rng = SplitMix64(303)
    source, splits = [], [[] for _ in range(N_SPLITS)]
    for _ in range(PARA_ROWS):
        length = 8 + rng.next_below(5)
        source.append(" ".join(eng.token(rng, SOURCE_RARE_P) for _ in range(length)))
        for col, variant in zip(splits, paraphrase_variants(rng, deu, length)):
            col.append(variant)
    out = FIXTURES / "paraphrase"
    write_lines(out / "eng.txt", source)
    write_corpus_manifest(out / "src_manifest.json", [("eng", "eng.txt")])
    split_entries = []
    for j, col in enumerate(splits, start=1):
        write_lines(out / f"de{j}.txt", col)
        write_corpus_manifest(out / f"split{j}_manifest.json", [("deu", f"de{j}.txt")])
        split_entries.append({"name": f"DE{j}", "path": f"de{j}.txt"})
    (out / "paraphrase.json").write_text(
        json.dumps(
            {
                "source": {"code": "eng", "path": "eng.txt"},
                "target_code": "deu",
                "splits": split_entries,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"paraphrase: {PARA_ROWS} rows, {N_SPLITS} splits")
    return source, splits


def score_column(model, tok, lines, lang):
    seqs = tuple(
        score_sequence(model, tok, line, lang=lang, sample_id=i)
        for i, line in enumerate(lines)
    )
    return ScoreSet(LanguageCode(lang), seqs)


def verify_shape(train_e, train_d, source, splits) -> None:
    """Train the real models and check the target consistency shape."""
    tok_e = train_bpe(train_e, VOCAB_SIZE)
    tok_d = train_bpe(train_d, VOCAB_SIZE)
    lm_e = train_ngram([encode(tok_e, l) for l in train_e], ORDER, tok_e.vocab_size)
    lm_d = train_ngram([encode(tok_d, l) for l in train_d], ORDER, tok_d.vocab_size)

    src_scores = score_column(lm_e, tok_e, source, "eng")
    split_scores = [score_column(lm_d, tok_d, col, "deu") for col in splits]
    report = run_consistency(
        src_scores, split_scores, Metric.NLL, split_names=[f"DE{j+1}" for j in range(N_SPLITS)]
    )

    orig, sort = report.splits_original, report.splits_sorted
    print(f"  rate            {report.rate:.3f}")
    print(f"  source mean     {orig.source_mean:.4f}")
    print(f"  original means  {[round(m, 4) for m in orig.split_means]}")
    print(f"  sorted means    {[round(m, 4) for m in sort.split_means]}")
    print(f"  original verdict {orig.verdict.value}, sorted verdict {sort.verdict.value}")
    problems = []
    if not 0 < report.rate < 1:
        problems.append(f"rate {report.rate} not in (0,1)")
    if orig.verdict != Verdict.CONSISTENT:
        problems.append("original splits not consistent")
    if sort.verdict != Verdict.INCONSISTENT:
        problems.append("sorted splits not inconsistent")
    if problems:
        sys.exit("fixture shape check failed: " + "; ".join(problems))
    print("shape check passed")


def main() -> None:
    eng = Lexicon(SplitMix64(1), ENG_CONSONANTS, ENG_VOWELS)
    deu = Lexicon(SplitMix64(2), DEU_CONSONANTS, DEU_VOWELS)
    gen_micro(eng, deu)
    train_e, train_d = gen_train(eng, deu)
    source, splits = gen_paraphrase(eng, deu)
    verify_shape(train_e, train_d, source, splits)


if __name__ == "__main__":
    main()
