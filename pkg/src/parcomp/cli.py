"""Command-line pipeline: align, split, train-tokenizer, train-lm, score,
metrics, consistency, report, plus a pipeline meta-command.

Every invocation runs exactly one stage, reads and writes only the files
named by its flags, and is byte-deterministic given identical inputs,
flags, and seed. Each run also writes a config echo: a one-stage pipeline
manifest holding the effective argument list (defaults materialized), so

    parcomp pipeline --manifest <echo file>

reproduces the artifact. Echoes land at <out>.config.json next to a file
output, or at config.json inside a directory output.

Exit status: 0 success, 1 validation error (bad data, bad files),
2 usage error (unknown flags, missing required arguments).

The only randomized stage is split; its seed comes from --seed, falling
back to the PARCOMP_SEED environment variable, then to 0.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from parcomp.consistency import run_consistency, write_consistency_json, write_figure_json
from parcomp.corpus import (
    LanguageCode,
    align_by_pivot,
    load_bitexts,
    load_corpus,
    make_dev_split,
    save_corpus,
    select_pivot,
)
from parcomp.errors import CorpusError, MetricError, ParcompError
from parcomp.metrics import (
    Metric,
    MetricReport,
    MetricRow,
    build_report,
    write_report_csv,
    write_report_json,
)
from parcomp.ngram import load_ngram, save_ngram, score_sequence, train_checkpoints
from parcomp.records import ScoreSet, read_scores, write_scores
from parcomp.tokenizer import encode, load_tokenizer, save_tokenizer, train_bpe

DEFAULT_DEV_FRACTION = 0.10
DEFAULT_ORDER = 3
DEFAULT_CHECKPOINT_EVERY = 1000
DEFAULT_VOCAB_MONO = 32000
DEFAULT_VOCAB_MULTI = 150000

_CONSISTENCY_METRIC_NAMES = ("nll", "bpc", "mrr", "ppl")


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("PARCOMP_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise CorpusError(f"PARCOMP_SEED must be an integer, got {env!r}") from None


def _write_echo(echo_path: Path, command: str, args: list) -> None:
    doc = {"stages": [{"command": command, "args": [str(a) for a in args]}]}
    echo_path.parent.mkdir(parents=True, exist_ok=True)
    echo_path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _echo_for_file(out: str | Path) -> Path:
    return Path(str(out) + ".config.json")


def _echo_for_dir(out_dir: str | Path) -> Path:
    return Path(out_dir) / "config.json"


def cmd_align(args) -> int:
    bitexts = load_bitexts(args.bitexts)
    pivot = args.pivot if args.pivot else str(select_pivot(bitexts))
    corpus = align_by_pivot(bitexts, pivot)
    save_corpus(corpus, args.out_dir)
    _write_echo(
        _echo_for_dir(args.out_dir),
        "align",
        ["--bitexts", args.bitexts, "--pivot", pivot, "--out-dir", args.out_dir],
    )
    return 0


def cmd_split(args) -> int:
    corpus = load_corpus(args.corpus)
    seed = _resolve_seed(args.seed)
    train, dev = make_dev_split(corpus, args.dev_fraction, seed)
    out = Path(args.out_dir)
    save_corpus(train, out / "train")
    save_corpus(dev, out / "dev")
    _write_echo(
        _echo_for_dir(out),
        "split",
        [
            "--corpus", args.corpus,
            "--dev-fraction", repr(args.dev_fraction),
            "--seed", seed,
            "--out-dir", args.out_dir,
        ],
    )
    return 0


def cmd_train_tokenizer(args) -> int:
    corpus = load_corpus(args.corpus)
    langs = args.lang if args.lang else [str(c) for c in corpus.languages]
    vocab_size = args.vocab_size
    if vocab_size is None:
        vocab_size = DEFAULT_VOCAB_MONO if len(langs) == 1 else DEFAULT_VOCAB_MULTI
    lines: list[str] = []
    for lang in langs:
        lines.extend(corpus.column(lang))
    model = train_bpe(lines, vocab_size)
    save_tokenizer(model, args.out)
    echo_args = ["--corpus", args.corpus]
    for lang in langs:
        echo_args += ["--lang", lang]
    echo_args += ["--vocab-size", vocab_size, "--out", args.out]
    _write_echo(_echo_for_file(args.out), "train-tokenizer", echo_args)
    return 0


def cmd_train_lm(args) -> int:
    corpus = load_corpus(args.corpus)
    tok = load_tokenizer(args.tokenizer)
    token_lines = [encode(tok, line) for line in corpus.column(args.lang)]
    series = train_checkpoints(
        token_lines, args.order, args.checkpoint_every, tok.vocab_size
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for lines_consumed, model in series.checkpoints:
        fname = f"model-{lines_consumed:08d}.json"
        save_ngram(model, out / fname)
        entries.append({"lines": lines_consumed, "path": fname})
    (out / "series.json").write_text(
        json.dumps({"checkpoints": entries}, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    _write_echo(
        _echo_for_dir(out),
        "train-lm",
        [
            "--corpus", args.corpus,
            "--lang", args.lang,
            "--tokenizer", args.tokenizer,
            "--order", args.order,
            "--checkpoint-every", args.checkpoint_every,
            "--out-dir", args.out_dir,
        ],
    )
    return 0


def cmd_score(args) -> int:
    corpus = load_corpus(args.corpus)
    tok = load_tokenizer(args.tokenizer)
    model = load_ngram(args.model)
    lines = corpus.column(args.lang)

    def score_one(i_line):
        i, line = i_line
        return score_sequence(model, tok, line, lang=args.lang, sample_id=i)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            seqs = list(pool.map(score_one, enumerate(lines)))
    else:
        seqs = [score_one(pair) for pair in enumerate(lines)]
    score_set = ScoreSet(LanguageCode(args.lang), tuple(seqs))
    write_scores(score_set, args.out)
    _write_echo(
        _echo_for_file(args.out),
        "score",
        [
            "--model", args.model,
            "--tokenizer", args.tokenizer,
            "--corpus", args.corpus,
            "--lang", args.lang,
            "--jobs", args.jobs,
            "--out", args.out,
        ],
    )
    return 0


def cmd_metrics(args) -> int:
    sets = {}
    for path in args.scores:
        score_set = read_scores(path, strict=not args.lenient)
        key = (args.checkpoint, str(score_set.lang))
        if key in sets:
            raise MetricError(f"two score files for checkpoint {key[0]}, lang {key[1]}")
        sets[key] = score_set
    report = build_report(sets, micro=args.micro, baseline_lang=args.baseline_lang)
    write_report_csv(report, args.out)
    if args.json:
        write_report_json(report, args.json)
    echo_args = []
    for path in args.scores:
        echo_args += ["--scores", path]
    echo_args += ["--checkpoint", args.checkpoint, "--baseline-lang", args.baseline_lang]
    if args.micro:
        echo_args.append("--micro")
    if args.lenient:
        echo_args.append("--lenient")
    echo_args += ["--out", args.out]
    if args.json:
        echo_args += ["--json", args.json]
    _write_echo(_echo_for_file(args.out), "metrics", echo_args)
    return 0


def cmd_consistency(args) -> int:
    if len(args.paraphrase) < 2:
        raise MetricError(f"needs at least 2 --paraphrase files, got {len(args.paraphrase)}")
    strict = not args.lenient
    source = read_scores(args.source, strict=strict)
    paraphrases = [read_scores(p, strict=strict) for p in args.paraphrase]
    metric = Metric(args.metric.upper())
    split_names = args.split_name if args.split_name else None
    if split_names is not None and len(split_names) != len(args.paraphrase):
        raise MetricError(
            f"{len(split_names)} --split-name values for {len(args.paraphrase)} files"
        )
    report = run_consistency(
        source,
        paraphrases,
        metric,
        split_names=split_names,
        allow_ppl=args.include_ppl,
    )
    write_consistency_json(report, args.out)
    if args.figure_data:
        write_figure_json(report, args.figure_data)
    echo_args = ["--source", args.source]
    for p in args.paraphrase:
        echo_args += ["--paraphrase", p]
    for name in args.split_name or []:
        echo_args += ["--split-name", name]
    echo_args += ["--metric", args.metric]
    if args.include_ppl:
        echo_args.append("--include-ppl")
    if args.lenient:
        echo_args.append("--lenient")
    echo_args += ["--out", args.out]
    if args.figure_data:
        echo_args += ["--figure-data", args.figure_data]
    _write_echo(_echo_for_file(args.out), "consistency", echo_args)
    return 0


def _load_metrics_csv(path: str) -> list[MetricRow]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MetricError(f"metrics file not found: {path}") from None
    rows = []
    for raw in csv.DictReader(text.splitlines()):
        try:
            value = None if raw["value"] == "unavailable" else float(raw["value"])
            rows.append(
                MetricRow(
                    checkpoint=int(raw["checkpoint"]),
                    lang=raw["lang"],
                    metric=Metric(raw["metric"]),
                    value=value,
                    n_sentences=int(raw["n_sentences"]),
                )
            )
        except (KeyError, ValueError, TypeError) as e:
            raise MetricError(f"{path}: bad metrics row {raw}: {e}") from None
    return rows


def cmd_report(args) -> int:
    if not args.metrics and not args.consistency:
        raise MetricError("report needs at least one --metrics or --consistency input")
    rows: list[MetricRow] = []
    for path in args.metrics:
        rows.extend(_load_metrics_csv(path))
    merged = MetricReport(rows=tuple(rows))  # re-checks key uniqueness
    consistency_docs = []
    for path in args.consistency:
        try:
            consistency_docs.append(json.loads(Path(path).read_text(encoding="utf-8")))
        except FileNotFoundError:
            raise MetricError(f"consistency file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise MetricError(f"{path} is not valid JSON: {e}") from None
    doc = {
        "metrics": [
            {
                "checkpoint": r.checkpoint,
                "lang": r.lang,
                "metric": r.metric.value,
                "value": r.value,
                "n_sentences": r.n_sentences,
            }
            for r in merged.sorted_rows()
        ],
        "consistency": consistency_docs,
    }
    Path(args.out).write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    echo_args = []
    for path in args.metrics:
        echo_args += ["--metrics", path]
    for path in args.consistency:
        echo_args += ["--consistency", path]
    echo_args += ["--out", args.out]
    _write_echo(_echo_for_file(args.out), "report", echo_args)
    return 0


def cmd_pipeline(args) -> int:
    try:
        doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CorpusError(f"pipeline manifest not found: {args.manifest}") from None
    except json.JSONDecodeError as e:
        raise CorpusError(f"pipeline manifest is not valid JSON: {e}") from None
    stages = doc.get("stages")
    if not isinstance(stages, list) or not stages:
        raise CorpusError("pipeline manifest needs a non-empty 'stages' list")
    for i, stage in enumerate(stages):
        command = stage.get("command")
        stage_args = stage.get("args", [])
        if command == "pipeline":
            raise CorpusError(f"stage {i}: nested pipelines are not allowed")
        if not isinstance(command, str) or not isinstance(stage_args, list):
            raise CorpusError(f"stage {i}: needs 'command' string and 'args' list")
        status = _run([command] + [str(a) for a in stage_args])
        if status != 0:
            return status
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parcomp",
        description="Intrinsic LM metrics and paraphrase consistency over parallel corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="intersect bitexts into a multi-parallel corpus")
    p.add_argument("--bitexts", required=True, help="bitext manifest JSON")
    p.add_argument("--pivot", help="pivot language code (default: auto-select)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("split", help="seeded train/dev row split")
    p.add_argument("--corpus", required=True, help="corpus manifest JSON")
    p.add_argument("--dev-fraction", type=float, default=DEFAULT_DEV_FRACTION)
    p.add_argument("--seed", type=int, default=None, help="fallback: PARCOMP_SEED, then 0")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train-tokenizer", help="train byte-fallback BPE")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lang", action="append", help="restrict to language(s); default all")
    p.add_argument(
        "--vocab-size",
        type=int,
        default=None,
        help=f"default {DEFAULT_VOCAB_MONO} for one language, {DEFAULT_VOCAB_MULTI} for several",
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_tokenizer)

    p = sub.add_parser("train-lm", help="train checkpointed n-gram model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lang", required=True)
    p.add_argument("--tokenizer", required=True)
    p.add_argument("--order", type=int, default=DEFAULT_ORDER)
    p.add_argument("--checkpoint-every", type=int, default=DEFAULT_CHECKPOINT_EVERY)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train_lm)

    p = sub.add_parser("score", help="score a corpus column into JSONL records")
    p.add_argument("--model", required=True)
    p.add_argument("--tokenizer", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--lang", required=True)
    p.add_argument("--jobs", type=int, default=1, help="scoring threads; output identical")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("metrics", help="aggregate metrics from score files")
    p.add_argument("--scores", action="append", required=True)
    p.add_argument("--checkpoint", type=int, default=0, help="checkpoint label for rows")
    p.add_argument("--baseline-lang", default="eng")
    p.add_argument("--micro", action="store_true", help="token-weighted aggregation")
    p.add_argument("--lenient", action="store_true", help="ignore unknown record fields")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--json", help="also write a JSON mirror")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("consistency", help="paraphrase consistency analysis")
    p.add_argument("--source", required=True)
    p.add_argument("--paraphrase", action="append", required=True)
    p.add_argument("--split-name", action="append")
    p.add_argument("--metric", choices=_CONSISTENCY_METRIC_NAMES, required=True)
    p.add_argument(
        "--include-ppl",
        action="store_true",
        help="allow PPL despite identical sample verdicts to NLL",
    )
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--figure-data", help="also write per-sample series sorted by source")
    p.set_defaults(func=cmd_consistency)

    p = sub.add_parser("report", help="merge metrics CSVs and consistency JSONs")
    p.add_argument("--metrics", action="append", default=[])
    p.add_argument("--consistency", action="append", default=[])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline", help="run stages from a manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_pipeline)

    return parser


def _run(argv: list[str]) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def main(argv: list[str] | None = None) -> int:
    try:
        return _run(sys.argv[1:] if argv is None else argv)
    except ParcompError as e:
        print(f"error ({type(e).__name__}): {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
