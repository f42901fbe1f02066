"""Command line front end; flags mirror the ExportJob fields.

Exit codes: 0 success, 1 export error (message on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from logprob_exporter.export import ExportError, ExportJob, export_model_scores


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="logprob-export",
        description="score a corpus with a causal LM and emit JSONL score records",
    )
    p.add_argument("--model", required=True, help="model path or identifier")
    p.add_argument("--corpus", required=True, help="text file, one sentence per line")
    p.add_argument("--lang", required=True, help="lowercase 3-letter language code")
    p.add_argument("--out", required=True, help="output JSONL path")
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument(
        "--no-ranks", action="store_true",
        help="skip rank computation (full-vocabulary sort per position)",
    )
    p.add_argument(
        "--no-bos", action="store_true",
        help="do not prepend the tokenizer's bos token as context",
    )
    p.add_argument(
        "--no-eos", action="store_true",
        help="do not append and score the tokenizer's eos token",
    )
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(
            model=args.model,
            corpus=Path(args.corpus),
            lang=args.lang,
            out=Path(args.out),
            batch_size=args.batch_size,
            with_ranks=not args.no_ranks,
            include_bos=not args.no_bos,
            include_eos=not args.no_eos,
        )
        n = export_model_scores(job)
    except ExportError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {n} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
