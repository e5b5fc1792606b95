"""Command line for the bundle extractor."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .extract import ExtractionConfig, export_table1_fixtures, extract


def _parse_sam(spec: str) -> tuple[int, int]:
    try:
        layer, head = spec.split(":")
        return int(layer), int(head)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LAYER:HEAD, got {spec!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="samextract", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="extract bundles from a sentence file (one sentence per line)")
    run.add_argument("--model", default="bert-base-uncased", help="model id or local path")
    run.add_argument("--sentences", required=True, help="UTF-8 text file, one sentence per line")
    run.add_argument("--outdir", required=True)
    run.add_argument("--layers", type=int, nargs="*", default=[0, 12], help="embedding layers (0 = embedding output)")
    run.add_argument("--sams", type=_parse_sam, nargs="*", default=[(6, 1)], metavar="LAYER:HEAD",
                     help="attention sources, zero-based (default 6:1)")
    run.add_argument("--stopwords", default="english-v1", help="vendored stopword list id")
    run.add_argument("--no-lowercase", action="store_true")

    fix = sub.add_parser("table1-fixtures", help="export the three illustration sentences and their two pairs")
    fix.add_argument("--model", default="bert-base-uncased")
    fix.add_argument("--outdir", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            lines = Path(args.sentences).read_text(encoding="utf-8").splitlines()
            sentences = [(f"s{i:04d}", line.strip()) for i, line in enumerate(lines) if line.strip()]
            config = ExtractionConfig(
                model=args.model,
                layers=tuple(args.layers),
                sams=tuple(args.sams),
                stopword_list=args.stopwords,
                lowercase=not args.no_lowercase,
                output_dir=args.outdir,
            )
            result = extract(sentences, config)
        else:
            result = export_table1_fixtures(args.outdir, model=args.model)
        for name in result.files:
            print(name)
        if result.skipped:
            print(f"skipped: {', '.join(result.skipped)}", file=sys.stderr)
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
