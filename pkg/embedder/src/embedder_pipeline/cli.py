"""`embed` command: raw dataset file(s) -> embedding JSONL."""

from __future__ import annotations

import argparse
import sys

from .encoders import EncoderError
from .ingest import DATASETS, ingest
from .pipeline import embed_to_file


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embed",
                                     description="convert raw sarcasm datasets "
                                                 "into embedding JSONL")
    parser.add_argument("--dataset", required=True, choices=DATASETS)
    parser.add_argument("--in", dest="in_path", required=True,
                        help="raw dataset file (or directory for sarc)")
    parser.add_argument("--out", required=True, help="output JSONL path")
    parser.add_argument("--semantic-encoder", default="hash-semantic-64")
    parser.add_argument("--sentiment-encoder", default="hash-sentiment-32")
    parser.add_argument("--lexicon", default="builtin")
    parser.add_argument("--no-ancestor", action="store_true",
                        help="ignore ancestor posts in the semantic input")
    parser.add_argument("--split", default="unnamed", help="split name for the manifest")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        samples = ingest(args.dataset, args.in_path)
    except (FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    try:
        manifest = embed_to_file(
            samples, args.out,
            semantic_encoder_id=args.semantic_encoder,
            sentiment_encoder_id=args.sentiment_encoder,
            lexicon_id=args.lexicon,
            use_ancestor=not args.no_ancestor,
            dataset_name=args.dataset,
            split_name=args.split,
        )
    except EncoderError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {len(samples)} records to {args.out} "
          f"(d_s={manifest['d_s']}, d_m={manifest['d_m']})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
