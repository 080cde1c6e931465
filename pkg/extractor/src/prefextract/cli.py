"""Command line entry point.

    prefextract run --corpus corpus.jsonl --job job.json \
        --out dataset.jsonl --rejects rejects.jsonl

Exit codes: 0 success (possibly with per-record rejects), 1 configuration
error, 3 I/O error.
"""

import argparse
import sys

from .core import extract_logprobs
from .errors import JobConfigError
from .job import load_job

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prefextract", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="score a corpus against the configured endpoints")
    p.add_argument("--corpus", required=True)
    p.add_argument("--job", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rejects", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = load_job(args.job)
        result = extract_logprobs(args.corpus, job, args.out, args.rejects)
    except JobConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"emitted {result.emitted} records, rejected {result.rejected}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
