"""Command line entry point: rxemb-export."""

import argparse
import sys

import torch

from rxemb.export import ExportJob, run_job


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rxemb-export",
        description="Export sentence and drug-span vectors from a transformer "
                    "encoder to an EMB1 file.",
    )
    parser.add_argument("--dataset", required=True, help="JSONL sentence-pair dataset")
    parser.add_argument("--lexicon", required=True, help="drug lexicon, one name per line")
    parser.add_argument("--model", required=True,
                        help="encoder model id or path; 'reference' builds the "
                             "miniature in-process encoder (tests/smoke runs)")
    parser.add_argument("--out", required=True, help="output EMB1 path")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--device", default=None, help="torch device hint, e.g. cpu")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    torch.set_num_threads(1)  # single-threaded reductions keep reruns bit-stable
    try:
        summary = run_job(ExportJob(
            dataset=args.dataset,
            lexicon=args.lexicon,
            encoder_id=args.model,
            out=args.out,
            batch_size=args.batch_size,
            device=args.device,
        ))
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {summary.out}: dim={summary.dim} sentences={summary.n_sentences} "
        f"drug-spans={summary.n_spans} fallbacks={summary.n_fallbacks}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
