#!/usr/bin/env python3
"""Generate a synthetic annotation corpus from a config's confusion matrix.

Useful for exercising the estimate-cm command end to end: the emitted CSV
can be fed back through `feedsim estimate-cm` and the recovered matrix
compared against the generating one.

Usage:
    python scripts/make_annotations.py --config configs/amt10.json \
        --records 100000 --out annotations.csv
"""

import argparse
import sys

import feedsim as fs
from feedsim.ingest import synthesize_records, write_annotation_csv


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default="configs/amt10.json")
    parser.add_argument("--records", type=int, default=100_000)
    parser.add_argument("--tasks", type=int, default=300)
    parser.add_argument("--annotators", type=int, default=40)
    parser.add_argument("--seed", type=int, default=fs.constants.DEFAULT_SEED)
    parser.add_argument("--plant-lurker", action="store_true",
                        help="add one annotator below the participation bar")
    parser.add_argument("--out", required=True)
    args = parser.parse_args()

    config = fs.load_config(args.config)
    records = synthesize_records(
        config.confusion,
        num_records=args.records,
        num_tasks=args.tasks,
        num_annotators=args.annotators,
        seed=args.seed,
        low_participation_annotator="lurker" if args.plant_lurker else None,
    )
    write_annotation_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
