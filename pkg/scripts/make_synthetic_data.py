#!/usr/bin/env python3
"""Write planted synthetic embedding datasets as JSONL files for the CLI.

Usage: python scripts/make_synthetic_data.py [outdir]
"""

import sys
from pathlib import Path

from protosarc.data import split_folds, write_dataset
from protosarc.synthetic import gaussian_clusters_dataset, incongruity_only_dataset


def main():
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data")
    outdir.mkdir(parents=True, exist_ok=True)

    ds = gaussian_clusters_dataset(400, seed=7)
    plan = split_folds(ds, 5, seed=7)
    write_dataset(ds.subset(plan.other_indices(0)), outdir / "planted_train.jsonl")
    write_dataset(ds.subset(plan.fold_indices(0)), outdir / "planted_test.jsonl")

    inco = incongruity_only_dataset(2000, seed=0)
    plan = split_folds(inco, 5, seed=0)
    write_dataset(inco.subset(plan.other_indices(0)), outdir / "incongruity_train.jsonl")
    write_dataset(inco.subset(plan.fold_indices(0)), outdir / "incongruity_test.jsonl")

    for f in sorted(outdir.glob("*.jsonl")):
        print(f"wrote {f}")


if __name__ == "__main__":
    main()
