#!/usr/bin/env python3
"""End-to-end demo on the planted Gaussian task.

Trains at library defaults, evaluates on the held-out 20%, projects the
prototypes onto training records, and prints one explanation.
"""

import time

from protosarc.data import split_folds
from protosarc.explain import evaluate, explain, project_prototypes
from protosarc.synthetic import gaussian_clusters_dataset
from protosarc.training import TrainConfig, train


def main():
    t0 = time.monotonic()
    ds = gaussian_clusters_dataset(400, seed=7)
    plan = split_folds(ds, 5, seed=7)
    test_ds = ds.subset(plan.fold_indices(0))
    pool = ds.subset(plan.other_indices(0))
    inner = split_folds(pool, 10, seed=8)
    val_ds = pool.subset(inner.fold_indices(0))
    fit_ds = pool.subset(inner.other_indices(0))

    params, hist = train(fit_ds, val_ds, TrainConfig(seed=3))
    metrics = evaluate(params, test_ds)
    print(f"trained {hist.stopped_epoch} epochs (best {hist.best_epoch}) "
          f"in {time.monotonic() - t0:.1f}s")
    print(f"test metrics: {metrics.to_dict()}")

    model = project_prototypes(params, fit_ds, seed=0)
    print()
    print(explain(model, test_ds.records[0], top_k=3).to_text())


if __name__ == "__main__":
    main()
