#!/usr/bin/env python3
"""Incongruity-loss ablation on the disagreement-only planted task.

Trains paired runs (identical config, incongruity weight on vs off) over a
set of seeds and prints the per-seed accuracies and the median gap.

Usage: python scripts/run_incongruity_ablation.py [n_seeds]
"""

import sys

import numpy as np

from protosarc.data import split_folds
from protosarc.explain import evaluate
from protosarc.losses import LossWeights
from protosarc.synthetic import incongruity_only_dataset
from protosarc.training import TrainConfig, train


def run_arm(seed, lambda3):
    ds = incongruity_only_dataset(2000, seed=seed, explicit_positive_prior=0.62)
    plan = split_folds(ds, 5, seed=seed)
    test_ds = ds.subset(plan.fold_indices(0))
    pool = ds.subset(plan.other_indices(0))
    inner = split_folds(pool, 4, seed=seed + 1)
    val_ds = pool.subset(inner.fold_indices(0))
    fit_ds = pool.subset(inner.other_indices(0))
    weights = LossWeights(lambda1=0.0, lambda2=0.0, lambda3=lambda3, lambda4=3e-3)
    cfg = TrainConfig(seed=seed, lr=1e-3, batch_size=50, max_epochs=300,
                      patience=4, k_per_class=4, k_per_polarity=2,
                      hidden=16, weights=weights)
    params, hist = train(fit_ds, val_ds, cfg)
    return evaluate(params, test_ds).accuracy, hist.stopped_epoch


def main():
    n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 5
    print(f"{'seed':>4}  {'with':>6}  {'without':>7}  {'gap':>7}")
    gaps = []
    for seed in range(n_seeds):
        acc_with, stop_w = run_arm(seed, 0.5)
        acc_without, stop_wo = run_arm(seed, 0.0)
        gaps.append(acc_with - acc_without)
        print(f"{seed:>4}  {acc_with:.3f}  {acc_without:>7.3f}  {gaps[-1]:>+7.3f}"
              f"   (stopped {stop_w} vs {stop_wo})")
    print(f"\nmedian gap over {n_seeds} seeds: {np.median(gaps):+.3f}")


if __name__ == "__main__":
    main()
