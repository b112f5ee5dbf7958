"""Seeded k-means (k-means++ start, Lloyd iterations) used to initialize prototypes.

Hand-rolled rather than delegated to a library because the trainer's contracts
need per-iteration inertia monotonicity checks and a deterministic
empty-cluster repair rule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError, NumericalError


@dataclass
class KMeansResult:
    centers: np.ndarray          # (k, d)
    assignment: np.ndarray       # (n,) point index -> center index
    inertia: float
    n_iter: int
    inertia_history: list = None  # per-iteration inertia after each assignment


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # (n, k) squared euclidean distances; direct differences so coincident
    # points give exactly zero
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _plusplus_start(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = points[first]
    closest = _sq_dists(points, centers[:1])[:, 0]
    for j in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # all remaining points coincide with chosen centers
            centers[j] = points[int(rng.integers(n))]
            continue
        probs = closest / total
        pick = int(rng.choice(n, p=probs))
        centers[j] = points[pick]
        closest = np.minimum(closest, _sq_dists(points, centers[j:j + 1])[:, 0])
    return centers


def kmeans(points, k: int, seed: int = 0, max_iter: int = 100, tol: float = 1e-6) -> KMeansResult:
    """Lloyd's algorithm from a seeded k-means++ start.

    Terminates when the largest center movement drops below tol or after
    max_iter iterations.  Deterministic given (points, k, seed, max_iter, tol).
    Empty clusters are repaired by reassigning the farthest point of the
    largest cluster.  If there are fewer distinct points than k, returns one
    center per distinct point (fewer than k) with a warning.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise DataError("kmeans: need a nonempty (n, d) array of points")
    n = pts.shape[0]
    if k < 1:
        raise DataError(f"kmeans: k must be >= 1, got {k}")
    if n < k:
        raise DataError(f"kmeans: {n} points but k={k}")

    distinct = np.unique(pts, axis=0)
    if distinct.shape[0] < k:
        warnings.warn(f"kmeans: only {distinct.shape[0]} distinct points for k={k}; "
                      "returning the distinct points as centers")
        d2 = _sq_dists(pts, distinct)
        assignment = np.argmin(d2, axis=1)
        inertia = float(d2[np.arange(n), assignment].sum())
        return KMeansResult(centers=distinct, assignment=assignment,
                            inertia=inertia, n_iter=0, inertia_history=[inertia])

    rng = np.random.default_rng(seed)
    centers = _plusplus_start(pts, k, rng)

    prev_inertia = np.inf
    history = []
    assignment = np.zeros(n, dtype=np.int64)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = _sq_dists(pts, centers)
        assignment = np.argmin(d2, axis=1)

        # deterministic empty-cluster repair: move the farthest point of the
        # largest cluster into the empty slot
        for j in range(k):
            if not np.any(assignment == j):
                counts = np.bincount(assignment, minlength=k)
                donor = int(np.argmax(counts))
                members = np.flatnonzero(assignment == donor)
                far = members[int(np.argmax(d2[members, donor]))]
                assignment[far] = j
                centers[j] = pts[far]
        d2 = _sq_dists(pts, centers)

        inertia = float(d2[np.arange(n), assignment].sum())
        if inertia > prev_inertia * (1.0 + 1e-12) + 1e-12:
            raise NumericalError(f"kmeans: inertia increased at iteration {n_iter} "
                                 f"({prev_inertia} -> {inertia})")
        prev_inertia = inertia
        history.append(inertia)

        new_centers = centers.copy()
        for j in range(k):
            members = assignment == j
            if np.any(members):
                new_centers[j] = pts[members].mean(axis=0)
        shift = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        if shift < tol:
            break

    d2 = _sq_dists(pts, centers)
    assignment = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(n), assignment].sum())
    history.append(inertia)
    return KMeansResult(centers=centers, assignment=assignment,
                        inertia=inertia, n_iter=n_iter, inertia_history=history)


def init_semantic_prototypes(ds: Dataset, k_per_class: int, seed: int):
    """Cluster each sarcasm class's semantic embeddings; returns (vectors, classes).

    vectors is (2*k_per_class, d_s); classes holds the sarcasm class of each
    prototype, class 0 rows first.
    """
    y = ds.labels()
    vectors, classes = [], []
    for c in (0, 1):
        members = np.flatnonzero(y == c)
        if len(members) < k_per_class:
            raise DataError(f"class {c} has {len(members)} records, "
                            f"need at least k_per_class={k_per_class}")
        pts = ds.semantic_matrix()[members]
        result = kmeans(pts, k_per_class, seed=seed + c)
        vectors.append(result.centers)
        classes.extend([c] * result.centers.shape[0])
    return np.vstack(vectors), np.asarray(classes, dtype=np.int64)


def init_sentiment_prototypes(ds: Dataset, k_per_polarity: int, seed: int):
    """Cluster whole-text sentiment embeddings of non-sarcastic records per polarity.

    Only y == 0 records participate, matching the rule that sentiment
    prototypes are seeded from undivided non-sarcastic text.  Returns
    (vectors, polarities) with negative-polarity rows first.
    """
    vectors, polarities = [], []
    for polarity in (0, 1):
        members = [r for r in ds.records if r.y == 0 and r.z_full == polarity]
        if len(members) < k_per_polarity:
            raise DataError(f"polarity {polarity} has {len(members)} non-sarcastic "
                            f"records, need at least k_per_polarity={k_per_polarity}")
        missing = [r.id for r in members if r.e_st_full is None]
        if missing:
            raise DataError(f"records lacking e_st_full cannot seed sentiment "
                            f"prototypes: {missing[:5]}")
        pts = np.asarray([r.e_st_full for r in members], dtype=np.float64)
        result = kmeans(pts, k_per_polarity, seed=seed + 10 + polarity)
        vectors.append(result.centers)
        polarities.extend([polarity] * result.centers.shape[0])
    return np.vstack(vectors), np.asarray(polarities, dtype=np.int64)
