"""Synthetic embedding datasets with planted structure, for tests and experiments.

Two planted tasks:

* gaussian_clusters_dataset: the sarcasm class is carried by the semantic
  vectors (two well-separated Gaussian clusters per class, centers 6 cluster
  sigmas apart); sentiment vectors are consistent with the polarity labels.

* incongruity_only_dataset: semantic vectors are class-independent noise and
  the class is a pure function of explicit/implicit polarity disagreement
  (y = 1 iff z_ep != z_ip).  Segment embeddings sit in two polarity blobs;
  the whole-text embeddings used for prototype initialization sit on the
  perpendicular bisector of those blobs, so freshly initialized sentiment
  prototypes carry no polarity contrast.  The explicit polarity prior is
  biased (default 0.75) because with a linear output head a perfectly
  symmetric disagreement task is unlearnable for every configuration.

Also provides random_instance(), a small random model + batch used by the
gradient checks.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, DatasetManifest, EmbeddingRecord
from .model import IncongruityHead, ModelParams, OutputHead, PrototypeBank


def _record(i, y, e_ct, e_ep, e_ip, e_full, z_ep, z_full, text=""):
    z_ip = z_ep if y == 0 else 1 - z_ep
    return EmbeddingRecord(
        id=f"syn-{i:05d}", text=text or f"synthetic sample {i}", ancestor=None,
        y=int(y), e_ct=e_ct, e_st_ep=e_ep, e_st_ip=e_ip, e_st_full=e_full,
        z_ep=int(z_ep), z_ip=int(z_ip), z_full=int(z_full),
    )


def gaussian_clusters_dataset(n: int, seed: int = 0, d_s: int = 16, d_m: int = 8,
                              cluster_sigma: float = 0.25,
                              dataset_name: str = "planted-gaussian") -> Dataset:
    """Class-separable planted task: 2 semantic clusters per class, 6 sigma apart."""
    rng = np.random.default_rng(seed)
    sep = 6.0 * cluster_sigma
    centers = np.zeros((4, d_s))
    centers[1, 0] = sep
    centers[2, 1] = sep
    centers[3, 0] = sep
    centers[3, 1] = sep
    # keep every center away from the origin so prototype cosines stay stable
    centers[:, -1] = 2.0
    cluster_class = np.array([0, 0, 1, 1])

    pol_centers = np.zeros((2, d_m))
    pol_centers[0, 0] = -1.0
    pol_centers[1, 0] = 1.0

    records = []
    for i in range(n):
        y = i % 2
        cluster = rng.choice(np.flatnonzero(cluster_class == y))
        e_ct = centers[cluster] + rng.normal(0.0, cluster_sigma, d_s)
        z_ep = int(rng.integers(2))
        z_ip = z_ep if y == 0 else 1 - z_ep
        z_full = z_ep
        e_ep = pol_centers[z_ep] + rng.normal(0.0, cluster_sigma, d_m)
        e_ip = pol_centers[z_ip] + rng.normal(0.0, cluster_sigma, d_m)
        e_full = pol_centers[z_full] + rng.normal(0.0, cluster_sigma, d_m)
        records.append(_record(i, y, e_ct, e_ep, e_ip, e_full, z_ep, z_full))

    manifest = DatasetManifest(d_s=d_s, d_m=d_m, dataset=dataset_name, split="all",
                               semantic_encoder="synthetic", sentiment_encoder="synthetic")
    return Dataset(records=records, d_s=d_s, d_m=d_m, manifest=manifest)


def incongruity_only_dataset(n: int, seed: int = 0, d_s: int = 4, d_m: int = 8,
                             explicit_positive_prior: float = 0.75,
                             blob_half_gap: float = 1.5,
                             init_offset: float = 2.0,
                             noise_sigma: float = 0.3) -> Dataset:
    """Planted task whose class is decided only by explicit/implicit disagreement."""
    rng = np.random.default_rng(seed)
    seg_centers = np.zeros((2, d_m))
    seg_centers[0, 0] = -blob_half_gap
    seg_centers[1, 0] = blob_half_gap
    # init blobs on the bisector hyperplane x0 == 0, equidistant from both
    # segment blobs
    full_centers = np.zeros((2, d_m))
    full_centers[0, 1] = init_offset
    full_centers[1, 1] = -init_offset

    # composition-exact explicit polarities: every draw of the task has the
    # same cell proportions, only the Gaussian noise varies with the seed
    ys = np.arange(n) % 2
    z_eps = np.zeros(n, dtype=np.int64)
    for c in (0, 1):
        members = np.flatnonzero(ys == c)
        n_pos = int(round(explicit_positive_prior * len(members)))
        chosen = members[rng.permutation(len(members))[:n_pos]]
        z_eps[chosen] = 1

    records = []
    for i in range(n):
        y = int(ys[i])
        z_ep = int(z_eps[i])
        z_ip = z_ep if y == 0 else 1 - z_ep
        z_full = z_ep
        e_ct = rng.normal(0.0, 1.0, d_s)
        e_ep = seg_centers[z_ep] + rng.normal(0.0, noise_sigma, d_m)
        e_ip = seg_centers[z_ip] + rng.normal(0.0, noise_sigma, d_m)
        e_full = full_centers[z_full] + rng.normal(0.0, noise_sigma, d_m)
        # keep init embeddings exactly on the bisector so freshly seeded
        # prototypes are equidistant from both segment blobs
        e_full[0] = 0.0
        records.append(_record(i, y, e_ct, e_ep, e_ip, e_full, z_ep, z_full))

    manifest = DatasetManifest(d_s=d_s, d_m=d_m, dataset="planted-incongruity",
                               split="all", semantic_encoder="synthetic",
                               sentiment_encoder="synthetic")
    return Dataset(records=records, d_s=d_s, d_m=d_m, manifest=manifest)


def random_instance(seed: int, n: int = 6, k_a: int = 4, k_b: int = 2,
                    d_s: int = 6, d_m: int = 5, hidden: int = 5):
    """Random model parameters plus a random batch, in generic position.

    Used by the gradient checks: parameters are drawn away from the
    non-smooth points of the objective (no zero output weights, no embeddings
    exactly on prototype-distance ties).
    """
    rng = np.random.default_rng(seed)
    half_a, half_b = k_a // 2, k_b // 2
    bank = PrototypeBank(
        semantic=rng.normal(0.0, 1.0, (k_a, d_s)),
        semantic_class=np.array([0] * half_a + [1] * (k_a - half_a)),
        sentiment=rng.normal(0.0, 1.0, (k_b, d_m)),
        sentiment_polarity=np.array([0] * half_b + [1] * (k_b - half_b)),
        sigma_semantic=float(rng.uniform(1.0, 3.0)),
        sigma_sentiment=float(rng.uniform(1.0, 3.0)),
        eps=1e-4,
    )
    theta = rng.normal(0.0, 0.5, k_a + 2 * k_b)
    theta[np.abs(theta) < 0.05] = 0.05  # keep L1 subgradients away from zero
    head = OutputHead(theta=theta, bias=float(rng.normal(0.0, 0.2)))
    inco = IncongruityHead(
        W1=rng.normal(0.0, 0.7, (k_b, hidden)),
        b1=rng.normal(0.0, 0.3, hidden),
        W2=rng.normal(0.0, 0.7, hidden),
        b2=float(rng.normal(0.0, 0.2)),
    )
    params = ModelParams(bank=bank, head=head, inco_head=inco)

    y = rng.integers(0, 2, n)
    z_ep = rng.integers(0, 2, n)
    z_ip = np.where(y == 0, z_ep, 1 - z_ep)
    arrays = (
        rng.normal(0.0, 1.0, (n, d_s)),
        rng.normal(0.0, 1.0, (n, d_m)),
        rng.normal(0.0, 1.0, (n, d_m)),
        y.astype(np.float64),
        z_ep.astype(np.float64),
        z_ip.astype(np.float64),
    )
    return params, arrays
