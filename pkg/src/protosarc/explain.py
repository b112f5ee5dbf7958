"""Prototype projection onto training sentences, explanations, and metrics.

Projection replaces each prototype vector with the nearest training embedding
of the prototype's own tag, so every prototype afterwards corresponds to a
real, displayable sentence.  Explanations are refused on unprojected models.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, EmbeddingRecord
from .errors import DataError
from .model import ModelParams, forward, forward_batch


@dataclass
class ProjectedPrototype:
    prototype_index: int
    record_id: str
    text: str
    distance: float
    tag: int  # sarcasm class for semantic prototypes, polarity for sentiment ones

    def to_dict(self) -> dict:
        return {"prototype_index": self.prototype_index, "record_id": self.record_id,
                "text": self.text, "distance": self.distance, "tag": self.tag}


@dataclass
class ProjectionInfo:
    semantic: list
    sentiment: list | None
    sample_frac: float
    seed: int
    projected_param_version: int
    projection_count: int = 1

    def to_dict(self) -> dict:
        return {
            "semantic": [p.to_dict() for p in self.semantic],
            "sentiment": None if self.sentiment is None else [p.to_dict() for p in self.sentiment],
            "sample_frac": self.sample_frac,
            "seed": self.seed,
            "projected_param_version": self.projected_param_version,
            "projection_count": self.projection_count,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ProjectionInfo":
        def protos(items):
            return [ProjectedPrototype(**it) for it in items]
        return cls(semantic=protos(obj["semantic"]),
                   sentiment=None if obj["sentiment"] is None else protos(obj["sentiment"]),
                   sample_frac=obj["sample_frac"], seed=obj["seed"],
                   projected_param_version=obj["projected_param_version"],
                   projection_count=obj.get("projection_count", 1))


@dataclass
class ProjectedModel:
    params: ModelParams
    projection: ProjectionInfo


# pools above this size default to one-tenth pre-sampling for speed
LARGE_POOL_THRESHOLD = 100_000


def _display_text(rec: EmbeddingRecord) -> str:
    return rec.text if rec.text else rec.id


def _project_bank(protos: np.ndarray, tags: np.ndarray, pool_vectors, pool_records,
                  pool_tags, sample_frac: float, rng: np.random.Generator,
                  restrict_tag: bool):
    projected = protos.copy()
    sources = []
    for j in range(protos.shape[0]):
        if restrict_tag:
            members = np.flatnonzero(pool_tags == tags[j])
        else:
            members = np.arange(len(pool_records))
        if len(members) == 0:
            raise DataError(f"projection pool empty for tag {int(tags[j])}")
        if sample_frac < 1.0:
            keep = max(1, int(round(sample_frac * len(members))))
            members = members[rng.permutation(len(members))[:keep]]
            members = np.sort(members)
        vecs = pool_vectors[members]
        d2 = np.sum((vecs - protos[j][None, :]) ** 2, axis=1)
        best = int(np.argmin(d2))
        rec = pool_records[members[best]]
        projected[j] = vecs[best]
        sources.append(ProjectedPrototype(
            prototype_index=j, record_id=rec.id, text=_display_text(rec),
            distance=float(np.sqrt(d2[best])), tag=int(tags[j]),
        ))
    return projected, sources


def project_prototypes(params: ModelParams, train_ds: Dataset,
                       sample_frac: float | None = None, seed: int = 0,
                       project_sentiment: bool = True,
                       restrict_tag: bool = True,
                       previous_count: int = 0) -> ProjectedModel:
    """Replace prototype vectors with their nearest training embeddings.

    Semantic prototypes project onto e_ct of records of their own sarcasm
    class; sentiment prototypes onto e_st_full of non-sarcastic records of
    their polarity.  restrict_tag=False lifts the same-tag restriction.
    sample_frac defaults to 1.0, dropping to 0.1 for pools larger than
    100,000 records.
    """
    if sample_frac is None:
        sample_frac = 0.1 if len(train_ds) > LARGE_POOL_THRESHOLD else 1.0
    if not 0.0 < sample_frac <= 1.0:
        raise DataError(f"sample_frac must lie in (0, 1], got {sample_frac}")
    rng = np.random.default_rng(seed)

    out = params.copy()
    y = train_ds.labels()
    sem_protos, sem_sources = _project_bank(
        params.bank.semantic, params.bank.semantic_class,
        train_ds.semantic_matrix(), train_ds.records, y,
        sample_frac, rng, restrict_tag)
    out.bank.semantic = sem_protos

    st_sources = None
    if project_sentiment:
        full_records = [r for r in train_ds.records if r.y == 0 and r.e_st_full is not None]
        if not full_records:
            raise DataError("no non-sarcastic records with e_st_full to project onto")
        full_vectors = np.asarray([r.e_st_full for r in full_records], dtype=np.float64)
        full_tags = np.asarray([r.z_full for r in full_records], dtype=np.int64)
        st_protos, st_sources = _project_bank(
            params.bank.sentiment, params.bank.sentiment_polarity,
            full_vectors, full_records, full_tags, sample_frac, rng, restrict_tag)
        out.bank.sentiment = st_protos

    info = ProjectionInfo(semantic=sem_sources, sentiment=st_sources,
                          sample_frac=sample_frac, seed=seed,
                          projected_param_version=out.param_version,
                          projection_count=previous_count + 1)
    return ProjectedModel(params=out, projection=info)


@dataclass
class Explanation:
    record_id: str
    record_text: str
    predicted_prob: float
    predicted_label: int
    prototypes: list          # ranked nearest semantic prototypes
    sentiment_summary: dict
    pol_prob_ep: float
    pol_prob_ip: float

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "record_text": self.record_text,
            "predicted_prob": self.predicted_prob,
            "predicted_label": self.predicted_label,
            "prototypes": self.prototypes,
            "sentiment_summary": self.sentiment_summary,
            "pol_prob_ep": self.pol_prob_ep,
            "pol_prob_ip": self.pol_prob_ip,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        label = "sarcastic" if self.predicted_label == 1 else "not sarcastic"
        lines = [
            f"record: {self.record_id}",
            f"input: {self.record_text}",
            f"verdict: {label} (p={self.predicted_prob:.4f})",
            "nearest prototypes:",
        ]
        for rank, p in enumerate(self.prototypes, start=1):
            tag = "sarcastic" if p["tag"] == 1 else "non-sarcastic"
            lines.append(f"  {rank}. [{tag}] dist={p['distance']:.4f} "
                         f"sim={p['similarity']:.4f} :: {p['text']}")
        s = self.sentiment_summary
        lines.append("sentiment branches:")
        lines.append(f"  explicit: top positive sim={s['explicit']['positive']:.4f}, "
                     f"top negative sim={s['explicit']['negative']:.4f}, "
                     f"polarity p={self.pol_prob_ep:.4f}")
        lines.append(f"  implicit: top positive sim={s['implicit']['positive']:.4f}, "
                     f"top negative sim={s['implicit']['negative']:.4f}, "
                     f"polarity p={self.pol_prob_ip:.4f}")
        return "\n".join(lines)


def explain(model: ProjectedModel, rec: EmbeddingRecord, top_k: int = 3) -> Explanation:
    """Ranked nearest projected prototypes plus a sentiment branch summary."""
    if model.projection is None:
        raise DataError("explain requires a projected model; run projection first")
    if model.params.param_version != model.projection.projected_param_version:
        raise DataError("projection metadata is stale: the model was trained after "
                        "projection; re-project before explaining")
    if top_k < 1:
        raise DataError("top_k must be >= 1")
    k_a = model.params.bank.k_a
    if top_k > k_a:
        top_k = k_a

    tr = forward(rec, model.params)
    d2 = np.sum((model.params.bank.semantic - rec.e_ct[None, :]) ** 2, axis=1)
    order = np.argsort(d2, kind="stable")[:top_k]
    by_index = {p.prototype_index: p for p in model.projection.semantic}
    protos = []
    for j in order:
        src = by_index[int(j)]
        protos.append({
            "prototype_index": int(j),
            "text": src.text,
            "record_id": src.record_id,
            "tag": int(model.params.bank.semantic_class[j]),
            "distance": float(np.sqrt(d2[j])),
            "similarity": float(tr.semantic_sims[j]),
        })

    pol = model.params.bank.sentiment_polarity
    def branch(sims):
        return {
            "positive": float(np.max(sims[pol == 1])),
            "negative": float(np.max(sims[pol == 0])),
        }
    summary = {"explicit": branch(tr.explicit_sims), "implicit": branch(tr.implicit_sims)}

    return Explanation(
        record_id=rec.id,
        record_text=_display_text(rec),
        predicted_prob=tr.prob,
        predicted_label=int(tr.prob >= 0.5),
        prototypes=protos,
        sentiment_summary=summary,
        pol_prob_ep=tr.pol_prob_ep,
        pol_prob_ip=tr.pol_prob_ip,
    )


@dataclass
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: dict = field(default_factory=dict)
    zero_division: bool = False

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "precision": self.precision,
                "recall": self.recall, "f1": self.f1,
                "confusion": self.confusion, "zero_division": self.zero_division}


def evaluate(params: ModelParams, ds: Dataset) -> Metrics:
    """Threshold 0.5; positive class is sarcastic (y == 1)."""
    bt = forward_batch(ds.semantic_matrix(), ds.explicit_matrix(),
                       ds.implicit_matrix(), params)
    pred = (bt.probs >= 0.5).astype(np.int64)
    y = ds.labels()
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    tn = int(np.sum((pred == 0) & (y == 0)))
    zero_division = (tp + fp == 0) or (tp + fn == 0)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(
        accuracy=(tp + tn) / len(ds),
        precision=precision, recall=recall, f1=f1,
        confusion={"tp": tp, "fp": fp, "fn": fn, "tn": tn},
        zero_division=zero_division,
    )
