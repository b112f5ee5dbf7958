"""Prototype network forward pass and checkpoint serialization.

Similarity kernel: exp(-(||e - p||^2 + eps) / sigma^2), strictly decreasing in
distance and bounded in (0, exp(-eps/sigma^2)].  The output head is a single
linear layer over the concatenated similarity vectors followed by a sigmoid.
The incongruity head is a one-hidden-layer relu MLP mapping a sentiment
similarity vector to a polarity probability; one shared head serves the
explicit and implicit branches.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import EmbeddingRecord
from .errors import DataError

CHECKPOINT_FORMAT_VERSION = 1


def _sigmoid(x):
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                    np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def log_sigmoid(x):
    """log(sigmoid(x)) computed without underflow."""
    x = np.asarray(x, dtype=np.float64)
    return np.minimum(x, 0.0) - np.log1p(np.exp(-np.abs(x)))


@dataclass
class PrototypeBank:
    semantic: np.ndarray           # (k_a, d_s)
    semantic_class: np.ndarray     # (k_a,) sarcasm class tag of each prototype
    sentiment: np.ndarray          # (k_b, d_m)
    sentiment_polarity: np.ndarray  # (k_b,) polarity tag of each prototype
    sigma_semantic: float = 2.0
    sigma_sentiment: float = 2.0
    eps: float = 1e-4

    def __post_init__(self):
        if self.sigma_semantic <= 0 or self.sigma_sentiment <= 0:
            raise DataError("sigma must be positive")
        if self.eps <= 0:
            raise DataError("eps must be positive")
        if self.semantic.shape[0] < 2 or self.sentiment.shape[0] < 2:
            raise DataError("need at least 2 prototypes per bank")

    @property
    def k_a(self) -> int:
        return self.semantic.shape[0]

    @property
    def k_b(self) -> int:
        return self.sentiment.shape[0]


@dataclass
class OutputHead:
    theta: np.ndarray  # (k_a + 2*k_b,)
    bias: float


@dataclass
class IncongruityHead:
    W1: np.ndarray  # (k_b, H)
    b1: np.ndarray  # (H,)
    W2: np.ndarray  # (H,)
    b2: float

    @property
    def hidden(self) -> int:
        return self.W1.shape[1]


@dataclass
class ModelParams:
    """Complete trainable state. param_version increments on every optimizer step."""

    bank: PrototypeBank
    head: OutputHead
    inco_head: IncongruityHead
    param_version: int = 0

    def __post_init__(self):
        expected = self.bank.k_a + 2 * self.bank.k_b
        if self.head.theta.shape != (expected,):
            raise DataError(f"theta length {self.head.theta.shape} does not match "
                            f"k_a + 2*k_b = {expected}")
        if self.inco_head.W1.shape[0] != self.bank.k_b:
            raise DataError("incongruity head W1 rows must equal k_b")

    def copy(self) -> "ModelParams":
        return ModelParams(
            bank=PrototypeBank(
                semantic=self.bank.semantic.copy(),
                semantic_class=self.bank.semantic_class.copy(),
                sentiment=self.bank.sentiment.copy(),
                sentiment_polarity=self.bank.sentiment_polarity.copy(),
                sigma_semantic=self.bank.sigma_semantic,
                sigma_sentiment=self.bank.sigma_sentiment,
                eps=self.bank.eps,
            ),
            head=OutputHead(theta=self.head.theta.copy(), bias=float(self.head.bias)),
            inco_head=IncongruityHead(
                W1=self.inco_head.W1.copy(), b1=self.inco_head.b1.copy(),
                W2=self.inco_head.W2.copy(), b2=float(self.inco_head.b2),
            ),
            param_version=self.param_version,
        )


@dataclass
class ForwardTrace:
    semantic_sims: np.ndarray   # (k_a,)
    explicit_sims: np.ndarray   # (k_b,)
    implicit_sims: np.ndarray   # (k_b,)
    logit: float
    prob: float
    pol_logit_ep: float
    pol_logit_ip: float
    pol_prob_ep: float          # incongruity head P(polarity == 1) for the explicit part
    pol_prob_ip: float


@dataclass
class BatchTrace:
    """Vectorized forward pass over a batch, keeping intermediates for gradients."""

    sem_sims: np.ndarray      # (n, k_a)
    ep_sims: np.ndarray       # (n, k_b)
    ip_sims: np.ndarray       # (n, k_b)
    sem_d2: np.ndarray        # (n, k_a) squared distances
    ep_d2: np.ndarray         # (n, k_b)
    ip_d2: np.ndarray         # (n, k_b)
    logits: np.ndarray        # (n,)
    probs: np.ndarray         # (n,)
    ep_hidden_pre: np.ndarray   # (n, H) pre-activation of the incongruity head
    ip_hidden_pre: np.ndarray
    pol_logits_ep: np.ndarray   # (n,)
    pol_logits_ip: np.ndarray
    pol_probs_ep: np.ndarray
    pol_probs_ip: np.ndarray


def rbf_similarity(e, p, sigma: float, eps: float) -> float:
    """Kernel similarity between a single embedding and a single prototype."""
    e = np.asarray(e, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if e.shape != p.shape:
        raise DataError(f"dimension mismatch: {e.shape} vs {p.shape}")
    if sigma <= 0 or eps <= 0:
        raise DataError("sigma and eps must be positive")
    d2 = float(np.sum((e - p) ** 2))
    return float(np.exp(-(d2 + eps) / sigma ** 2))


def similarity_vector(e, bank, sigma: float, eps: float) -> np.ndarray:
    """Similarities of one embedding against every prototype in a bank."""
    bank = np.asarray(bank, dtype=np.float64)
    if bank.ndim != 2 or bank.shape[0] == 0:
        raise DataError("similarity_vector: bank must be a nonempty (k, d) array")
    e = np.asarray(e, dtype=np.float64)
    if e.shape != (bank.shape[1],):
        raise DataError(f"dimension mismatch: embedding {e.shape} vs bank dim {bank.shape[1]}")
    d2 = np.sum((bank - e[None, :]) ** 2, axis=1)
    return np.exp(-(d2 + eps) / sigma ** 2)


def batch_similarities(embs: np.ndarray, protos: np.ndarray, sigma: float, eps: float):
    """Returns (similarities, squared distances), each (n, k)."""
    d2 = (
        np.sum(embs * embs, axis=1)[:, None]
        - 2.0 * embs @ protos.T
        + np.sum(protos * protos, axis=1)[None, :]
    )
    d2 = np.maximum(d2, 0.0)
    return np.exp(-(d2 + eps) / sigma ** 2), d2


def incongruity_forward(w_st, head: IncongruityHead) -> float:
    """Polarity probability from a sentiment similarity vector."""
    w_st = np.asarray(w_st, dtype=np.float64)
    if w_st.shape != (head.W1.shape[0],):
        raise DataError(f"dimension mismatch: similarity vector {w_st.shape} "
                        f"vs head input {head.W1.shape[0]}")
    hidden = np.maximum(w_st @ head.W1 + head.b1, 0.0)
    logit = float(hidden @ head.W2 + head.b2)
    return float(_sigmoid(np.float64(logit)))


def forward_batch(E_ct: np.ndarray, E_ep: np.ndarray, E_ip: np.ndarray,
                  params: ModelParams) -> BatchTrace:
    bank, head, inco = params.bank, params.head, params.inco_head
    sem_sims, sem_d2 = batch_similarities(E_ct, bank.semantic, bank.sigma_semantic, bank.eps)
    ep_sims, ep_d2 = batch_similarities(E_ep, bank.sentiment, bank.sigma_sentiment, bank.eps)
    ip_sims, ip_d2 = batch_similarities(E_ip, bank.sentiment, bank.sigma_sentiment, bank.eps)

    concat = np.hstack([sem_sims, ep_sims, ip_sims])
    logits = concat @ head.theta + head.bias
    probs = _sigmoid(logits)

    ep_pre = ep_sims @ inco.W1 + inco.b1
    ip_pre = ip_sims @ inco.W1 + inco.b1
    pol_logits_ep = np.maximum(ep_pre, 0.0) @ inco.W2 + inco.b2
    pol_logits_ip = np.maximum(ip_pre, 0.0) @ inco.W2 + inco.b2

    return BatchTrace(
        sem_sims=sem_sims, ep_sims=ep_sims, ip_sims=ip_sims,
        sem_d2=sem_d2, ep_d2=ep_d2, ip_d2=ip_d2,
        logits=logits, probs=probs,
        ep_hidden_pre=ep_pre, ip_hidden_pre=ip_pre,
        pol_logits_ep=pol_logits_ep, pol_logits_ip=pol_logits_ip,
        pol_probs_ep=_sigmoid(pol_logits_ep), pol_probs_ip=_sigmoid(pol_logits_ip),
    )


def forward(rec: EmbeddingRecord, params: ModelParams) -> ForwardTrace:
    """Per-record forward pass producing the full audit trace."""
    if rec.e_ct.shape != (params.bank.semantic.shape[1],):
        raise DataError(f"record {rec.id}: semantic dimension "
                        f"{rec.e_ct.shape[0]} vs bank {params.bank.semantic.shape[1]}")
    if rec.e_st_ep.shape != (params.bank.sentiment.shape[1],):
        raise DataError(f"record {rec.id}: sentiment dimension "
                        f"{rec.e_st_ep.shape[0]} vs bank {params.bank.sentiment.shape[1]}")
    bt = forward_batch(rec.e_ct[None, :], rec.e_st_ep[None, :], rec.e_st_ip[None, :], params)
    return ForwardTrace(
        semantic_sims=bt.sem_sims[0], explicit_sims=bt.ep_sims[0],
        implicit_sims=bt.ip_sims[0],
        logit=float(bt.logits[0]), prob=float(bt.probs[0]),
        pol_logit_ep=float(bt.pol_logits_ep[0]), pol_logit_ip=float(bt.pol_logits_ip[0]),
        pol_prob_ep=float(bt.pol_probs_ep[0]), pol_prob_ip=float(bt.pol_probs_ip[0]),
    )


def save_checkpoint(params: ModelParams, path, projection: dict | None = None,
                    extra: dict | None = None) -> None:
    obj = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "manifest": {
            "d_s": params.bank.semantic.shape[1],
            "d_m": params.bank.sentiment.shape[1],
            "k_a": params.bank.k_a,
            "k_b": params.bank.k_b,
            "sigma_semantic": params.bank.sigma_semantic,
            "sigma_sentiment": params.bank.sigma_sentiment,
            "eps": params.bank.eps,
            "hidden": params.inco_head.hidden,
        },
        "prototypes": {
            "semantic": [
                {"vector": v.tolist(), "class": int(c)}
                for v, c in zip(params.bank.semantic, params.bank.semantic_class)
            ],
            "sentiment": [
                {"vector": v.tolist(), "polarity": int(t)}
                for v, t in zip(params.bank.sentiment, params.bank.sentiment_polarity)
            ],
        },
        "output_head": {"theta": params.head.theta.tolist(), "bias": float(params.head.bias)},
        "incongruity_head": {
            "W1": params.inco_head.W1.tolist(), "b1": params.inco_head.b1.tolist(),
            "W2": params.inco_head.W2.tolist(), "b2": float(params.inco_head.b2),
        },
        "param_version": params.param_version,
        "projection": projection,
        "extra": extra or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path):
    """Returns (ModelParams, projection dict or None, extra dict)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"checkpoint not found: {path}") from None
    except json.JSONDecodeError as e:
        raise DataError(f"malformed checkpoint {path}: {e}") from e
    if obj.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise DataError(f"unsupported checkpoint format_version "
                        f"{obj.get('format_version')!r}")
    man = obj["manifest"]
    bank = PrototypeBank(
        semantic=np.asarray([p["vector"] for p in obj["prototypes"]["semantic"]], dtype=np.float64),
        semantic_class=np.asarray([p["class"] for p in obj["prototypes"]["semantic"]], dtype=np.int64),
        sentiment=np.asarray([p["vector"] for p in obj["prototypes"]["sentiment"]], dtype=np.float64),
        sentiment_polarity=np.asarray([p["polarity"] for p in obj["prototypes"]["sentiment"]], dtype=np.int64),
        sigma_semantic=float(man["sigma_semantic"]),
        sigma_sentiment=float(man["sigma_sentiment"]),
        eps=float(man["eps"]),
    )
    head = OutputHead(theta=np.asarray(obj["output_head"]["theta"], dtype=np.float64),
                      bias=float(obj["output_head"]["bias"]))
    inco = IncongruityHead(
        W1=np.asarray(obj["incongruity_head"]["W1"], dtype=np.float64),
        b1=np.asarray(obj["incongruity_head"]["b1"], dtype=np.float64),
        W2=np.asarray(obj["incongruity_head"]["W2"], dtype=np.float64),
        b2=float(obj["incongruity_head"]["b2"]),
    )
    params = ModelParams(bank=bank, head=head, inco_head=inco,
                         param_version=int(obj["param_version"]))
    return params, obj.get("projection"), obj.get("extra", {})
