"""Loss terms and their weighted combination.

total = acc + lambda1*div + lambda2*(cls_ct + s*sep_ct + cls_st + s*sep_st)
          + lambda3*inco + lambda4*sum|theta_j|

where s = sep_sign.  The default sep_sign is -1: the separation distances are
rewarded (subtracted) so that minimizing the total pushes embeddings away from
prototypes of the other tag.  sep_sign=+1 reproduces the literal all-positive
composition.  L1 applies to the output-layer weights only, never the bias.

Cross-entropy terms are evaluated from logits via log-sigmoid so they stay
finite at extreme probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, NumericalError
from .model import ForwardTrace, log_sigmoid


@dataclass
class LossWeights:
    lambda1: float = 0.5     # division
    lambda2: float = 0.1     # clustering / separation
    lambda3: float = 0.5     # incongruity
    lambda4: float = 1e-4    # L1 on output weights
    lambda_thr: float = 0.3  # cosine hinge threshold, in [-1, 1]
    sep_sign: int = -1

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda4"):
            if getattr(self, name) < 0:
                raise DataError(f"{name} must be nonnegative")
        if not -1.0 <= self.lambda_thr <= 1.0:
            raise DataError("lambda_thr must lie in [-1, 1]")
        if self.sep_sign not in (1, -1):
            raise DataError("sep_sign must be +1 or -1")


@dataclass
class LossBreakdown:
    acc: float
    div: float
    cls_ct: float
    sep_ct: float
    cls_st: float
    sep_st: float
    inco: float
    l1: float
    total: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("acc", "div", "cls_ct", "sep_ct", "cls_st", "sep_st",
                 "inco", "l1", "total")}


def _bce_from_logits(logits: np.ndarray, targets: np.ndarray) -> float:
    # mean of -[t*log sigmoid(x) + (1-t)*log sigmoid(-x)]
    per = -(targets * log_sigmoid(logits) + (1.0 - targets) * log_sigmoid(-logits))
    return float(np.mean(per))


def acc_loss(traces: Sequence[ForwardTrace], ys) -> float:
    """Mean cross-entropy of the sarcasm probability against the labels."""
    if len(traces) == 0:
        raise DataError("acc_loss: empty batch")
    logits = np.asarray([t.logit for t in traces], dtype=np.float64)
    return _bce_from_logits(logits, np.asarray(ys, dtype=np.float64))


def div_loss(bank, lambda_thr: float) -> float:
    """Hinge on pairwise prototype cosine similarity above lambda_thr.

    Sums over unordered pairs of one bank; callers apply it to the semantic
    and sentiment banks separately and add the results.
    """
    bank = np.asarray(bank, dtype=np.float64)
    if bank.ndim != 2 or bank.shape[0] < 2:
        raise DataError("div_loss: need at least 2 prototypes")
    norms = np.linalg.norm(bank, axis=1)
    if np.any(norms == 0.0):
        raise DataError("div_loss: zero-norm prototype, cosine undefined")
    unit = bank / norms[:, None]
    cos = unit @ unit.T
    iu = np.triu_indices(bank.shape[0], k=1)
    return float(np.sum(np.maximum(0.0, cos[iu] - lambda_thr)))


def cls_sep(embs, tags, protos, proto_tags):
    """(clustering, separation) mean min squared distances over a tagged bank.

    clustering: distance to the nearest same-tag prototype, averaged over
    samples; separation: same against the other-tag prototypes.
    """
    embs = np.asarray(embs, dtype=np.float64)
    tags = np.asarray(tags, dtype=np.int64)
    protos = np.asarray(protos, dtype=np.float64)
    proto_tags = np.asarray(proto_tags, dtype=np.int64)
    if embs.shape[0] == 0:
        raise DataError("cls_sep: empty batch")
    for t in np.unique(tags):
        if not np.any(proto_tags == t) or not np.any(proto_tags != t):
            raise DataError(f"cls_sep: tag {t} lacks same-tag or other-tag prototypes")
    d2 = (
        np.sum(embs * embs, axis=1)[:, None]
        - 2.0 * embs @ protos.T
        + np.sum(protos * protos, axis=1)[None, :]
    )
    d2 = np.maximum(d2, 0.0)
    same = tags[:, None] == proto_tags[None, :]
    cls = float(np.mean(np.min(np.where(same, d2, np.inf), axis=1)))
    sep = float(np.mean(np.min(np.where(~same, d2, np.inf), axis=1)))
    return cls, sep


def inco_loss(traces: Sequence[ForwardTrace], z_eps, z_ips) -> float:
    """Cross-entropy of the incongruity head's polarity predictions, both branches."""
    if len(traces) == 0:
        raise DataError("inco_loss: empty batch")
    lep = np.asarray([t.pol_logit_ep for t in traces], dtype=np.float64)
    lip = np.asarray([t.pol_logit_ip for t in traces], dtype=np.float64)
    return (_bce_from_logits(lep, np.asarray(z_eps, dtype=np.float64))
            + _bce_from_logits(lip, np.asarray(z_ips, dtype=np.float64)))


def total_loss(acc: float, div: float, cls_ct: float, sep_ct: float,
               cls_st: float, sep_st: float, inco: float,
               weights: LossWeights, theta) -> LossBreakdown:
    """Compose the weighted total from raw parts; l1 is computed from theta here."""
    for name, v in (("acc", acc), ("div", div), ("cls_ct", cls_ct), ("sep_ct", sep_ct),
                    ("cls_st", cls_st), ("sep_st", sep_st), ("inco", inco)):
        if not np.isfinite(v):
            raise NumericalError(f"total_loss: non-finite part {name}={v}")
    l1 = float(np.sum(np.abs(np.asarray(theta, dtype=np.float64))))
    s = float(weights.sep_sign)
    total = (acc
             + weights.lambda1 * div
             + weights.lambda2 * (cls_ct + s * sep_ct + cls_st + s * sep_st)
             + weights.lambda3 * inco
             + weights.lambda4 * l1)
    return LossBreakdown(acc=acc, div=div, cls_ct=cls_ct, sep_ct=sep_ct,
                         cls_st=cls_st, sep_st=sep_st, inco=inco, l1=l1,
                         total=float(total))


def recompose_total(b: LossBreakdown, weights: LossWeights) -> float:
    """Recompute total from stored parts; must match b.total to 1e-12 relative."""
    s = float(weights.sep_sign)
    return (b.acc
            + weights.lambda1 * b.div
            + weights.lambda2 * (b.cls_ct + s * b.sep_ct + b.cls_st + s * b.sep_st)
            + weights.lambda3 * b.inco
            + weights.lambda4 * b.l1)
