"""Analytic gradients, finite-difference verification, Adam, training loop, CV.

Every trainable tensor (both prototype banks, output head, incongruity head)
is optimized jointly against the single weighted objective.  Gradients are
closed-form per term; the min in the clustering/separation losses is
differentiated through the argmin, ties broken by lowest prototype index.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, split_folds
from .errors import DataError, NumericalError
from .kmeans import init_semantic_prototypes, init_sentiment_prototypes
from .losses import LossBreakdown, LossWeights, total_loss
from .model import (IncongruityHead, ModelParams, OutputHead, PrototypeBank,
                    forward_batch, log_sigmoid)

TRAINABLE = ("semantic_protos", "sentiment_protos", "theta", "bias",
             "W1", "b1", "W2", "b2")


@dataclass
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 32
    accum_steps: int = 1
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)
    k_per_class: int = 8
    k_per_polarity: int = 4
    sigma: float = 2.0
    sigma_semantic: float | None = None
    sigma_sentiment: float | None = None
    eps: float = 1e-4
    hidden: int = 64
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1 or self.accum_steps < 1:
            raise DataError("batch_size and accum_steps must be >= 1")
        if self.patience < 1:
            raise DataError("patience must be >= 1")

    def bank_sigmas(self):
        return (self.sigma if self.sigma_semantic is None else self.sigma_semantic,
                self.sigma if self.sigma_sentiment is None else self.sigma_sentiment)


def paper_settings(**overrides) -> TrainConfig:
    """The published large-scale regime: batch 60, 30 accumulated steps, lr 1e-4."""
    base = dict(lr=1e-4, batch_size=60, accum_steps=30)
    base.update(overrides)
    return TrainConfig(**base)


@dataclass
class EpochStats:
    epoch: int
    train: LossBreakdown
    val: LossBreakdown
    train_accuracy: float
    val_accuracy: float

    def to_dict(self) -> dict:
        return {"epoch": self.epoch,
                "train": self.train.to_dict(), "val": self.val.to_dict(),
                "train_accuracy": self.train_accuracy,
                "val_accuracy": self.val_accuracy}


@dataclass
class TrainHistory:
    epochs: list
    best_epoch: int
    stopped_epoch: int
    wall_clock_sec: float


def get_trainable(params: ModelParams) -> dict:
    return {
        "semantic_protos": params.bank.semantic,
        "sentiment_protos": params.bank.sentiment,
        "theta": params.head.theta,
        "bias": np.asarray(params.head.bias, dtype=np.float64),
        "W1": params.inco_head.W1,
        "b1": params.inco_head.b1,
        "W2": params.inco_head.W2,
        "b2": np.asarray(params.inco_head.b2, dtype=np.float64),
    }


def set_trainable(params: ModelParams, values: dict) -> ModelParams:
    out = params.copy()
    out.bank.semantic = np.asarray(values["semantic_protos"], dtype=np.float64)
    out.bank.sentiment = np.asarray(values["sentiment_protos"], dtype=np.float64)
    out.head.theta = np.asarray(values["theta"], dtype=np.float64)
    out.head.bias = float(values["bias"])
    out.inco_head.W1 = np.asarray(values["W1"], dtype=np.float64)
    out.inco_head.b1 = np.asarray(values["b1"], dtype=np.float64)
    out.inco_head.W2 = np.asarray(values["W2"], dtype=np.float64)
    out.inco_head.b2 = float(values["b2"])
    return out


def _mean_bce_from_logits(logits, targets):
    per = -(targets * log_sigmoid(logits) + (1.0 - targets) * log_sigmoid(-logits))
    return float(np.mean(per))


def _div_value_and_grad(bank: np.ndarray, lambda_thr: float):
    norms = np.linalg.norm(bank, axis=1)
    if np.any(norms == 0.0):
        raise NumericalError("zero-norm prototype during training; cosine undefined")
    unit = bank / norms[:, None]
    cos = unit @ unit.T
    over = cos - lambda_thr
    active = over > 0.0
    np.fill_diagonal(active, False)
    value = float(np.sum(over[np.triu(active, k=1)]))
    # d cos(p_j, p_q)/dp_j = (u_q - cos_jq * u_j) / |p_j|, summed over active partners
    mc = np.where(active, cos, 0.0)
    grad = (active @ unit - mc.sum(axis=1)[:, None] * unit) / norms[:, None]
    return value, grad


def _cls_sep_value_and_grad(embs, tags, protos, proto_tags, d2):
    """Returns (cls, sep, grad_cls, grad_sep) for one embedding branch."""
    n = embs.shape[0]
    same = tags[:, None] == proto_tags[None, :]
    if not (np.all(same.any(axis=1)) and np.all((~same).any(axis=1))):
        raise DataError("cls_sep: a sample's tag lacks prototype coverage")
    d2_same = np.where(same, d2, np.inf)
    d2_other = np.where(~same, d2, np.inf)
    j_cls = np.argmin(d2_same, axis=1)
    j_sep = np.argmin(d2_other, axis=1)
    rows = np.arange(n)
    cls = float(np.mean(d2_same[rows, j_cls]))
    sep = float(np.mean(d2_other[rows, j_sep]))
    grad_cls = np.zeros_like(protos)
    grad_sep = np.zeros_like(protos)
    np.add.at(grad_cls, j_cls, (2.0 / n) * (protos[j_cls] - embs))
    np.add.at(grad_sep, j_sep, (2.0 / n) * (protos[j_sep] - embs))
    return cls, sep, grad_cls, grad_sep


def loss_and_grads(E_ct, E_ep, E_ip, y, z_ep, z_ip,
                   params: ModelParams, weights: LossWeights):
    """Loss breakdown plus exact gradients for every trainable tensor."""
    bank, head, inco = params.bank, params.head, params.inco_head
    n = E_ct.shape[0]
    if n == 0:
        raise DataError("loss_and_grads: empty batch")
    y = np.asarray(y, dtype=np.float64)
    z_ep = np.asarray(z_ep, dtype=np.float64)
    z_ip = np.asarray(z_ip, dtype=np.float64)

    bt = forward_batch(E_ct, E_ep, E_ip, params)
    k_a, k_b = bank.k_a, bank.k_b

    # --- values
    acc = _mean_bce_from_logits(bt.logits, y)
    div_sem, dP_div_sem = _div_value_and_grad(bank.semantic, weights.lambda_thr)
    div_st, dP_div_st = _div_value_and_grad(bank.sentiment, weights.lambda_thr)
    div = div_sem + div_st

    cls_ct, sep_ct, gc_ct, gs_ct = _cls_sep_value_and_grad(
        E_ct, np.asarray(y, dtype=np.int64), bank.semantic, bank.semantic_class, bt.sem_d2)
    c_ep, s_ep, gc_ep, gs_ep = _cls_sep_value_and_grad(
        E_ep, np.asarray(z_ep, dtype=np.int64), bank.sentiment, bank.sentiment_polarity, bt.ep_d2)
    c_ip, s_ip, gc_ip, gs_ip = _cls_sep_value_and_grad(
        E_ip, np.asarray(z_ip, dtype=np.int64), bank.sentiment, bank.sentiment_polarity, bt.ip_d2)
    cls_st, sep_st = c_ep + c_ip, s_ep + s_ip

    inco_val = (_mean_bce_from_logits(bt.pol_logits_ep, z_ep)
                + _mean_bce_from_logits(bt.pol_logits_ip, z_ip))

    breakdown = total_loss(acc, div, cls_ct, sep_ct, cls_st, sep_st, inco_val,
                           weights, head.theta)

    # --- gradients
    lam1, lam2, lam3, lam4 = (weights.lambda1, weights.lambda2,
                              weights.lambda3, weights.lambda4)
    s = float(weights.sep_sign)

    gl = (bt.probs - y) / n                       # dL_acc / dlogit
    d_theta = np.hstack([bt.sem_sims, bt.ep_sims, bt.ip_sims]).T @ gl
    d_theta += lam4 * np.sign(head.theta)
    d_bias = float(np.sum(gl))

    dW_sem = gl[:, None] * head.theta[None, :k_a]
    dW_ep = gl[:, None] * head.theta[None, k_a:k_a + k_b]
    dW_ip = gl[:, None] * head.theta[None, k_a + k_b:]

    # incongruity head backprop (shared weights, both branches)
    gu_ep = lam3 * (bt.pol_probs_ep - z_ep) / n
    gu_ip = lam3 * (bt.pol_probs_ip - z_ip) / n
    R_ep = np.maximum(bt.ep_hidden_pre, 0.0)
    R_ip = np.maximum(bt.ip_hidden_pre, 0.0)
    d_W2 = R_ep.T @ gu_ep + R_ip.T @ gu_ip
    d_b2 = float(np.sum(gu_ep) + np.sum(gu_ip))
    dA_ep = (gu_ep[:, None] * inco.W2[None, :]) * (bt.ep_hidden_pre > 0.0)
    dA_ip = (gu_ip[:, None] * inco.W2[None, :]) * (bt.ip_hidden_pre > 0.0)
    d_W1 = bt.ep_sims.T @ dA_ep + bt.ip_sims.T @ dA_ip
    d_b1 = dA_ep.sum(axis=0) + dA_ip.sum(axis=0)
    dW_ep += dA_ep @ inco.W1.T
    dW_ip += dA_ip @ inco.W1.T

    # kernel backprop: dw/dp = (2 w / sigma^2) (e - p)
    def rbf_into_protos(dW, sims, embs, protos, sigma):
        g = dW * sims * (2.0 / sigma ** 2)
        return g.T @ embs - g.sum(axis=0)[:, None] * protos

    d_P_sem = rbf_into_protos(dW_sem, bt.sem_sims, E_ct, bank.semantic,
                              bank.sigma_semantic)
    d_P_st = (rbf_into_protos(dW_ep, bt.ep_sims, E_ep, bank.sentiment, bank.sigma_sentiment)
              + rbf_into_protos(dW_ip, bt.ip_sims, E_ip, bank.sentiment, bank.sigma_sentiment))

    d_P_sem += lam1 * dP_div_sem + lam2 * (gc_ct + s * gs_ct)
    d_P_st += lam1 * dP_div_st + lam2 * (gc_ep + gc_ip + s * (gs_ep + gs_ip))

    grads = {
        "semantic_protos": d_P_sem,
        "sentiment_protos": d_P_st,
        "theta": d_theta,
        "bias": np.asarray(d_bias, dtype=np.float64),
        "W1": d_W1,
        "b1": d_b1,
        "W2": d_W2,
        "b2": np.asarray(d_b2, dtype=np.float64),
    }
    return breakdown, grads


def gradients(batch, params: ModelParams, weights: LossWeights) -> dict:
    """Gradients of the total loss for a batch of records."""
    E_ct = np.asarray([r.e_ct for r in batch], dtype=np.float64)
    E_ep = np.asarray([r.e_st_ep for r in batch], dtype=np.float64)
    E_ip = np.asarray([r.e_st_ip for r in batch], dtype=np.float64)
    y = np.asarray([r.y for r in batch], dtype=np.float64)
    z_ep = np.asarray([r.z_ep for r in batch], dtype=np.float64)
    z_ip = np.asarray([r.z_ip for r in batch], dtype=np.float64)
    _, grads = loss_and_grads(E_ct, E_ep, E_ip, y, z_ep, z_ip, params, weights)
    return grads


def batch_loss(arrays, params: ModelParams, weights: LossWeights) -> LossBreakdown:
    E_ct, E_ep, E_ip, y, z_ep, z_ip = arrays
    breakdown, _ = loss_and_grads(E_ct, E_ep, E_ip, y, z_ep, z_ip, params, weights)
    return breakdown


def finite_diff_check(params: ModelParams, arrays, weights: LossWeights,
                      step: float = 1e-5, max_params: int = 10_000,
                      seed: int = 0, fields=None):
    """Central finite differences over every scalar parameter.

    Returns (max relative error, path of the worst parameter).  Above
    max_params scalars, checks a seeded random subsample; `fields` restricts
    probing to a subset of the trainable tensors.  Relative error is
    |analytic - fd| / max(|analytic|, |fd|, 1e-6); the floor keeps roundoff
    noise at exactly-zero gradients from registering as error.  Large steps
    degrade the reported error through truncation but never raise.  A large
    error whose magnitude tracks the step usually means a non-smooth point
    (relu boundary, argmin tie) fell inside the probe window; the reported
    subgradient is still valid there.
    """
    if step <= 0:
        raise DataError("finite_diff_check: step must be positive")
    E_ct, E_ep, E_ip, y, z_ep, z_ip = arrays

    breakdown, grads = loss_and_grads(E_ct, E_ep, E_ip, y, z_ep, z_ip, params, weights)
    if not np.isfinite(breakdown.total):
        raise NumericalError("finite_diff_check: non-finite loss")

    values = {k: v.copy() for k, v in get_trainable(params).items()}

    def loss_at(vals) -> float:
        p = set_trainable(params, vals)
        b, _ = loss_and_grads(E_ct, E_ep, E_ip, y, z_ep, z_ip, p, weights)
        return b.total

    probe = TRAINABLE if fields is None else tuple(fields)
    coords = []
    for name in probe:
        size = int(np.asarray(values[name]).size)
        coords.extend((name, i) for i in range(size))
    if len(coords) > max_params:
        rng = np.random.default_rng(seed)
        keep = rng.choice(len(coords), size=max_params, replace=False)
        coords = [coords[i] for i in sorted(keep)]

    worst = 0.0
    worst_path = ""
    for name, flat_idx in coords:
        base = np.asarray(values[name], dtype=np.float64)
        orig = base.flat[flat_idx]

        base.flat[flat_idx] = orig + step
        hi = loss_at(values)
        base.flat[flat_idx] = orig - step
        lo = loss_at(values)
        base.flat[flat_idx] = orig
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NumericalError(f"non-finite loss while probing {name}[{flat_idx}]")

        fd = (hi - lo) / (2.0 * step)
        an = float(np.asarray(grads[name]).flat[flat_idx])
        rel = abs(an - fd) / max(abs(an), abs(fd), 1e-6)
        if rel > worst:
            worst = rel
            idx = np.unravel_index(flat_idx, base.shape) if base.ndim else ()
            worst_path = f"{name}{[int(i) for i in idx]}" if idx else name
    return worst, worst_path


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8

    @classmethod
    def for_params(cls, params: ModelParams, lr: float, beta1: float = 0.9,
                   beta2: float = 0.999, eps_adam: float = 1e-8) -> "AdamState":
        shapes = get_trainable(params)
        return cls(m={k: np.zeros_like(np.asarray(v, dtype=np.float64)) for k, v in shapes.items()},
                   v={k: np.zeros_like(np.asarray(v, dtype=np.float64)) for k, v in shapes.items()},
                   t=0, lr=lr, beta1=beta1, beta2=beta2, eps_adam=eps_adam)


def adam_step(params: ModelParams, grads: dict, state: AdamState):
    """One bias-corrected Adam update; returns new (params, state)."""
    t = state.t + 1
    new_m, new_v, new_vals = {}, {}, {}
    vals = get_trainable(params)
    for k in TRAINABLE:
        g = np.asarray(grads[k], dtype=np.float64)
        m = state.beta1 * state.m[k] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        new_vals[k] = np.asarray(vals[k], dtype=np.float64) - state.lr * m_hat / (np.sqrt(v_hat) + state.eps_adam)
        new_m[k], new_v[k] = m, v
    out = set_trainable(params, new_vals)
    out.param_version = params.param_version + 1
    return out, AdamState(m=new_m, v=new_v, t=t, lr=state.lr, beta1=state.beta1,
                          beta2=state.beta2, eps_adam=state.eps_adam)


def init_params(ds: Dataset, cfg: TrainConfig) -> ModelParams:
    """k-means prototype initialization plus seeded head initialization."""
    rng = np.random.default_rng(cfg.seed)
    km_seed = int(rng.integers(2 ** 31))
    sem, sem_class = init_semantic_prototypes(ds, cfg.k_per_class, seed=km_seed)
    st, st_pol = init_sentiment_prototypes(ds, cfg.k_per_polarity, seed=km_seed)
    sigma_sem, sigma_st = cfg.bank_sigmas()
    bank = PrototypeBank(semantic=sem, semantic_class=sem_class,
                         sentiment=st, sentiment_polarity=st_pol,
                         sigma_semantic=sigma_sem, sigma_sentiment=sigma_st,
                         eps=cfg.eps)
    k_a, k_b, h = bank.k_a, bank.k_b, cfg.hidden
    head = OutputHead(theta=rng.uniform(-0.01, 0.01, size=k_a + 2 * k_b), bias=0.0)
    # relu MLP gets fan-in scaled init; near-zero init would stall its
    # gradient path into the sentiment prototypes
    inco = IncongruityHead(
        W1=rng.normal(0.0, np.sqrt(2.0 / k_b), size=(k_b, h)),
        b1=np.zeros(h), W2=rng.normal(0.0, np.sqrt(2.0 / h), size=h), b2=0.0,
    )
    return ModelParams(bank=bank, head=head, inco_head=inco)


def _dataset_arrays(ds: Dataset):
    return (ds.semantic_matrix(), ds.explicit_matrix(), ds.implicit_matrix(),
            ds.labels().astype(np.float64),
            ds.polarity_explicit().astype(np.float64),
            ds.polarity_implicit().astype(np.float64))


def _take(arrays, idx):
    return tuple(a[idx] for a in arrays)


def _accuracy(arrays, params) -> float:
    E_ct, E_ep, E_ip, y = arrays[0], arrays[1], arrays[2], arrays[3]
    bt = forward_batch(E_ct, E_ep, E_ip, params)
    return float(np.mean((bt.probs >= 0.5).astype(np.float64) == y))


def _check_finite(breakdown: LossBreakdown, where: str):
    if not np.isfinite(breakdown.total):
        raise NumericalError(f"non-finite loss at {where}: {breakdown.to_dict()}")


def train(train_ds: Dataset, val_ds: Dataset, cfg: TrainConfig):
    """Full training run; returns (best parameters, history).

    Early stopping on validation total loss: stops after `patience` epochs
    without improvement and returns the parameters of the best epoch.
    """
    y = train_ds.labels()
    if not (np.any(y == 0) and np.any(y == 1)):
        raise DataError("training data must contain both classes")

    t0 = time.monotonic()
    params = init_params(train_ds, cfg)
    state = AdamState.for_params(params, lr=cfg.lr, beta1=cfg.beta1,
                                 beta2=cfg.beta2, eps_adam=cfg.eps_adam)
    train_arrays = _dataset_arrays(train_ds)
    val_arrays = _dataset_arrays(val_ds)
    n = len(train_ds)
    shuffle_rng = np.random.default_rng(cfg.seed + 1)

    history: list[EpochStats] = []
    best_val = np.inf
    best_epoch = 0
    best_params = params.copy()
    bad_streak = 0
    stopped_epoch = 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        window_grads = None
        window_count = 0
        window_micro = 0

        def flush():
            nonlocal params, state, window_grads, window_count, window_micro
            if window_micro == 0:
                return
            avg = {k: v / window_count for k, v in window_grads.items()}
            params, state = adam_step(params, avg, state)
            window_grads, window_count, window_micro = None, 0, 0

        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            arrays = _take(train_arrays, idx)
            breakdown, grads = loss_and_grads(*arrays, params, cfg.weights)
            _check_finite(breakdown, f"epoch {epoch}, batch starting {start}")
            m = len(idx)
            if window_grads is None:
                window_grads = {k: np.asarray(v, dtype=np.float64) * m for k, v in grads.items()}
            else:
                for k in window_grads:
                    window_grads[k] = window_grads[k] + np.asarray(grads[k], dtype=np.float64) * m
            window_count += m
            window_micro += 1
            if window_micro == cfg.accum_steps:
                flush()
        flush()

        train_breakdown, _ = loss_and_grads(*train_arrays, params, cfg.weights)
        val_breakdown, _ = loss_and_grads(*val_arrays, params, cfg.weights)
        _check_finite(train_breakdown, f"epoch {epoch} train evaluation")
        _check_finite(val_breakdown, f"epoch {epoch} val evaluation")
        history.append(EpochStats(
            epoch=epoch, train=train_breakdown, val=val_breakdown,
            train_accuracy=_accuracy(train_arrays, params),
            val_accuracy=_accuracy(val_arrays, params),
        ))

        if val_breakdown.total < best_val:
            best_val = val_breakdown.total
            best_epoch = epoch
            best_params = params.copy()
            bad_streak = 0
        else:
            bad_streak += 1
            if bad_streak >= cfg.patience:
                stopped_epoch = epoch
                break
        stopped_epoch = epoch

    return best_params, TrainHistory(epochs=history, best_epoch=best_epoch,
                                     stopped_epoch=stopped_epoch,
                                     wall_clock_sec=time.monotonic() - t0)


@dataclass
class FoldOutcome:
    fold: int
    metrics: dict
    best_epoch: int
    stopped_epoch: int


@dataclass
class CrossValResult:
    folds: list
    mean: dict
    k: int
    seed: int


def cross_validate(ds: Dataset, cfg: TrainConfig, k: int = 5) -> CrossValResult:
    """k-fold CV: train on k-1 folds (10% carved for early stopping), test on the fold."""
    from .explain import evaluate  # local import to avoid a module cycle

    plan = split_folds(ds, k, seed=cfg.seed)
    outcomes = []
    for fold in range(k):
        test_ds = ds.subset(plan.fold_indices(fold))
        pool = ds.subset(plan.other_indices(fold))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            inner = split_folds(pool, 10, seed=cfg.seed + 100 + fold)
        val_ds = pool.subset(inner.fold_indices(0))
        fit_ds = pool.subset(inner.other_indices(0))
        fold_cfg = TrainConfig(**{**cfg.__dict__, "seed": cfg.seed + fold})
        params, hist = train(fit_ds, val_ds, fold_cfg)
        m = evaluate(params, test_ds)
        outcomes.append(FoldOutcome(fold=fold, metrics=m.to_dict(),
                                    best_epoch=hist.best_epoch,
                                    stopped_epoch=hist.stopped_epoch))
    keys = ("accuracy", "precision", "recall", "f1")
    mean = {key: float(np.mean([o.metrics[key] for o in outcomes])) for key in keys}
    return CrossValResult(folds=outcomes, mean=mean, k=k, seed=cfg.seed)
