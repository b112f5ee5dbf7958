"""Brute-force reference evaluators, independent of the package internals.

Everything here is written with plain Python loops and math.* so the
vectorized production code can be checked against a second route.  Keep this
module free of imports from protosarc numerics (dataclasses for parameter
access only).
"""

import math


def rbf(e, p, sigma, eps):
    d2 = sum((a - b) ** 2 for a, b in zip(e, p))
    return math.exp(-(d2 + eps) / sigma ** 2)


def sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def forward_sample(e_ct, e_ep, e_ip, params):
    """Returns (prob, h_ep, h_ip, w_ct, w_ep, w_ip) for one sample."""
    bank, head, inco = params.bank, params.head, params.inco_head
    w_ct = [rbf(e_ct, p, bank.sigma_semantic, bank.eps) for p in bank.semantic]
    w_ep = [rbf(e_ep, p, bank.sigma_sentiment, bank.eps) for p in bank.sentiment]
    w_ip = [rbf(e_ip, p, bank.sigma_sentiment, bank.eps) for p in bank.sentiment]
    concat = w_ct + w_ep + w_ip
    logit = sum(t * w for t, w in zip(head.theta, concat)) + head.bias
    prob = sigmoid(logit)

    def mlp(w_st):
        hidden = []
        for h in range(len(inco.b1)):
            a = sum(w_st[m] * inco.W1[m][h] for m in range(len(w_st))) + inco.b1[h]
            hidden.append(max(a, 0.0))
        u = sum(hidden[h] * inco.W2[h] for h in range(len(hidden))) + inco.b2
        return sigmoid(u)

    return prob, mlp(w_ep), mlp(w_ip), w_ct, w_ep, w_ip


def bce(p, z):
    return -(z * math.log(p) + (1 - z) * math.log(1.0 - p))


def acc_loss(probs, ys):
    return sum(bce(p, y) for p, y in zip(probs, ys)) / len(ys)


def div_loss(bank, lambda_thr):
    total = 0.0
    k = len(bank)
    for j in range(k):
        for q in range(j + 1, k):
            nj = math.sqrt(sum(x * x for x in bank[j]))
            nq = math.sqrt(sum(x * x for x in bank[q]))
            cos = sum(a * b for a, b in zip(bank[j], bank[q])) / (nj * nq)
            total += max(0.0, cos - lambda_thr)
    return total


def cls_sep(embs, tags, protos, proto_tags):
    n = len(embs)
    cls = sep = 0.0
    for e, t in zip(embs, tags):
        same = [sum((a - b) ** 2 for a, b in zip(e, p))
                for p, pt in zip(protos, proto_tags) if pt == t]
        other = [sum((a - b) ** 2 for a, b in zip(e, p))
                 for p, pt in zip(protos, proto_tags) if pt != t]
        cls += min(same)
        sep += min(other)
    return cls / n, sep / n


def inco_loss(h_eps, h_ips, z_eps, z_ips):
    n = len(h_eps)
    total = 0.0
    for hep, hip, zep, zip_ in zip(h_eps, h_ips, z_eps, z_ips):
        total += bce(hep, zep) + bce(hip, zip_)
    return total / n


def total_loss(parts, weights, theta):
    l1 = sum(abs(t) for t in theta)
    s = weights.sep_sign
    return (parts["acc"]
            + weights.lambda1 * parts["div"]
            + weights.lambda2 * (parts["cls_ct"] + s * parts["sep_ct"]
                                 + parts["cls_st"] + s * parts["sep_st"])
            + weights.lambda3 * parts["inco"]
            + weights.lambda4 * l1)


def breakdown(arrays, params, weights):
    """Full loss breakdown of a batch, computed the slow way."""
    E_ct, E_ep, E_ip, ys, z_eps, z_ips = [
        [list(row) if hasattr(row, "__len__") else float(row) for row in a]
        for a in arrays
    ]
    probs, h_eps, h_ips = [], [], []
    for e_ct, e_ep, e_ip in zip(E_ct, E_ep, E_ip):
        p, hep, hip, _, _, _ = forward_sample(e_ct, e_ep, e_ip, params)
        probs.append(p)
        h_eps.append(hep)
        h_ips.append(hip)

    bank = params.bank
    parts = {
        "acc": acc_loss(probs, ys),
        "div": (div_loss([list(p) for p in bank.semantic], weights.lambda_thr)
                + div_loss([list(p) for p in bank.sentiment], weights.lambda_thr)),
        "inco": inco_loss(h_eps, h_ips, z_eps, z_ips),
    }
    parts["cls_ct"], parts["sep_ct"] = cls_sep(
        E_ct, ys, [list(p) for p in bank.semantic], list(bank.semantic_class))
    c_ep, s_ep = cls_sep(E_ep, z_eps, [list(p) for p in bank.sentiment],
                         list(bank.sentiment_polarity))
    c_ip, s_ip = cls_sep(E_ip, z_ips, [list(p) for p in bank.sentiment],
                         list(bank.sentiment_polarity))
    parts["cls_st"], parts["sep_st"] = c_ep + c_ip, s_ep + s_ip
    parts["l1"] = sum(abs(float(t)) for t in params.head.theta)
    parts["total"] = total_loss(parts, weights, [float(t) for t in params.head.theta])
    return parts
