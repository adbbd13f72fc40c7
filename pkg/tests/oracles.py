"""Independent reference implementations used as test oracles."""

import math

import numpy as np


def _sig(x):
    return 1.0 / (1.0 + math.exp(-x))


def scalar_lstm(xs, params):
    """Element-by-element recurrence written with plain loops."""
    H, D = params.hidden, params.input_dim
    W, U, b = params.W.tolist(), params.U.tolist(), params.b.tolist()
    h, c = [0.0] * H, [0.0] * H
    for x in xs:
        z = [b[r] + sum(W[r][d] * x[d] for d in range(D)) + sum(U[r][k] * h[k] for k in range(H))
             for r in range(4 * H)]
        i = [_sig(z[k]) for k in range(H)]
        f = [_sig(z[H + k]) for k in range(H)]
        o = [_sig(z[2 * H + k]) for k in range(H)]
        g = [math.tanh(z[3 * H + k]) for k in range(H)]
        c = [i[k] * g[k] + f[k] * c[k] for k in range(H)]
        h = [o[k] * math.tanh(c[k]) for k in range(H)]
    return np.array(h)


def docnade_hidden(ids, i, W, c):
    """Hidden state after the first i words, re-summed from scratch."""
    H = len(c)
    acc = [c[k] for k in range(H)]
    for v in ids[:i]:
        for k in range(H):
            acc[k] += W[k][v]
    return np.array([_sig(a) for a in acc])


def softmax(z):
    m = max(z)
    e = [math.exp(x - m) for x in z]
    s = sum(e)
    return np.array([x / s for x in e])


def docnade_nll(ids, W, c, U, b):
    total = 0.0
    for i in range(1, len(ids) + 1):
        h = docnade_hidden(ids, i - 1, W, c)
        p = softmax([b[v] + sum(U[v][k] * h[k] for k in range(len(c))) for v in range(len(b))])
        total -= math.log(p[ids[i - 1]])
    return total


def max_fd_error(loss, params: dict, grads: dict, eps: float = 1e-5) -> tuple[float, str]:
    """Worst relative error between analytic ``grads`` and central differences of ``loss``.

    ``params`` maps names to arrays that ``loss`` reads in place.
    """
    worst, where = 0.0, ""
    for name, arr in params.items():
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + eps
            up = loss()
            arr[idx] = old - eps
            down = loss()
            arr[idx] = old
            num = (up - down) / (2 * eps)
            a = float(grads[name][idx])
            err = abs(a - num) / max(abs(a), abs(num), 1e-8)
            if err > worst:
                worst, where = err, f"{name}{idx}"
    return worst, where


def isotonic_brute_force(y, w=None):
    """Best non-decreasing step fit by exhaustive search over contiguous partitions.

    Each block takes its weighted mean; among partitions whose block means are
    non-decreasing, the one with the least weighted squared error wins.
    """
    n = len(y)
    w = [1.0] * n if w is None else list(w)
    best, best_fit = math.inf, None
    for mask in range(1 << (n - 1)):
        cuts = [0] + [i + 1 for i in range(n - 1) if mask >> i & 1] + [n]
        means = []
        for a, b in zip(cuts, cuts[1:]):
            means.append(sum(y[i] * w[i] for i in range(a, b)) / sum(w[a:b]))
        if any(m2 < m1 - 1e-15 for m1, m2 in zip(means, means[1:])):
            continue
        fit = [m for (a, b), m in zip(zip(cuts, cuts[1:]), means) for _ in range(a, b)]
        err = sum(wi * (yi - fi) ** 2 for yi, fi, wi in zip(y, fit, w))
        if err < best - 1e-15:
            best, best_fit = err, fit
    return np.array(best_fit)


def ranking_oracle(score_rows, ticket_ids, relevant_sets, ks=(1, 5, 10)):
    """Definitional MAP/MRR/Acc straight from per-query sorted relevance lists."""
    per_query = []
    for scores, rel in zip(score_rows, relevant_sets):
        if not rel:
            continue
        order = sorted(zip(scores, ticket_ids), key=lambda p: (-p[0], p[1]))
        flags = [tid in rel for _, tid in order]
        per_query.append((flags, len(rel)))
    out = {}
    for k in ks:
        aps = []
        for flags, R in per_query:
            precs = [sum(flags[:i + 1]) / (i + 1) for i in range(min(k, len(flags))) if flags[i]]
            aps.append(sum(precs) / min(k, R))
        out[f"map@{k}"] = sum(aps) / len(aps)
    for k in ks:
        rr = []
        for flags, _ in per_query:
            hits = [i for i in range(min(k, len(flags))) if flags[i]]
            rr.append(1.0 / (hits[0] + 1) if hits else 0.0)
        out[f"mrr@{k}"] = sum(rr) / len(rr)
    for k in ks:
        out[f"acc@{k}"] = sum(any(f[:k]) for f, _ in per_query) / len(per_query)
    return out
