"""Slow, obviously-correct reference computations used by the test-suite.

None of these share code with the production paths they check.
"""

from __future__ import annotations

import math
from collections import Counter

import numpy as np


def naive_pairwise_distances(X):
    X = np.asarray(X, dtype=float)
    n = len(X)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for a, b in zip(X[i], X[j]):
                s += (a - b) ** 2
            D[i, j] = math.sqrt(s)
    return D


def _first_occurrence(labels):
    seen = {}
    return np.array([seen.setdefault(l, len(seen)) for l in labels])


def naive_agglomerative(X, k, linkage, tie_tol=1e-12):
    """Recompute every inter-cluster dissimilarity from scratch at each merge."""
    X = np.asarray(X, dtype=float)
    clusters = [[i] for i in range(len(X))]

    def dissim(A, B):
        if linkage == "single":
            return min(math.dist(X[a], X[b]) for a in A for b in B)
        ca = X[A].mean(axis=0)
        cb = X[B].mean(axis=0)
        return len(A) * len(B) / (len(A) + len(B)) * float(((ca - cb) ** 2).sum())

    while len(clusters) > k:
        cands = []
        for p in range(len(clusters)):
            for q in range(p + 1, len(clusters)):
                A, B = clusters[p], clusters[q]
                key = tuple(sorted((min(A), min(B))))
                cands.append((dissim(A, B), key, p, q))
        best = min(c[0] for c in cands)
        tied = [c for c in cands if c[0] <= best + tie_tol]
        _, _, p, q = min(tied, key=lambda c: c[1])
        merged = clusters[p] + clusters[q]
        clusters = [c for r, c in enumerate(clusters) if r not in (p, q)] + [merged]
    labels = np.empty(len(X), dtype=int)
    for cid, members in enumerate(clusters):
        labels[members] = cid
    return _first_occurrence(labels)


def pair_counts(truth, pred):
    """(TP, FP, FN, TN) over all unordered point pairs."""
    tp = fp = fn = tn = 0
    n = len(truth)
    for i in range(n):
        for j in range(i + 1, n):
            same_t = truth[i] == truth[j]
            same_p = pred[i] == pred[j]
            if same_t and same_p:
                tp += 1
            elif same_p:
                fp += 1
            elif same_t:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


def pair_ari(truth, pred):
    tp, fp, fn, tn = pair_counts(truth, pred)
    den = (tp + fn) * (fn + tn) + (tp + fp) * (fp + tn)
    if den == 0:
        return 1.0
    return 2.0 * (tp * tn - fn * fp) / den


def pair_fowlkes_mallows(truth, pred):
    tp, fp, fn, _ = pair_counts(truth, pred)
    if tp + fp == 0 and tp + fn == 0:
        return 1.0
    if tp == 0:
        return 0.0
    return tp / math.sqrt((tp + fp) * (tp + fn))


def _H(labels):
    n = len(labels)
    return -sum(c / n * math.log(c / n) for c in Counter(labels).values())


def _H_cond(a, b):
    """H(a | b) by explicit enumeration of the joint counts."""
    n = len(a)
    joint = Counter(zip(a, b))
    marg = Counter(b)
    return -sum(c / n * math.log(c / marg[y]) for (_, y), c in joint.items())


def _MI(a, b):
    n = len(a)
    joint = Counter(zip(a, b))
    ca, cb = Counter(a), Counter(b)
    return sum(c / n * math.log(n * c / (ca[x] * cb[y])) for (x, y), c in joint.items())


def entropy_metrics(truth, pred):
    """(homogeneity, completeness, v_measure) from conditional entropies."""
    truth, pred = list(truth), list(pred)
    hc, hk = _H(truth), _H(pred)
    h = 1.0 if hc == 0 else 1 - _H_cond(truth, pred) / hc
    c = 1.0 if hk == 0 else 1 - _H_cond(pred, truth) / hk
    v = 0.0 if h + c == 0 else 2 * h * c / (h + c)
    return h, c, v


def _multiset_permutations(items):
    counts = Counter(items)
    keys = sorted(counts)
    n = len(items)
    out = []
    cur = []

    def rec():
        if len(cur) == n:
            out.append(tuple(cur))
            return
        for key in keys:
            if counts[key]:
                counts[key] -= 1
                cur.append(key)
                rec()
                cur.pop()
                counts[key] += 1

    rec()
    return out


def brute_expected_mi(truth, pred):
    """Average MI over every distinct rearrangement of ``pred``."""
    truth = list(truth)
    _, t = np.unique(truth, return_inverse=True)
    perms = np.array(_multiset_permutations(list(pred)))
    _, p = np.unique(perms, return_inverse=True)
    p = p.reshape(perms.shape)
    n = len(truth)
    r, c = t.max() + 1, p.max() + 1
    A = np.eye(r)[t]  # n x r
    B = np.eye(c)[p]  # P x n x c
    joint = np.einsum("nr,pnc->prc", A, B)
    a = A.sum(axis=0)[None, :, None]
    b = B.sum(axis=1)[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(joint > 0, joint / n * np.log(n * joint / (a * b)), 0.0)
    return float(terms.sum(axis=(1, 2)).mean())


def brute_ami(truth, pred):
    mi = _MI(list(truth), list(pred))
    emi = brute_expected_mi(truth, pred)
    mean_h = (_H(list(truth)) + _H(list(pred))) / 2
    den = mean_h - emi
    if abs(den) <= 1e-15 * max(1.0, mean_h):
        return 1.0
    return (mi - emi) / den


def naive_silhouette(D, labels):
    D = np.asarray(D, dtype=float)
    n = len(labels)
    total = 0.0
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            continue
        a = sum(D[i, j] for j in own) / len(own)
        b = math.inf
        for c in set(labels):
            if c == labels[i]:
                continue
            other = [j for j in range(n) if labels[j] == c]
            b = min(b, sum(D[i, j] for j in other) / len(other))
        m = max(a, b)
        total += 0.0 if m == 0 else (b - a) / m
    return total / n


def explicit_linear_decision(support_vectors, dual_coef, bias, x):
    """w . x + b with w = sum_i alpha_i y_i x_i formed explicitly."""
    w = np.zeros(len(x))
    for sv, coef in zip(support_vectors, dual_coef):
        w += coef * np.asarray(sv, dtype=float)
    return float(w @ np.asarray(x, dtype=float) + bias)


def closed_form_weighted_ridge(Z, y, w, alpha):
    """Intercept-unpenalized weighted ridge via the normal equations.

    Returns (intercept, coef) solving (Zc' W Zc + alpha I) coef = Zc' W yc
    on weighted-mean-centered data.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    zbar = (w[:, None] * Z).sum(axis=0) / w.sum()
    ybar = (w * y).sum() / w.sum()
    Zc, yc = Z - zbar, y - ybar
    W = np.diag(w)
    coef = np.linalg.solve(Zc.T @ W @ Zc + alpha * np.eye(Z.shape[1]), Zc.T @ W @ yc)
    return float(ybar - zbar @ coef), coef


def platt_gradient_descent(decisions, labels, max_iter=200_000, gtol=1e-11):
    """Minimize the smoothed-target sigmoid cross-entropy by backtracking gradient descent."""
    f = np.asarray(decisions, dtype=float)
    pos = np.asarray(labels) > 0
    n_pos, n_neg = pos.sum(), (~pos).sum()
    t = np.where(pos, (n_pos + 1) / (n_pos + 2), 1 / (n_neg + 2))

    def loss(A, B):
        z = A * f + B
        # -[t log p + (1-t) log(1-p)], p = 1 / (1 + e^z)
        return float(np.sum(t * np.logaddexp(0, z) + (1 - t) * np.logaddexp(0, -z)))

    def grad(A, B):
        z = A * f + B
        p = 1 / (1 + np.exp(z))
        g = t - p
        return float(g @ f), float(g.sum())

    A, B = 0.0, math.log((n_neg + 1) / (n_pos + 1))
    step = 1.0
    for _ in range(max_iter):
        gA, gB = grad(A, B)
        gn = gA * gA + gB * gB
        if math.sqrt(gn) < gtol:
            break
        cur = loss(A, B)
        step = min(step * 2, 1e3)
        while loss(A - step * gA, B - step * gB) > cur - 0.5 * step * gn:
            step /= 2
            if step < 1e-20:
                break
        A, B = A - step * gA, B - step * gB
    return A, B
