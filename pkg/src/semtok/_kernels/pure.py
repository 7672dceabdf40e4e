"""Pure numpy implementations of the hot kernels.

These mirror ``_core.pyx`` exactly; the package selects whichever backend
is available at import time. Accumulations that feed deterministic
contracts (centroid sums, group means) run in ascending-row order here
too: ``np.bincount`` adds its inputs sequentially, which matches the
compiled loop bit for bit.
"""

from __future__ import annotations

import numpy as np


def assign_cosine(x: np.ndarray, centers: np.ndarray):
    """Nearest center by cosine for unit rows ``x`` against unit ``centers``.

    Returns (labels int32, objective, per-point distance 1 - cos). Ties go
    to the lowest center index.
    """
    scores = x @ centers.T
    labels = np.argmax(scores, axis=1).astype(np.int32)
    best = scores[np.arange(x.shape[0]), labels]
    dists = 1.0 - best
    return labels, float(dists.sum()), dists


def assign_euclidean(x: np.ndarray, centers: np.ndarray):
    """Nearest center by squared L2. Same conventions as assign_cosine."""
    sq = (
        np.sum(x * x, axis=1)[:, None]
        - 2.0 * (x @ centers.T)
        + np.sum(centers * centers, axis=1)[None, :]
    )
    labels = np.argmin(sq, axis=1).astype(np.int32)
    diff = x - centers[labels]
    dists = np.einsum("ij,ij->i", diff, diff)
    return labels, float(dists.sum()), dists


def accumulate_rows(x: np.ndarray, labels: np.ndarray, k: int):
    """Per-label row sums and counts, accumulated in ascending row order."""
    n, d = x.shape
    sums = np.zeros((k, d), dtype=np.float64)
    for j in range(d):
        sums[:, j] = np.bincount(labels, weights=x[:, j], minlength=k)
    counts = np.bincount(labels, minlength=k).astype(np.int64)
    return sums, counts


def min_dist_update_cosine(x: np.ndarray, center: np.ndarray, d2: np.ndarray) -> None:
    np.minimum(d2, 1.0 - x @ center, out=d2)


def min_dist_update_euclidean(x: np.ndarray, center: np.ndarray, d2: np.ndarray) -> None:
    diff = x - center
    np.minimum(d2, np.einsum("ij,ij->i", diff, diff), out=d2)


def nearest_neighbor_cosine(x: np.ndarray) -> np.ndarray:
    """For each unit row, the index of its most-cosine-similar other row.

    Ties break to the lowest index; computed in row blocks to bound memory.
    """
    n = x.shape[0]
    nn = np.empty(n, dtype=np.int64)
    block = max(1, min(n, 8_388_608 // max(n, 1)))
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        scores = x[lo:hi] @ x.T
        scores[np.arange(lo, hi) - lo, np.arange(lo, hi)] = -np.inf
        nn[lo:hi] = np.argmax(scores, axis=1)
    return nn


def infonce_loss_grad(a: np.ndarray, b: np.ndarray, tau: float, symmetric: bool):
    """InfoNCE over cosine similarities with in-batch negatives.

    ``a``/``b`` are the raw (unnormalized) float64 rows of the paired
    sides. Returns (loss, grad_a, grad_b) where the gradients are with
    respect to the raw rows, chain rule through the L2 normalization
    included. Log-sum-exp uses max subtraction.
    """
    m = a.shape[0]
    na = np.sqrt(np.sum(a * a, axis=1))
    nb = np.sqrt(np.sum(b * b, axis=1))
    u = a / na[:, None]
    v = b / nb[:, None]
    z = (u @ v.T) / tau

    row_max = z.max(axis=1, keepdims=True)
    pf = np.exp(z - row_max)
    row_sum = pf.sum(axis=1, keepdims=True)
    pf /= row_sum
    lse_rows = np.log(row_sum[:, 0]) + row_max[:, 0]
    diag = np.diagonal(z)
    loss_fwd = float(np.mean(lse_rows - diag))

    eye = np.eye(m)
    g = (pf - eye) / (m * tau)
    loss = loss_fwd
    if symmetric:
        col_max = z.max(axis=0, keepdims=True)
        pb = np.exp(z - col_max)
        col_sum = pb.sum(axis=0, keepdims=True)
        pb /= col_sum
        lse_cols = np.log(col_sum[0, :]) + col_max[0, :]
        loss_bwd = float(np.mean(lse_cols - diag))
        g = 0.5 * (g + (pb - eye) / (m * tau))
        loss = 0.5 * (loss_fwd + loss_bwd)

    gu = g @ v
    gv = g.T @ u
    ga = (gu - np.sum(gu * u, axis=1, keepdims=True) * u) / na[:, None]
    gb = (gv - np.sum(gv * v, axis=1, keepdims=True) * v) / nb[:, None]
    return loss, ga, gb
