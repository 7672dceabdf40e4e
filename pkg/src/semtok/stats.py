"""Pearson correlation with an analytic one-tail p-value.

The p-value comes from the exact t transform and a hand-rolled
regularized incomplete beta (continued fraction, 1e-12 convergence), so
there is no statistics dependency. A seeded permutation test is provided
as an independent cross-check of the analytic tail.
"""

from __future__ import annotations

import math
from itertools import permutations
from typing import Sequence

import numpy as np

from .errors import DataError

_CF_TOL = 1e-12
_CF_MAX_ITERS = 500

# exhaustive permutation tests are capped at 9! = 362,880 arrangements
EXHAUSTIVE_LIMIT = 9


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) via the continued fraction (Lentz), both symmetries."""
    if a <= 0 or b <= 0:
        raise DataError(f"beta parameters must be positive, got a={a}, b={b}")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        a * math.log(x)
        + b * math.log1p(-x)
        - (math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def _beta_cf(a: float, b: float, x: float) -> float:
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITERS + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_TOL:
            return h
    raise DataError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def student_t_upper_tail(t: float, dof: float) -> float:
    """P(T >= t) for Student's t with ``dof`` degrees of freedom."""
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = dof / (dof + t * t)
    tail = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, x)
    return tail if t >= 0 else 1.0 - tail


def _validated(xs: Sequence[float], ys: Sequence[float]):
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise DataError("inputs must be 1-D sequences")
    if len(x) != len(y):
        raise DataError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise DataError(f"need at least 3 observations, got {len(x)}")
    return x, y


def _corrcoef(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise DataError("zero variance in at least one input")
    r = float(dx @ dy) / math.sqrt(sx * sy)
    return min(1.0, max(-1.0, r))


def pearson(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """(rho, one-tail p) where p = P(rho_null >= rho_observed).

    Two-pass float64 product-moment rho; p from t = rho*sqrt((n-2)/(1-rho^2))
    against the t distribution with n-2 degrees of freedom.
    """
    x, y = _validated(xs, ys)
    r = _corrcoef(x, y)
    n = len(x)
    if r >= 1.0:
        return 1.0, 0.0
    if r <= -1.0:
        return -1.0, 1.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, student_t_upper_tail(t, n - 2)


def pearson_permutation_p(
    xs: Sequence[float],
    ys: Sequence[float],
    *,
    n_samples: int = 10_000,
    seed: int = 0,
) -> float:
    """One-tail p estimated by permuting ``ys``: P(rho_perm >= rho_obs).

    Exhaustive for n <= 9 (exact); otherwise ``n_samples`` seeded draws
    with the add-one estimator (the identity permutation counts once).
    """
    x, y = _validated(xs, ys)
    r_obs = _corrcoef(x, y)

    # centering is permutation-invariant, so center once and permute
    dx = x - x.mean()
    cy = y - y.mean()
    denom = math.sqrt(float(dx @ dx) * float(cy @ cy))
    if denom == 0.0:
        raise DataError("zero variance in at least one input")

    n = len(x)
    # compare with a tiny cushion so FP noise cannot flip the >= at the
    # observed value itself
    threshold = (r_obs - 1e-12) * denom
    if n <= EXHAUSTIVE_LIMIT:
        dxs = tuple(dx.tolist())
        hits = 0
        total = 0
        for p in permutations(cy.tolist()):
            total += 1
            if sum(a * b for a, b in zip(dxs, p)) >= threshold:
                hits += 1
        return hits / total
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(n_samples):
        if float(dx @ cy[rng.permutation(n)]) >= threshold:
            hits += 1
    return (hits + 1) / (n_samples + 1)
