"""Rank-correlation statistics: Kendall tau-b, tau-c, and Spearman rho.

Tau counts are exact integers. Two count paths exist — O(n^2) pair
enumeration and an O(n log n) merge-sort path — and both feed the same final
float expression, so they agree bitwise. Spearman uses average ranks (exact
floats for tied runs of integers) and a Pearson kernel built on ``math.fsum``,
whose result does not depend on summation order.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateRankingError, DimensionMismatchError

# above this n the merge-sort path is used when method="auto"
_FAST_PATH_CUTOVER = 512


def _paired(x, y):
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.ndim != 1 or ya.ndim != 1 or xa.shape != ya.shape:
        raise DimensionMismatchError("x and y must be 1-d sequences of equal length")
    if xa.shape[0] < 2:
        raise DegenerateRankingError("need at least two observations")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise DegenerateRankingError("non-finite values in ranking input")
    return xa, ya


def _require_variation(xa, ya):
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise DegenerateRankingError("degenerate ranking: a variable is constant")


def _pair_counts_exact(xa, ya):
    """Brute-force pair classification. Returns (C, D, tx_only, ty_only)."""
    n = len(xa)
    concordant = discordant = tx_only = ty_only = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = xa[i] - xa[j]
            dy = ya[i] - ya[j]
            if dx == 0 and dy == 0:
                continue
            if dx == 0:
                tx_only += 1
            elif dy == 0:
                ty_only += 1
            elif (dx > 0) == (dy > 0):
                concordant += 1
            else:
                discordant += 1
    return concordant, discordant, tx_only, ty_only


def _count_inversions(values: list) -> int:
    """Pairs (i, j) with i < j and values[i] > values[j]; ties not counted."""
    a = list(values)
    buf = [0.0] * len(a)
    inversions = 0
    width = 1
    n = len(a)
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[i] <= a[j]:
                    buf[k] = a[i]
                    i += 1
                else:
                    inversions += mid - i
                    buf[k] = a[j]
                    j += 1
                k += 1
            buf[k:hi] = a[i:mid] if i < mid else a[j:hi]
            a[lo:hi] = buf[lo:hi]
        width *= 2
    return inversions


def _tie_pairs(sorted_vals) -> int:
    """Sum over runs of equal values of t*(t-1)/2."""
    total = 0
    run = 1
    for prev, cur in zip(sorted_vals, sorted_vals[1:]):
        if cur == prev:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


def _pair_counts_fast(xa, ya):
    """Merge-sort pair classification; same integer counts as the exact path."""
    n = len(xa)
    order = np.lexsort((ya, xa))
    xs = xa[order]
    ys = ya[order]

    n0 = n * (n - 1) // 2
    n1 = _tie_pairs(xs.tolist())                       # ties in x (incl. both)
    n2 = _tie_pairs(np.sort(ya).tolist())              # ties in y (incl. both)
    pairs_xy = list(zip(xs.tolist(), ys.tolist()))
    n3 = _tie_pairs(pairs_xy)                          # ties in both
    discordant = _count_inversions(ys.tolist())
    concordant = n0 - n1 - n2 + n3 - discordant
    tx_only = n1 - n3
    ty_only = n2 - n3
    return concordant, discordant, tx_only, ty_only


def _counts(x, y, method: str):
    xa, ya = _paired(x, y)
    _require_variation(xa, ya)
    if method == "exact":
        return xa, ya, _pair_counts_exact(xa, ya)
    if method == "fast":
        return xa, ya, _pair_counts_fast(xa, ya)
    if method == "auto":
        picked = _pair_counts_fast if len(xa) > _FAST_PATH_CUTOVER else _pair_counts_exact
        return xa, ya, picked(xa, ya)
    raise ValueError(f"unknown method {method!r}")


def _tau_b_from_counts(concordant, discordant, tx_only, ty_only) -> float:
    f_x = concordant + discordant + tx_only
    f_y = concordant + discordant + ty_only
    if f_x == 0 or f_y == 0:
        raise DegenerateRankingError("degenerate ranking: no comparable pairs")
    return (concordant - discordant) / math.sqrt(f_x * f_y)


def kendall_tau_b(x, y, method: str = "auto") -> float:
    """Tau with symmetric tie correction; errors on a constant variable."""
    _, _, (c, d, tx, ty) = _counts(x, y, method)
    return _tau_b_from_counts(c, d, tx, ty)


def kendall_tau_c(x, y, method: str = "auto") -> float:
    """Tau with the rectangular-contingency correction 2m(C-D)/(n^2(m-1)),
    where m is the smaller count of distinct values."""
    xa, ya, (c, d, _, _) = _counts(x, y, method)
    m = min(len(np.unique(xa)), len(np.unique(ya)))
    if m < 2:
        raise DegenerateRankingError("degenerate ranking: fewer than two distinct values")
    n = len(xa)
    return 2 * m * (c - d) / (n * n * (m - 1))


def average_ranks(values) -> np.ndarray:
    """Ranks starting at 1; ties share the mean of the ranks they span."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v), dtype=np.float64)
    i = 0
    n = len(v)
    while i < n:
        j = i
        while j + 1 < n and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 1.0 + (i + j) / 2.0
        i = j + 1
    return ranks


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    n = len(a)
    mean_a = math.fsum(a) / n
    mean_b = math.fsum(b) / n
    da = [v - mean_a for v in a]
    db = [v - mean_b for v in b]
    cov = math.fsum(u * w for u, w in zip(da, db))
    var_a = math.fsum(u * u for u in da)
    var_b = math.fsum(w * w for w in db)
    if var_a == 0.0 or var_b == 0.0:
        raise DegenerateRankingError("degenerate ranking: zero rank variance")
    return cov / math.sqrt(var_a * var_b)


def spearman_rho(x, y) -> float:
    """Pearson correlation of the average-ranked inputs."""
    xa, ya = _paired(x, y)
    _require_variation(xa, ya)
    return _pearson(average_ranks(xa), average_ranks(ya))


STATISTICS = {
    "kendall-b": kendall_tau_b,
    "kendall-c": kendall_tau_c,
    "spearman": spearman_rho,
}
