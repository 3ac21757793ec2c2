"""Statistical tests and summaries used by the experiment harness.

Rank-sum comparisons between treatment groups, Fisher's exact test for
solved-count tables, Pearson correlation with a t-test, and bootstrapped
median confidence intervals with optional median-filter smoothing.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.special import stdtr

EXACT_RANKSUM_LIMIT = 12  # exact enumeration up to this many pooled values

_ALTERNATIVES = ("two-sided", "greater", "less")


def _midranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied values share the mean of their rank range."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_ranksum_p(pooled: np.ndarray, n_a: int, u_obs: float, alternative: str) -> float:
    ranks = _midranks(pooled)
    n = len(pooled)
    mu = n_a * (n - n_a) / 2.0
    offset = n_a * (n_a + 1) / 2.0
    hits = 0
    total = 0
    for combo in itertools.combinations(range(n), n_a):
        u = ranks[list(combo)].sum() - offset
        total += 1
        if alternative == "greater":
            hits += u >= u_obs - 1e-12
        elif alternative == "less":
            hits += u <= u_obs + 1e-12
        else:
            hits += abs(u - mu) >= abs(u_obs - mu) - 1e-12
    return hits / total


def rank_sum(sample_a, sample_b, alternative: str = "two-sided") -> tuple[float, float]:
    """Mann-Whitney-Wilcoxon rank-sum test.

    Returns (U, p) where U counts, with midrank tie handling, how often values
    of the first sample exceed values of the second.  Small pooled samples
    (up to 12 values) are enumerated exactly; larger ones use the normal
    approximation with tie-corrected variance and continuity correction.
    ``alternative='greater'`` tests whether the first sample tends larger.
    """
    if alternative not in _ALTERNATIVES:
        raise ValueError(f"alternative must be one of {_ALTERNATIVES}")
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    n_a, n_b = a.size, b.size
    u = float(ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0)
    if n_a + n_b <= EXACT_RANKSUM_LIMIT:
        return u, _exact_ranksum_p(pooled, n_a, u, alternative)
    n = n_a + n_b
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float((counts.astype(np.float64) ** 3 - counts).sum())
    sigma_sq = n_a * n_b / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma_sq <= 0:
        return u, 1.0
    sigma = math.sqrt(sigma_sq)
    mu = n_a * n_b / 2.0
    if alternative == "greater":
        z = (u - mu - 0.5) / sigma
        p = _norm_sf(z)
    elif alternative == "less":
        z = (u - mu + 0.5) / sigma
        p = 1.0 - _norm_sf(z)
    else:
        z = (abs(u - mu) - 0.5) / sigma
        p = 2.0 * _norm_sf(z)
    return u, min(1.0, max(0.0, p))


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def fisher_exact(table) -> float:
    """Two-sided Fisher's exact test on a 2x2 count table.

    Sums the hypergeometric probabilities of every table (with the observed
    margins) that is no more probable than the observed one.  Tables with a
    zero margin carry no information and give p = 1.
    """
    (a, b), (c, d) = table
    counts = [int(a), int(b), int(c), int(d)]
    if any(x < 0 for x in counts):
        raise ValueError("table counts must be non-negative integers")
    a, b, c, d = counts
    row1, row2 = a + b, c + d
    col1 = a + c
    n = row1 + row2
    if row1 == 0 or row2 == 0 or col1 == 0 or col1 == n:
        return 1.0
    denom = math.comb(n, col1)
    lo = max(0, col1 - row2)
    hi = min(col1, row1)
    probs = {
        x: math.comb(row1, x) * math.comb(row2, col1 - x) / denom
        for x in range(lo, hi + 1)
    }
    observed = probs[a]
    return min(1.0, sum(p for p in probs.values() if p <= observed * (1 + 1e-9)))


def pearson_r(x, y) -> tuple[float, float]:
    """Pearson correlation and its two-sided t-test p-value.

    The null hypothesis is zero correlation; t = r * sqrt((n - 2) / (1 - r^2))
    with n - 2 degrees of freedom.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 3:
        raise ValueError("need two equal-length 1-d samples of at least 3 values")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0 or sy == 0:
        raise ValueError("correlation undefined for zero-variance input")
    r = float(dx @ dy) / math.sqrt(sx * sy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    df = x.size - 2
    t = r * math.sqrt(df / (1.0 - r * r))
    p = 2.0 * float(stdtr(df, -abs(t)))
    return r, p


def bootstrap_median_ci(
    sample,
    resamples: int = 5000,
    level: float = 0.95,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Percentile bootstrap confidence interval for the median."""
    data = np.asarray(sample, dtype=np.float64)
    if data.size == 0:
        raise ValueError("sample must be non-empty")
    if rng is None:
        rng = np.random.default_rng()
    idx = rng.integers(data.size, size=(resamples, data.size))
    medians = np.median(data[idx], axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.percentile(medians, [100.0 * alpha, 100.0 * (1.0 - alpha)])
    return float(lo), float(hi)


def median_filter(series, window: int = 101) -> np.ndarray:
    """Sliding-window median smoothing with truncated edge windows.

    The window must be odd; near the edges it shrinks to the available
    points.  When a truncated window holds an even number of values the lower
    of the two central values is used, which keeps integer series integral.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    data = np.asarray(series, dtype=np.float64)
    half = window // 2
    out = np.empty_like(data)
    for i in range(len(data)):
        chunk = np.sort(data[max(0, i - half) : i + half + 1])
        out[i] = chunk[(len(chunk) - 1) // 2]
    return out
