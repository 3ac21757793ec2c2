"""JIT-compiled inner loops of the community-detection refinement.

These Kernighan-Lin sweeps run once per unique network structure during
evolution and archive searches, so they are the hottest code in the package;
plain numpy spends more time dispatching than computing on such small
matrices.
"""

from __future__ import annotations

import numba
import numpy as np

_Q_EPS = 1e-12


@numba.njit(cache=True)
def kl_partition_sweeps(bsym, labels0):  # pragma: no cover - exercised via metrics
    """Multi-way KL refinement: every sweep relocates each node exactly once
    (best move first, improving or not) and keeps the best partition seen;
    sweeps repeat until one brings no improvement."""
    n = bsym.shape[0]
    diag = np.empty(n)
    for i in range(n):
        diag[i] = bsym[i, i]
    best = labels0.copy()
    best_val = 0.0
    for i in range(n):
        for j in range(n):
            if best[i] == best[j]:
                best_val += bsym[i, j]
    improved = True
    while improved:
        improved = False
        work = best.copy()
        val = best_val
        # ties[i, c]: total tie of node i to module c (one spare fresh column)
        ties = np.zeros((n, n + 1))
        for i in range(n):
            for j in range(n):
                ties[i, work[j]] += bsym[i, j]
        width = int(work.max()) + 2
        moved = np.zeros(n, numba.boolean)
        for _step in range(n):
            best_gain = -np.inf
            node = -1
            target = -1
            for i in range(n):
                if moved[i]:
                    continue
                own = ties[i, work[i]] - diag[i]
                for t in range(width):
                    if t == work[i]:
                        continue
                    gain = ties[i, t] - own
                    if gain > best_gain:
                        best_gain = gain
                        node = i
                        target = t
            val += 2.0 * best_gain
            source = work[node]
            for r in range(n):
                ties[r, source] -= bsym[r, node]
                ties[r, target] += bsym[r, node]
            work[node] = target
            moved[node] = True
            if target == width - 1 and width <= n:
                width += 1
            if val > best_val + _Q_EPS:
                best_val = val
                best = work.copy()
                improved = True
    return best


@numba.njit(cache=True)
def kl_bisection_sweep(bgen, s0):  # pragma: no cover - exercised via metrics
    """Two-way KL refinement of a +/-1 split vector, maximizing s' bgen s."""
    n = bgen.shape[0]
    diag = np.empty(n)
    for i in range(n):
        diag[i] = bgen[i, i]
    best = s0.copy()
    best_val = 0.0
    for i in range(n):
        for j in range(n):
            best_val += bgen[i, j] * best[i] * best[j]
    improved = True
    while improved:
        improved = False
        trial = best.copy()
        val = best_val
        ms = bgen @ trial
        moved = np.zeros(n, numba.boolean)
        for _step in range(n):
            best_gain = -np.inf
            node = -1
            for i in range(n):
                if moved[i]:
                    continue
                gain = -4.0 * trial[i] * (ms[i] - diag[i] * trial[i])
                if gain > best_gain:
                    best_gain = gain
                    node = i
            val += best_gain
            for r in range(n):
                ms[r] -= 2.0 * trial[node] * bgen[r, node]
            trial[node] = -trial[node]
            moved[node] = True
            if val > best_val + _Q_EPS:
                best_val = val
                best = trial.copy()
                improved = True
    return best
