"""Independent test oracles, kept out of the shipping library.

High-precision values come from mpmath; the transport oracle enumerates
every basis of the transportation polytope (all cell subsets of size
n + m - 1 whose constraint submatrix is nonsingular), solves each for its
flows, and minimizes over the feasible vertices.  Exact, and exhaustive
for instances up to 4 x 4.
"""

import itertools

import numpy as np


def bruteforce_w2(dist, a, b):
    """Exact transport cost by vertex enumeration (n, m <= 4).

    Cost matrix is dist**2, matching w2_discrete.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = len(a), len(b)
    assert n <= 4 and m <= 4, "vertex enumeration oracle is for tiny instances"
    cost = np.asarray(dist, dtype=float) ** 2
    cells = [(i, j) for i in range(n) for j in range(m)]
    # constraint rows: n row sums + m column sums, one dropped (redundant)
    rhs = np.concatenate([a, b])[:-1]
    best = np.inf
    best_plan = None
    for basis in itertools.combinations(cells, n + m - 1):
        mat = np.zeros((n + m - 1, n + m - 1))
        for k, (i, j) in enumerate(basis):
            mat[i, k] = 1.0
            if n + j < n + m - 1:
                mat[n + j, k] = 1.0
        try:
            flows = np.linalg.solve(mat, rhs)
        except np.linalg.LinAlgError:
            continue
        if np.any(flows < -1e-12):
            continue
        plan = np.zeros((n, m))
        for k, (i, j) in enumerate(basis):
            plan[i, j] = max(flows[k], 0.0)
        value = float((plan * cost).sum())
        if value < best:
            best = value
            best_plan = plan
    return best, best_plan


def quantile_w2_exact(x, a, y, b):
    """Closed-form squared W2 for atomic measures via merged breakpoints."""
    fa = np.cumsum(a)
    fb = np.cumsum(b)
    cuts = np.union1d(fa, fb)
    cuts = np.concatenate([[0.0], cuts[cuts <= 1 + 1e-15]])
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo < 1e-15:
            continue
        mid = 0.5 * (lo + hi)
        xi = x[min(np.searchsorted(fa, mid), len(x) - 1)]
        yj = y[min(np.searchsorted(fb, mid), len(y) - 1)]
        total += (xi - yj) ** 2 * (hi - lo)
    return total
