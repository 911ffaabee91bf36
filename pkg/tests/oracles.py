"""Independent oracles: brute-force enumeration and vertex search.

These deliberately avoid the package's solver paths so that tests compare
two independent routes to the same value.
"""

from __future__ import annotations

import itertools

import numpy as np


def brute_force_optimum(S, reviewer_load, paper_load):
    """Exhaustive maximum sum-similarity deterministic assignment.

    Enumerates, paper by paper, every reviewer subset of the required size
    that respects the remaining reviewer loads. Only viable for n, d <= 5-ish.
    """
    S = np.asarray(S, dtype=float)
    n, d = S.shape
    k = np.broadcast_to(np.asarray(reviewer_load, dtype=int), (n,)).copy()
    l = np.broadcast_to(np.asarray(paper_load, dtype=int), (d,)).copy()
    best = [-np.inf, None]

    def rec(p, loads, value, chosen):
        if p == d:
            if value > best[0]:
                best[0] = value
                best[1] = [list(c) for c in chosen]
            return
        for combo in itertools.combinations(range(n), l[p]):
            if any(loads[r] == 0 for r in combo):
                continue
            for r in combo:
                loads[r] -= 1
            chosen.append(combo)
            rec(p + 1, loads, value + sum(S[r, p] for r in combo), chosen)
            chosen.pop()
            for r in combo:
                loads[r] += 1

    rec(0, k, 0.0, [])
    if best[1] is None:
        raise ValueError("no feasible deterministic assignment")
    M = np.zeros((n, d), dtype=np.int8)
    for p, combo in enumerate(best[1]):
        M[list(combo), p] = 1
    return float(best[0]), M


def enumerate_lp_vertices(c, A_ub, b_ub, A_eq, b_eq, lower, upper):
    """Maximize c @ x over a tiny polytope by enumerating basic solutions.

    Tries every choice of active constraints (equalities always active,
    plus inequality rows and variable bounds) whose system is square and
    solvable, keeps the feasible ones, and returns (best_value, best_x).
    Exponential; for a handful of variables only.
    """
    c = np.asarray(c, dtype=float)
    nv = c.size
    rows = []
    rhs = []
    if A_eq is not None:
        for row, b in zip(np.atleast_2d(A_eq), np.atleast_1d(b_eq)):
            rows.append((np.asarray(row, dtype=float), float(b), True))
    if A_ub is not None:
        for row, b in zip(np.atleast_2d(A_ub), np.atleast_1d(b_ub)):
            rows.append((np.asarray(row, dtype=float), float(b), False))
    for i in range(nv):
        e = np.zeros(nv)
        e[i] = 1.0
        if lower[i] is not None:
            rows.append((e.copy(), float(lower[i]), False))
        if upper[i] is not None:
            rows.append((e.copy(), float(upper[i]), False))

    eq_idx = [i for i, r in enumerate(rows) if r[2]]
    ineq_idx = [i for i, r in enumerate(rows) if not r[2]]
    need = nv - len(eq_idx)
    best_val, best_x = -np.inf, None
    for extra in itertools.combinations(ineq_idx, max(need, 0)):
        idx = eq_idx + list(extra)
        A = np.array([rows[i][0] for i in idx])
        b = np.array([rows[i][1] for i in idx])
        if A.shape[0] != nv or abs(np.linalg.det(A)) < 1e-12:
            continue
        x = np.linalg.solve(A, b)
        if not _feasible(x, A_ub, b_ub, A_eq, b_eq, lower, upper):
            continue
        val = float(c @ x)
        if val > best_val + 1e-12:
            best_val, best_x = val, x
    if best_x is None:
        raise ValueError("polytope is empty")
    return best_val, best_x


def _feasible(x, A_ub, b_ub, A_eq, b_eq, lower, upper, tol=1e-9):
    if A_ub is not None and np.any(np.atleast_2d(A_ub) @ x > np.atleast_1d(b_ub) + tol):
        return False
    if A_eq is not None and np.any(np.abs(np.atleast_2d(A_eq) @ x - np.atleast_1d(b_eq)) > tol):
        return False
    for i, xi in enumerate(x):
        if lower[i] is not None and xi < lower[i] - tol:
            return False
        if upper[i] is not None and xi > upper[i] + tol:
            return False
    return True


def brute_force_matching_size(edges, rev_caps, pap_caps):
    """Maximum capacitated matching cardinality by pruned subset search."""
    edges = list(edges)
    rev_caps = dict(enumerate(np.asarray(rev_caps, dtype=int)))
    pap_caps = dict(enumerate(np.asarray(pap_caps, dtype=int)))
    best = [0]

    def rec(i, rc, pc, size):
        if size + (len(edges) - i) <= best[0]:
            return
        if i == len(edges):
            best[0] = max(best[0], size)
            return
        r, p = edges[i]
        if rc[r] > 0 and pc[p] > 0:
            rc[r] -= 1
            pc[p] -= 1
            rec(i + 1, rc, pc, size + 1)
            rc[r] += 1
            pc[p] += 1
        rec(i + 1, rc, pc, size)

    rec(0, rev_caps, pap_caps, 0)
    return best[0]


def two_point_second_moment(mu: float) -> float:
    """E[X^2] of the floor/ceiling two-point distribution with mean mu."""
    import math

    lo, hi = math.floor(mu), math.ceil(mu)
    if lo == hi:
        return float(mu * mu)
    p_hi = mu - lo
    return float(p_hi * hi * hi + (1.0 - p_hi) * lo * lo)


def binomial_3sigma(p: float, n: int) -> float:
    """Half-width of the 3-sigma band for a frequency estimate."""
    return 3.0 * np.sqrt(max(p * (1.0 - p), 1e-12) / n)
