"""Numba kernels for the randomized rounding samplers.

Both samplers walk along fractional edges of a bipartite flow network
(source -> reviewers -> papers -> sink) until a vertex repeats, then push a
random amount of flow around the discovered cycle so that at least one edge
becomes integral while every edge's expected flow is preserved.

The partition-aware sampler runs the same walk on an *extended* network
with one intermediate node per (subset, paper) pair. The flow on the
virtual node->paper edge is that subset's load on the paper, recomputed
from the member edges on demand; bounding pushes by the load's distance to
its floor/ceiling yields the guard terms of the modified step size.

Vertex codes (plain):    reviewer r -> r, paper p -> n+p, source -> n+d.
Vertex codes (extended): reviewer r -> r, paper p -> n+p,
                         subset node (I, p) -> n+d+I*d+p, source -> n+d+m*d.
Path entry kinds: 0 = reviewer-paper edge, 1 = source edge, 2 = virtual
subset-load edge. ``cf[i]`` is True when edge i is traversed in its
E-direction (reviewer->paper, source->reviewer, subset-node->paper).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

#: Flows within this distance of an integer are treated as integral.
INTEGRALITY_TOL = 1e-7

#: Step sizes at or below this signal a stale cycle.
STALE_TOL = 1e-12


@njit(cache=True)
def _is_frac(x, tol):
    return abs(x - math.floor(x + 0.5)) > tol


@njit(cache=True)
def _sub_load(f, mem_off, mem_idx, I, p):
    t = 0.0
    for k in range(mem_off[I], mem_off[I + 1]):
        t += f[mem_idx[k], p]
    return t


@njit(cache=True)
def _walk_plain(f, row, tol, start_r, start_p, stamp_arr, pos_arr, stamp, ck, ca, cb, cf):
    """Deterministic fractional-edge walk from edge (start_r, start_p).

    Takes the lowest-indexed eligible fractional edge at every step and
    stops when a vertex repeats. Returns (j, L, status): the cycle is
    path[j:L]; status 1 flags a conservation breach (no continuation).
    """
    n, d = f.shape
    s_code = n + d
    ck[0] = 0
    ca[0] = start_r
    cb[0] = start_p
    cf[0] = True
    u = start_r
    v = n + start_p
    L = 1
    while stamp_arr[v] != stamp:
        stamp_arr[v] = stamp
        pos_arr[v] = L - 1
        if n <= v < s_code:  # paper: exit to another reviewer
            p = v - n
            w = -1
            for r in range(n):
                if r != u and _is_frac(f[r, p], tol):
                    w = r
                    break
            if w < 0:
                return 0, 0, 1
            ck[L] = 0
            ca[L] = w
            cb[L] = p
            cf[L] = False
            u, v = v, w
        elif v < n:  # reviewer: exit to another paper, else to the source
            r = v
            w = -1
            for p in range(d):
                if (n + p) != u and _is_frac(f[r, p], tol):
                    w = n + p
                    ck[L] = 0
                    ca[L] = r
                    cb[L] = p
                    cf[L] = True
                    break
            if w < 0:
                if u != s_code and _is_frac(row[r], tol):
                    w = s_code
                    ck[L] = 1
                    ca[L] = r
                    cb[L] = -1
                    cf[L] = False
                else:
                    return 0, 0, 1
            u, v = v, w
        else:  # source: exit to another reviewer
            w = -1
            for r in range(n):
                if r != u and _is_frac(row[r], tol):
                    w = r
                    break
            if w < 0:
                return 0, 0, 1
            ck[L] = 1
            ca[L] = w
            cb[L] = -1
            cf[L] = True
            u, v = v, w
        L += 1
    return pos_arr[v] + 1, L, 0


@njit(cache=True)
def _push(f, row, kcap, mem_off, mem_idx, tol, ck, ca, cb, cf, j, L, u01):
    """One randomized rounding push along the cycle path[j:L].

    Edges traversed like path[j] form class A. With probability
    beta/(alpha+beta) subtract alpha on A and add it on B, else the
    reverse with beta. Returns nonzero on a stale cycle.
    """
    e1fwd = cf[j]
    alpha = 1e300
    beta = 1e300
    for i in range(j, L):
        k = ck[i]
        if k == 0:
            val = f[ca[i], cb[i]]
            lo = 0.0
            hi = 1.0
        elif k == 1:
            val = row[ca[i]]
            lo = 0.0
            hi = kcap[ca[i]]
        else:
            val = _sub_load(f, mem_off, mem_idx, ca[i], cb[i])
            lo = math.floor(val)
            hi = lo + 1.0
        if cf[i] == e1fwd:
            if val - lo < alpha:
                alpha = val - lo
            if hi - val < beta:
                beta = hi - val
        else:
            if hi - val < alpha:
                alpha = hi - val
            if val - lo < beta:
                beta = val - lo
    if alpha <= STALE_TOL or beta <= STALE_TOL:
        return 1
    delta = -alpha if u01 < beta / (alpha + beta) else beta
    for i in range(j, L):
        dd = delta if cf[i] == e1fwd else -delta
        if ck[i] == 0:
            f[ca[i], cb[i]] += dd
        elif ck[i] == 1:
            row[ca[i]] += dd
        # virtual edges carry no separate storage: the member-edge update
        # shifts the recomputed subset load by the same amount
    return 0


@njit(cache=True)
def _walk_part(f, row, sub, mem_off, mem_idx, m, tol, stamp_arr, pos_arr, stamp, ck, ca, cb, cf):
    """Fractional-edge walk on the extended (subset-node) network.

    A reviewer-paper edge leads into the reviewer's subset node for that
    paper. At a subset node the walk prefers returning to another reviewer
    of the same subset; only when none is available does it cross the
    virtual load edge into the paper (recording a guard), mirroring the
    same-subset-first rule of the loop-finding subroutine.
    """
    n, d = f.shape
    s_code = n + d + m * d
    # start at the lowest fractional reviewer-paper edge handed in via ca/cb[0]
    start_r = ca[0]
    start_p = cb[0]
    ck[0] = 0
    cf[0] = True
    u = start_r
    v = n + d + sub[start_r] * d + start_p
    L = 1
    while stamp_arr[v] != stamp:
        stamp_arr[v] = stamp
        pos_arr[v] = L - 1
        if v < n:  # reviewer
            r = v
            w = -1
            for p in range(d):
                t = n + d + sub[r] * d + p
                if t != u and _is_frac(f[r, p], tol):
                    w = t
                    ck[L] = 0
                    ca[L] = r
                    cb[L] = p
                    cf[L] = True
                    break
            if w < 0:
                if u != s_code and _is_frac(row[r], tol):
                    w = s_code
                    ck[L] = 1
                    ca[L] = r
                    cb[L] = -1
                    cf[L] = False
                else:
                    return 0, 0, 1
            u, v = v, w
        elif v < n + d:  # paper: exit through another subset's fractional load
            p = v - n
            w = -1
            for I in range(m):
                t = n + d + I * d + p
                if t != u and _is_frac(_sub_load(f, mem_off, mem_idx, I, p), tol):
                    w = t
                    ck[L] = 2
                    ca[L] = I
                    cb[L] = p
                    cf[L] = False
                    break
            if w < 0:
                return 0, 0, 1
            u, v = v, w
        elif v < s_code:  # subset node (I, p)
            I = (v - n - d) // d
            p = (v - n - d) % d
            w = -1
            for k in range(mem_off[I], mem_off[I + 1]):
                r = mem_idx[k]
                if r != u and _is_frac(f[r, p], tol):
                    w = r
                    ck[L] = 0
                    ca[L] = r
                    cb[L] = p
                    cf[L] = False
                    break
            if w < 0:
                t = n + p
                if t != u and _is_frac(_sub_load(f, mem_off, mem_idx, I, p), tol):
                    w = t
                    ck[L] = 2
                    ca[L] = I
                    cb[L] = p
                    cf[L] = True
                else:
                    return 0, 0, 1
            u, v = v, w
        else:  # source
            w = -1
            for r in range(n):
                if r != u and _is_frac(row[r], tol):
                    w = r
                    break
            if w < 0:
                return 0, 0, 1
            ck[L] = 1
            ca[L] = w
            cb[L] = -1
            cf[L] = True
            u, v = v, w
        L += 1
    return pos_arr[v] + 1, L, 0


@njit(cache=True)
def _sample_plain(f, row, kcap, tol, unifs):
    """Round ``f`` in place to an integral flow. Returns (iterations, status)."""
    n, d = f.shape
    nd = n * d
    stamp_arr = np.zeros(n + d + 1, np.int64)
    pos_arr = np.zeros(n + d + 1, np.int64)
    cap = n + d + 3
    ck = np.zeros(cap, np.int8)
    ca = np.zeros(cap, np.int64)
    cb = np.zeros(cap, np.int64)
    cf = np.zeros(cap, np.bool_)
    dummy_off = np.zeros(1, np.int64)
    dummy_idx = np.zeros(0, np.int64)
    stamp = 0
    it = 0
    cursor = 0
    while True:
        while cursor < nd and not _is_frac(f[cursor // d, cursor % d], tol):
            cursor += 1
        if cursor >= nd:
            break
        if it >= unifs.shape[0]:
            return it, 3
        stamp += 1
        j, L, status = _walk_plain(
            f, row, tol, cursor // d, cursor % d, stamp_arr, pos_arr, stamp, ck, ca, cb, cf
        )
        if status != 0:
            return it, status
        status = _push(f, row, kcap, dummy_off, dummy_idx, tol, ck, ca, cb, cf, j, L, unifs[it])
        it += 1
        if status != 0:
            return it, status
    return it, 0


@njit(cache=True)
def _sample_part(f, row, kcap, sub, mem_off, mem_idx, m, tol, unifs):
    """Partition-aware rounding of ``f`` in place. Returns (iterations, status)."""
    n, d = f.shape
    nd = n * d
    stamp_arr = np.zeros(n + d + m * d + 1, np.int64)
    pos_arr = np.zeros(n + d + m * d + 1, np.int64)
    cap = n + d + m * d + 3
    ck = np.zeros(cap, np.int8)
    ca = np.zeros(cap, np.int64)
    cb = np.zeros(cap, np.int64)
    cf = np.zeros(cap, np.bool_)
    stamp = 0
    it = 0
    cursor = 0
    while True:
        while cursor < nd and not _is_frac(f[cursor // d, cursor % d], tol):
            cursor += 1
        if cursor >= nd:
            break
        if it >= unifs.shape[0]:
            return it, 3
        stamp += 1
        ca[0] = cursor // d
        cb[0] = cursor % d
        j, L, status = _walk_part(
            f, row, sub, mem_off, mem_idx, m, tol, stamp_arr, pos_arr, stamp, ck, ca, cb, cf
        )
        if status != 0:
            return it, status
        status = _push(f, row, kcap, mem_off, mem_idx, tol, ck, ca, cb, cf, j, L, unifs[it])
        it += 1
        if status != 0:
            return it, status
    return it, 0


@njit(cache=True)
def count_fractional(f, row, tol):
    """Number of fractional reviewer-paper and source edges."""
    n, d = f.shape
    c = 0
    for r in range(n):
        for p in range(d):
            if _is_frac(f[r, p], tol):
                c += 1
        if _is_frac(row[r], tol):
            c += 1
    return c


@njit(cache=True)
def count_fractional_loads(f, mem_off, mem_idx, m, tol):
    """Number of fractional (subset, paper) loads."""
    d = f.shape[1]
    c = 0
    for I in range(m):
        for p in range(d):
            if _is_frac(_sub_load(f, mem_off, mem_idx, I, p), tol):
                c += 1
    return c
