"""Decompose a fractional assignment into an explicit lottery.

Rather than sampling one assignment, this module computes the full
distribution: a list of deterministic assignments and simplex weights
whose weighted sum reproduces the fractional matrix entrywise. Each step
extracts one integral assignment built from the currently-integral entries
plus a perfect capacitated matching on the fractional support, peels it
off with the largest weight that keeps the remainder inside [0, 1], and
recurses on the remainder, which has strictly fewer fractional entries.

Reviewer loads met with inequality are padded to equality with a virtual
zero-similarity dummy paper absorbing the slack, which is stripped from
the returned components.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import maximum_flow

from ._kernels import INTEGRALITY_TOL
from .flow_sampler import snap_integral
from .model import (
    AssignmentDistribution,
    DeterministicAssignment,
    FractionalAssignment,
    ProblemInstance,
    as_matrix,
)

__all__ = ["DecompositionError", "max_capacitated_matching", "decompose_step", "decompose"]


class DecompositionError(RuntimeError):
    """The input was not a valid solution of the capacitated instance."""


def max_capacitated_matching(edges, reviewer_caps, paper_caps) -> list[tuple[int, int]]:
    """Maximum-cardinality edge subset respecting per-vertex capacities.

    Solved as max-flow on source -> reviewers -> papers -> sink with unit
    edge capacities and the given integer node capacities.

    Args:
        edges: iterable of (reviewer, paper) index pairs.
        reviewer_caps: per-reviewer capacities (array-like, indexed by reviewer).
        paper_caps: per-paper capacities.

    Returns:
        The matched (reviewer, paper) pairs, empty for an empty edge set.
    """
    edges = list(edges)
    if not edges:
        return []
    reviewer_caps = np.asarray(reviewer_caps)
    paper_caps = np.asarray(paper_caps)
    if np.any(reviewer_caps < 0) or np.any(paper_caps < 0):
        raise ValueError("capacities must be non-negative")
    n = reviewer_caps.size
    d = paper_caps.size
    src, snk = n + d, n + d + 1
    rows, cols, caps = [], [], []
    for r in range(n):
        if reviewer_caps[r] > 0:
            rows.append(src)
            cols.append(r)
            caps.append(int(reviewer_caps[r]))
    for p in range(d):
        if paper_caps[p] > 0:
            rows.append(n + p)
            cols.append(snk)
            caps.append(int(paper_caps[p]))
    for r, p in edges:
        rows.append(r)
        cols.append(n + p)
        caps.append(1)
    graph = sp.csr_matrix(
        (np.asarray(caps, dtype=np.int32), (rows, cols)), shape=(n + d + 2, n + d + 2)
    )
    flow = maximum_flow(graph, src, snk).flow
    return [(r, p) for r, p in edges if flow[r, n + p] > 0]


def decompose_step(F, reviewer_caps, paper_caps, tol: float = INTEGRALITY_TOL):
    """Peel one integral assignment off a solution with exact paper loads.

    Returns (M0, alpha0, F_prime) with ``F = alpha0 * M0 + (1-alpha0) *
    F_prime`` entrywise, where M0 is integral and F_prime has strictly
    fewer fractional entries. Paper capacities are met exactly, reviewer
    capacities as upper bounds; the strictly-fewer-entries guarantee is
    the equality-load case, which the driver arranges by padding. An
    integral F returns (F, 1.0, zeros).
    """
    F = snap_integral(as_matrix(F), tol)
    reviewer_caps = np.asarray(reviewer_caps, dtype=np.int64)
    paper_caps = np.asarray(paper_caps, dtype=np.int64)
    if np.any(np.abs(F.sum(axis=0) - paper_caps) > 1e-6):
        raise DecompositionError("column sums do not meet the paper capacities")
    if np.any(F.sum(axis=1) > reviewer_caps + 1e-6):
        raise DecompositionError("a row sum exceeds its reviewer capacity")
    ones_mask = F == 1.0
    frac_mask = (F > 0.0) & (F < 1.0)
    if not frac_mask.any():
        return F.astype(np.int8), 1.0, np.zeros_like(F)

    h_rev = reviewer_caps - ones_mask.sum(axis=1)
    h_pap = paper_caps - ones_mask.sum(axis=0)
    edges = [(int(r), int(p)) for r, p in np.argwhere(frac_mask)]
    matched = max_capacitated_matching(edges, h_rev, h_pap)
    if len(matched) != int(h_pap.sum()):
        raise DecompositionError(
            "no paper-perfect capacitated matching on the fractional support; "
            "input is not a valid solution of the capacitated instance"
        )
    M0 = ones_mask.astype(np.float64)
    for r, p in matched:
        M0[r, p] = 1.0
    in_matching = np.zeros_like(F, dtype=bool)
    rows = np.array([r for r, _ in matched], dtype=np.int64)
    cols = np.array([p for _, p in matched], dtype=np.int64)
    in_matching[rows, cols] = True
    unmatched_frac = frac_mask & ~in_matching
    candidates = [F[in_matching].min()] if in_matching.any() else []
    if unmatched_frac.any():
        candidates.append((1.0 - F[unmatched_frac]).min())
    alpha0 = float(min(candidates))
    F_prime = (F - alpha0 * M0) / (1.0 - alpha0)
    return M0.astype(np.int8), alpha0, F_prime


def _pad_to_equality(F: np.ndarray, instance: ProblemInstance):
    """Pad reviewer loads to equality with one zero-similarity dummy paper.

    Equality loads are taken as the ceiling of each reviewer's row sum (the
    tightest integers at least the fractional loads, capped by the actual
    bounds); the sub-unit slack of every fractional row goes into a single
    dummy column whose demand is the (integral) total slack. This adds at
    most one fractional entry per already-fractional row, keeping the
    component bound at the fractional-entry count of F itself.
    """
    n, d = F.shape
    rowsum = F.sum(axis=1)
    caps = np.minimum(np.ceil(rowsum - 1e-9).astype(np.int64), instance.reviewer_load)
    slack = np.maximum(caps - rowsum, 0.0)
    slack[slack <= 1e-9] = 0.0
    total = slack.sum()
    demand = int(round(total))
    if abs(total - demand) > 1e-6:
        raise DecompositionError(f"total reviewer slack {total} is not integral")
    if demand == 0:
        return F, caps, 0
    return np.hstack([F, slack[:, None]]), caps, demand


def decompose(F, instance: ProblemInstance, max_components: int | None = None) -> AssignmentDistribution:
    """Full lottery over deterministic assignments realizing F.

    The weighted entrywise sum of the returned components equals F, the
    weights lie on the simplex, and the number of components is at most
    the number of initially fractional entries plus one.

    Args:
        max_components: optional guard; exceeding it raises (signals a bug,
            since the recursion depth is bounded by the fractional count).
    """
    F = FractionalAssignment(as_matrix(F)) if not isinstance(F, FractionalAssignment) else F
    report = F.validate(instance)
    if not report:
        raise DecompositionError(f"invalid fractional assignment: {report}")
    work = snap_integral(F.probs, INTEGRALITY_TOL)
    n, d = work.shape
    n_frac = int(((work > 0.0) & (work < 1.0)).sum())
    work, rev_caps, dummy_demand = _pad_to_equality(work, instance)
    pap_caps = instance.paper_load
    if dummy_demand > 0:
        pap_caps = np.concatenate([pap_caps, [dummy_demand]])

    bound = (2 * n_frac + 2) if max_components is None else max_components
    components = []
    remaining = 1.0
    while True:
        M0, alpha0, work = decompose_step(work, rev_caps, pap_caps)
        if alpha0 >= 1.0:
            components.append((remaining, M0))
            break
        components.append((remaining * alpha0, M0))
        remaining *= 1.0 - alpha0
        if len(components) > bound:
            raise DecompositionError(
                f"component count exceeded the bound {bound}; decomposition is not converging"
            )
        work = snap_integral(work, INTEGRALITY_TOL)

    dist = AssignmentDistribution(
        [(w, DeterministicAssignment(M[:, :d])) for w, M in components]
    )
    if max_components is not None and len(dist) > max_components:
        raise DecompositionError(f"lottery has {len(dist)} components, exceeding {max_components}")
    return dist
