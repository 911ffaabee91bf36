"""Partition-aware sampling: marginals plus per-(subset, paper) load rounding.

Replaces the plain sampler's cycle step with a guarded walk that keeps
every subset's load on every paper within one unit of its starting value:
loads that start integral are preserved exactly, fractional loads land on
their floor or ceiling with the martingale probabilities. Consequently,
when a subset's load on a paper is at most 1, no draw ever co-assigns two
of its reviewers to that paper, and in general the expected number of
same-subset co-assigned pairs is the minimum achievable for the marginals.

The guarded walk runs on an extended network with one node per (subset,
paper) pair; the flow on that node's edge into the paper is the subset
load. Walking into a paper through its own subset node and back out
through a sibling reviewer leaves the load untouched (the same-subset exit
rule); crossing into the paper records the load as a push guard, bounding
the step by the load's distance to its floor or ceiling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import INTEGRALITY_TOL
from .flow_sampler import (
    AlternatingCycle,
    FlowState,
    SamplerError,
    StaleCycleError,
    _lowest_fractional_edge,
    build_flow,
)
from .model import (
    ProblemInstance,
    ReviewerPartition,
    as_matrix,
    subset_paper_loads,
)
from .rng import RandomSource, as_random_source

__all__ = [
    "GuardedCycle",
    "find_guarded_cycle",
    "push_round_guarded",
    "sample_partitioned",
    "sample_partitioned_marginals",
    "expected_pair_bound",
]


@dataclass(frozen=True)
class GuardedCycle:
    """A fractional cycle plus the subset-load guards bounding its push.

    ``d1`` guards sit on the same side as the cycle's first edge (their
    loads fall when the A-side loses flow); ``d2`` guards sit on the other
    side. Every guarded (subset, paper) pair has exactly one of its member
    edges in the cycle, and every guard value is strictly fractional.
    """

    cycle: AlternatingCycle
    d1: tuple
    d2: tuple

    def __len__(self) -> int:
        return len(self.cycle)


def _member_csr(partition: ReviewerPartition) -> tuple[np.ndarray, np.ndarray]:
    sub = partition.subset_of
    order = np.lexsort((np.arange(sub.size), sub))
    mem_idx = np.ascontiguousarray(order.astype(np.int64))
    counts = np.bincount(sub, minlength=partition.n_subsets)
    mem_off = np.zeros(partition.n_subsets + 1, np.int64)
    np.cumsum(counts, out=mem_off[1:])
    return mem_off, mem_idx


def _check_partition(state_or_F, partition: ReviewerPartition, n: int) -> None:
    if len(partition) != n:
        raise ValueError(f"partition covers {len(partition)} reviewers, state has {n}")


def find_guarded_cycle(state: FlowState, partition: ReviewerPartition) -> GuardedCycle:
    """Find a fractional cycle whose push preserves subset-load rounding.

    Every entry into a paper is either matched by a same-subset exit
    (leaving that subset's load unchanged) or crosses the subset's load
    edge, recording the load in the guard list for its traversal side.
    Deterministic given the state: the walk starts at the lowest-indexed
    fractional reviewer-paper edge and takes the lowest-indexed eligible
    continuation, preferring same-subset exits.
    """
    n, d = state.flows.shape
    _check_partition(state, partition, n)
    m = partition.n_subsets
    mem_off, mem_idx = _member_csr(partition)
    r0, p0 = _lowest_fractional_edge(state)
    stamp_arr = np.zeros(n + d + m * d + 1, np.int64)
    pos_arr = np.zeros(n + d + m * d + 1, np.int64)
    cap = n + d + m * d + 3
    ck = np.zeros(cap, np.int8)
    ca = np.zeros(cap, np.int64)
    cb = np.zeros(cap, np.int64)
    cf = np.zeros(cap, np.bool_)
    ca[0] = r0
    cb[0] = p0
    j, L, status = _kernels._walk_part(
        state.flows, state.source_flows, partition.subset_of, mem_off, mem_idx, m,
        state.tol, stamp_arr, pos_arr, 1, ck, ca, cb, cf,
    )
    if status != 0:
        raise SamplerError(
            "no eligible fractional continuation during guarded cycle search "
            "(conservation or load accounting corrupted)"
        )
    cycle = AlternatingCycle(
        kinds=ck[j:L].copy(), idx_a=ca[j:L].copy(), idx_b=cb[j:L].copy(), forward=cf[j:L].copy()
    )
    d1, d2 = [], []
    e1fwd = bool(cycle.forward[0])
    for i in range(len(cycle)):
        if cycle.kinds[i] != 2:
            continue
        I, p = int(cycle.idx_a[i]), int(cycle.idx_b[i])
        load = float(state.flows[partition.members(I), p].sum())
        (d1 if bool(cycle.forward[i]) == e1fwd else d2).append((I, p, load))
    return GuardedCycle(cycle=cycle, d1=tuple(d1), d2=tuple(d2))


def push_round_guarded(
    state: FlowState,
    guarded: GuardedCycle,
    partition: ReviewerPartition,
    rng: RandomSource | int | None = None,
) -> FlowState:
    """Push flow around a guarded cycle with load-aware step sizes.

    The step in each direction is additionally capped by every d1 guard's
    distance to its floor and every d2 guard's distance to its ceiling (and
    vice versa for the reverse direction), so no subset-paper load ever
    crosses an integer. Mutates and returns ``state``.
    """
    rng = as_random_source(rng)
    mem_off, mem_idx = _member_csr(partition)
    cycle = guarded.cycle
    u01 = float(rng.uniforms(1)[0])
    status = _kernels._push(
        state.flows, state.source_flows, state.reviewer_caps, mem_off, mem_idx,
        state.tol, cycle.kinds, cycle.idx_a, cycle.idx_b, cycle.forward, 0, len(cycle), u01,
    )
    if status != 0:
        raise StaleCycleError("guarded cycle became stale; re-find the cycle")
    state.iterations += 1
    return state


def sample_partitioned(
    F,
    instance: ProblemInstance,
    partition: ReviewerPartition,
    rng: RandomSource | int | None = None,
    return_state: bool = False,
):
    """Draw an assignment implementing F while rounding subset loads.

    Marginals are implemented exactly, and for every paper and subset the
    number of assigned reviewers equals the fractional load when integral
    and otherwise lands on its floor or ceiling. With all subset loads at
    most 1 (the unit-cap solver output), no draw co-assigns two same-subset
    reviewers.
    """
    rng = as_random_source(rng)
    state = build_flow(F, instance)
    _check_partition(state, partition, state.n_reviewers)
    mem_off, mem_idx = _member_csr(partition)
    m = partition.n_subsets
    budget = state.initial_fractional + int(
        _kernels.count_fractional_loads(state.flows, mem_off, mem_idx, m, state.tol)
    ) + 8
    unifs = rng.uniforms(budget)
    iters, status = _kernels._sample_part(
        state.flows, state.source_flows, state.reviewer_caps,
        partition.subset_of, mem_off, mem_idx, m, state.tol, unifs,
    )
    if status != 0:
        raise SamplerError(f"partition sampling failed with status {status} after {iters} iterations")
    state.iterations = iters
    M = state.assignment()
    report = M.validate(instance)
    if not report:
        raise SamplerError(f"sampled assignment violates load constraints: {report}")
    return (M, state) if return_state else M


def sample_partitioned_marginals(
    F,
    instance: ProblemInstance,
    partition: ReviewerPartition,
    n_samples: int,
    rng: RandomSource | int | None = None,
) -> np.ndarray:
    """Empirical assignment frequencies over ``n_samples`` guarded draws."""
    rng = as_random_source(rng)
    base = build_flow(F, instance)
    _check_partition(base, partition, base.n_reviewers)
    mem_off, mem_idx = _member_csr(partition)
    m = partition.n_subsets
    budget = base.initial_fractional + int(
        _kernels.count_fractional_loads(base.flows, mem_off, mem_idx, m, base.tol)
    ) + 8
    counts = np.zeros_like(base.flows)
    work_f = np.empty_like(base.flows)
    work_row = np.empty_like(base.source_flows)
    for _ in range(n_samples):
        np.copyto(work_f, base.flows)
        np.copyto(work_row, base.source_flows)
        unifs = rng.uniforms(budget)
        _, status = _kernels._sample_part(
            work_f, work_row, base.reviewer_caps, partition.subset_of, mem_off, mem_idx,
            m, base.tol, unifs,
        )
        if status != 0:
            raise SamplerError(f"partition sampling failed with status {status}")
        counts += work_f
    return counts / n_samples


def expected_pair_bound(F, partition: ReviewerPartition, tol: float = INTEGRALITY_TOL) -> float:
    """Minimum achievable expected number of same-subset co-assigned pairs.

    For each (subset, paper) load mu, the best implementable count
    distribution is the two-point floor/ceiling law with mean mu, whose
    second moment is ``-ceil(mu)^2 + ceil(mu) - mu + 2*ceil(mu)*mu``; the
    expected pair count is ``(E[X^2] - E[X]) / 2`` summed over all cells.
    Integral loads contribute ``C(mu, 2)`` deterministically.
    """
    F = as_matrix(F)
    if F.shape[0] != len(partition):
        raise ValueError(f"assignment has {F.shape[0]} reviewers but partition covers {len(partition)}")
    loads = subset_paper_loads(F, partition)
    total = 0.0
    for mu in loads.ravel():
        nearest = round(mu)
        if abs(mu - nearest) <= tol:
            mu = float(nearest)
        ceil = math.ceil(mu)
        second = -ceil * ceil + ceil - mu + 2.0 * ceil * mu
        total += 0.5 * (second - mu)
    return total
