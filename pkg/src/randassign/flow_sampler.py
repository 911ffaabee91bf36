"""Sample deterministic assignments implementing fractional marginals exactly.

The sampler represents a fractional assignment as a flow on a bipartite
network (source -> reviewers -> papers -> sink), repeatedly finds a cycle
of fractional edges, and pushes a randomly signed amount of flow around it
so that the expected flow on every edge is unchanged while at least one
edge becomes integral. The final integral flow is the sampled assignment,
so each pair is assigned with probability exactly equal to its marginal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._kernels import INTEGRALITY_TOL, _is_frac
from .model import (
    DeterministicAssignment,
    FractionalAssignment,
    ProblemInstance,
    as_matrix,
)
from .rng import RandomSource, as_random_source

__all__ = [
    "FlowState",
    "AlternatingCycle",
    "SamplerError",
    "StaleCycleError",
    "build_flow",
    "find_fractional_cycle",
    "push_round",
    "sample",
    "sample_marginals",
    "RandomSource",
]


class SamplerError(RuntimeError):
    """Internal invariant breach while sampling (conservation corrupted)."""


class StaleCycleError(SamplerError):
    """A cycle edge became integral between discovery and the push."""


def snap_integral(F: np.ndarray, tol: float = INTEGRALITY_TOL) -> np.ndarray:
    """Snap entries within ``tol`` of an integer to that integer."""
    out = np.array(F, dtype=np.float64)
    nearest = np.round(out)
    mask = np.abs(out - nearest) <= tol
    out[mask] = nearest[mask]
    return out


@dataclass
class FlowState:
    """Mutable flow network state for one sampling run (single-owner).

    Attributes:
        flows: (n, d) flows on reviewer->paper edges (capacity 1).
        source_flows: (n,) flows on source->reviewer edges (capacity k_r).
        reviewer_caps: (n,) reviewer load bounds as floats.
        paper_loads: (d,) paper->sink flows; integral by construction.
    """

    flows: np.ndarray
    source_flows: np.ndarray
    reviewer_caps: np.ndarray
    paper_loads: np.ndarray
    tol: float = INTEGRALITY_TOL
    iterations: int = 0
    initial_fractional: int = field(default=0)

    @property
    def n_reviewers(self) -> int:
        return self.flows.shape[0]

    @property
    def n_papers(self) -> int:
        return self.flows.shape[1]

    def fractional_edges(self) -> list:
        """Currently fractional edges as ('rp', r, p) / ('sr', r) tuples."""
        out = []
        n, d = self.flows.shape
        for r in range(n):
            for p in range(d):
                if _is_frac(self.flows[r, p], self.tol):
                    out.append(("rp", r, p))
            if _is_frac(self.source_flows[r], self.tol):
                out.append(("sr", r))
        return out

    def n_fractional(self) -> int:
        return int(_kernels.count_fractional(self.flows, self.source_flows, self.tol))

    def is_integral(self) -> bool:
        return self.n_fractional() == 0

    def conservation_residual(self) -> float:
        """Max absolute flow-conservation violation over internal vertices."""
        rev = np.abs(self.flows.sum(axis=1) - self.source_flows).max()
        pap = np.abs(self.flows.sum(axis=0) - self.paper_loads).max()
        return float(max(rev, pap))

    def assignment(self) -> DeterministicAssignment:
        if not self.is_integral():
            raise SamplerError("flow is not yet integral")
        return DeterministicAssignment(np.round(self.flows).astype(np.int8))

    def copy(self) -> "FlowState":
        return FlowState(
            flows=self.flows.copy(),
            source_flows=self.source_flows.copy(),
            reviewer_caps=self.reviewer_caps,
            paper_loads=self.paper_loads,
            tol=self.tol,
            iterations=self.iterations,
            initial_fractional=self.initial_fractional,
        )


@dataclass(frozen=True)
class AlternatingCycle:
    """A directionless cycle of fractional edges with push bookkeeping.

    ``kinds[i]`` is 0 for reviewer->paper edges, 1 for source edges and 2
    for virtual subset-load edges (partition sampler only); ``forward[i]``
    records whether edge i was traversed in its E-direction. Edges
    traversed like the first edge form class A, the rest class B.
    """

    kinds: np.ndarray
    idx_a: np.ndarray
    idx_b: np.ndarray
    forward: np.ndarray

    def __len__(self) -> int:
        return len(self.kinds)

    @property
    def edges(self) -> list:
        """Edges as (edge_tuple, 'A'|'B') pairs in cycle order."""
        out = []
        for i in range(len(self.kinds)):
            side = "A" if self.forward[i] == self.forward[0] else "B"
            if self.kinds[i] == 0:
                out.append((("rp", int(self.idx_a[i]), int(self.idx_b[i])), side))
            elif self.kinds[i] == 1:
                out.append((("sr", int(self.idx_a[i])), side))
            else:
                out.append((("subset", int(self.idx_a[i]), int(self.idx_b[i])), side))
        return out

    def vertices(self, n: int) -> list:
        """Vertex labels visited along the cycle (for diagnostics/tests)."""
        labels = []
        for i in range(len(self.kinds)):
            if self.kinds[i] == 0:
                pair = (f"r{self.idx_a[i]}", f"p{self.idx_b[i]}")
            elif self.kinds[i] == 1:
                pair = ("s", f"r{self.idx_a[i]}")
            else:
                pair = (f"w{self.idx_a[i]},{self.idx_b[i]}", f"p{self.idx_b[i]}")
            labels.append(pair if self.forward[i] else pair[::-1])
        return labels


def build_flow(F, instance: ProblemInstance, tol: float = INTEGRALITY_TOL) -> FlowState:
    """Construct the initial flow network for a valid fractional assignment.

    Reviewer->paper flows are the (integrality-snapped) marginals, source
    edges carry the row sums, and paper->sink edges carry the integral
    paper loads. Raises SamplerError when F violates the load constraints
    beyond the validation tolerance.
    """
    F = FractionalAssignment(as_matrix(F)) if not isinstance(F, FractionalAssignment) else F
    report = F.validate(instance)
    if not report:
        raise SamplerError(f"invalid fractional assignment: {report}")
    flows = snap_integral(F.probs, tol)
    state = FlowState(
        flows=flows,
        source_flows=flows.sum(axis=1),
        reviewer_caps=instance.reviewer_load.astype(np.float64),
        paper_loads=instance.paper_load.astype(np.float64),
        tol=tol,
    )
    state.initial_fractional = state.n_fractional()
    return state


def _lowest_fractional_edge(state: FlowState) -> tuple[int, int]:
    n, d = state.flows.shape
    frac = np.abs(state.flows - np.round(state.flows)) > state.tol
    flat = np.flatnonzero(frac.ravel())
    if flat.size == 0:
        raise SamplerError("no fractional reviewer-paper edge")
    return int(flat[0]) // d, int(flat[0]) % d


def find_fractional_cycle(state: FlowState) -> AlternatingCycle:
    """Find a directionless cycle of fractional edges.

    Walks depth-first from the lowest-indexed fractional reviewer->paper
    edge, taking the lowest-indexed eligible fractional edge at each step,
    until a vertex repeats; the walk prefix before the repeated vertex is
    trimmed. Deterministic given the state.
    """
    n, d = state.flows.shape
    r0, p0 = _lowest_fractional_edge(state)
    stamp_arr = np.zeros(n + d + 1, np.int64)
    pos_arr = np.zeros(n + d + 1, np.int64)
    cap = n + d + 3
    ck = np.zeros(cap, np.int8)
    ca = np.zeros(cap, np.int64)
    cb = np.zeros(cap, np.int64)
    cf = np.zeros(cap, np.bool_)
    j, L, status = _kernels._walk_plain(
        state.flows, state.source_flows, state.tol, r0, p0, stamp_arr, pos_arr, 1, ck, ca, cb, cf
    )
    if status != 0:
        raise SamplerError(
            "no eligible fractional continuation during cycle search "
            "(flow conservation breached)"
        )
    return AlternatingCycle(
        kinds=ck[j:L].copy(), idx_a=ca[j:L].copy(), idx_b=cb[j:L].copy(), forward=cf[j:L].copy()
    )


def push_round(state: FlowState, cycle: AlternatingCycle, rng: RandomSource) -> FlowState:
    """Randomly push flow around a cycle, making at least one edge integral.

    With probability beta/(alpha+beta) the A-side loses alpha (and the
    B-side gains it), else the A-side gains beta; the expected flow on
    every edge is unchanged. Mutates and returns ``state``.
    """
    rng = as_random_source(rng)
    if np.any(cycle.kinds == 2):
        raise SamplerError("cycle carries subset-load guards; use the partition sampler's push")
    u01 = float(rng.uniforms(1)[0])
    dummy_off = np.zeros(1, np.int64)
    dummy_idx = np.zeros(0, np.int64)
    L = len(cycle)
    status = _kernels._push(
        state.flows, state.source_flows, state.reviewer_caps, dummy_off, dummy_idx,
        state.tol, cycle.kinds, cycle.idx_a, cycle.idx_b, cycle.forward, 0, L, u01,
    )
    if status != 0:
        raise StaleCycleError("cycle edge became integral since discovery; re-find the cycle")
    state.iterations += 1
    return state


def _finish_state(state: FlowState, instance: ProblemInstance) -> DeterministicAssignment:
    M = state.assignment()
    report = M.validate(instance)
    if not report:
        raise SamplerError(f"sampled assignment violates load constraints: {report}")
    return M


def sample(
    F,
    instance: ProblemInstance,
    rng: RandomSource | int | None = None,
    return_state: bool = False,
):
    """Draw one deterministic assignment with marginals exactly F.

    Each reviewer-paper pair ends up assigned with probability equal to its
    fractional value, and every draw obeys the exact paper loads and the
    reviewer load bounds. An integral F is returned unchanged.
    """
    rng = as_random_source(rng)
    state = build_flow(F, instance)
    budget = state.initial_fractional + 8
    unifs = rng.uniforms(budget)
    iters, status = _kernels._sample_plain(
        state.flows, state.source_flows, state.reviewer_caps, state.tol, unifs
    )
    if status != 0:
        raise SamplerError(f"sampling failed with status {status} after {iters} iterations")
    state.iterations = iters
    M = _finish_state(state, instance)
    return (M, state) if return_state else M


def sample_marginals(
    F, instance: ProblemInstance, n_samples: int, rng: RandomSource | int | None = None
) -> np.ndarray:
    """Empirical assignment frequencies over ``n_samples`` independent draws."""
    rng = as_random_source(rng)
    base = build_flow(F, instance)
    budget = base.initial_fractional + 8
    counts = np.zeros_like(base.flows)
    work_f = np.empty_like(base.flows)
    work_row = np.empty_like(base.source_flows)
    caps = base.reviewer_caps
    for _ in range(n_samples):
        np.copyto(work_f, base.flows)
        np.copyto(work_row, base.source_flows)
        unifs = rng.uniforms(budget)
        _, status = _kernels._sample_plain(work_f, work_row, caps, base.tol, unifs)
        if status != 0:
            raise SamplerError(f"sampling failed with status {status}")
        counts += work_f
    return counts / n_samples
