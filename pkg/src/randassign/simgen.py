"""Synthetic instance generators and the bidding-manipulation experiment.

Provides the community (block-diagonal) and uniform random similarity
models, bid-derived similarities for PrefLib-style data, a simple honest
bidding model plus a single malicious bidder, and the benchmark comparing
how often the malicious reviewer reaches their target paper under the
deterministic assignment versus the probability-capped randomized one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lp import SolveOptions, solve_deterministic, solve_pairwise
from .model import ProblemInstance, expected_similarity
from .rng import RandomSource, as_random_source

__all__ = [
    "BidModelParams",
    "ManipulationReport",
    "community_similarities",
    "uniform_similarities",
    "bids_to_similarities",
    "apply_bids",
    "honest_bids",
    "malicious_bids",
    "manipulation_experiment",
]

#: Bid-level to similarity mapping for PrefLib conference bid data.
BID_LEVEL_SIMILARITY = {"yes": 4.0, "maybe": 2.0, "no_response": 1.0}


@dataclass(frozen=True)
class BidModelParams:
    """Honest-bidding model: three reviewer groups with distinct bid rates.

    Reviewers are split uniformly at random into groups holding
    ``group_fractions`` of the pool; each group bids non-zero on papers in
    its top ``top_fraction`` by similarity with its group's probability,
    choosing +1 or -1 uniformly.
    """

    gamma: float = 2.0
    group_fractions: tuple = (0.20, 0.50, 0.30)
    bid_probabilities: tuple = (0.0, 0.016, 0.24)
    top_fraction: float = 0.10

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if abs(sum(self.group_fractions) - 1.0) > 1e-9:
            raise ValueError("group fractions must sum to 1")
        if any(not 0.0 <= p <= 1.0 for p in self.bid_probabilities):
            raise ValueError("bid probabilities must lie in [0, 1]")


def community_similarities(
    n: int, d: int, g: int, reviewer_load=3, paper_load=3
) -> ProblemInstance:
    """Block-diagonal community model: g-by-g unit blocks on the diagonal.

    Reviewers i..i+g-1 have similarity 1 with papers i..i+g-1 and 0
    elsewhere; requires ``n == d`` and ``g`` dividing ``n``.
    """
    if n != d:
        raise ValueError("community model requires n == d")
    if n % g != 0:
        raise ValueError(f"group size {g} does not divide {n}")
    S = np.zeros((n, d))
    for start in range(0, n, g):
        S[start : start + g, start : start + g] = 1.0
    return ProblemInstance(S, reviewer_load, paper_load)


def uniform_similarities(
    n: int, d: int, rng: RandomSource | int | None = None, reviewer_load=3, paper_load=3
) -> ProblemInstance:
    """Similarities drawn independently and uniformly from [0, 1)."""
    rng = as_random_source(rng)
    return ProblemInstance(rng.generator.random((n, d)), reviewer_load, paper_load)


def bids_to_similarities(bid_levels, reviewer_load=6, paper_load=3) -> ProblemInstance:
    """Map conference bid levels to similarities: yes=4, maybe=2, no_response=1."""
    levels = np.asarray(bid_levels, dtype=object)
    if levels.ndim != 2:
        raise ValueError("bid levels must form a 2-D matrix")
    S = np.empty(levels.shape)
    for token, value in BID_LEVEL_SIMILARITY.items():
        S[levels == token] = value
    known = np.isin(levels, list(BID_LEVEL_SIMILARITY))
    if not known.all():
        bad = levels[~known].ravel()[0]
        raise ValueError(f"unknown bid level {bad!r}")
    return ProblemInstance(S, reviewer_load, paper_load)


def as_bid_matrix(bids) -> np.ndarray:
    """Validate a bid matrix: entries restricted to {-1, 0, +1}."""
    bids = np.asarray(bids)
    if not np.isin(bids, (-1, 0, 1)).all():
        raise ValueError("bids must take values in {-1, 0, 1}")
    return bids.astype(np.int8)


def apply_bids(S, bids, gamma: float) -> np.ndarray:
    """Scale similarities by the bid: entrywise ``gamma ** bid * S``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    S = np.asarray(S, dtype=np.float64)
    bids = as_bid_matrix(bids)
    if bids.shape != S.shape:
        raise ValueError(f"bids shape {bids.shape} does not match similarities {S.shape}")
    return np.power(float(gamma), bids.astype(np.float64)) * S


def _top_paper_mask(S: np.ndarray, top_fraction: float) -> np.ndarray:
    """Per-reviewer mask of the top-fraction highest-similarity papers.

    Ties at the cutoff break toward the lower paper index (stable sort).
    """
    n, d = S.shape
    t = int(np.floor(top_fraction * d + 1e-9))
    mask = np.zeros((n, d), dtype=bool)
    if t == 0:
        return mask
    order = np.argsort(-S, axis=1, kind="stable")[:, :t]
    np.put_along_axis(mask, order, True, axis=1)
    return mask


def reviewer_groups(n: int, params: BidModelParams, rng: RandomSource) -> np.ndarray:
    """Assign reviewers to bidding groups: seeded shuffle, fixed split sizes.

    Sizes are floors of the group fractions with the remainder going to the
    last group.
    """
    perm = rng.generator.permutation(n)
    sizes = [int(np.floor(f * n)) for f in params.group_fractions[:-1]]
    sizes.append(n - sum(sizes))
    group = np.empty(n, dtype=np.int64)
    start = 0
    for gi, size in enumerate(sizes):
        group[perm[start : start + size]] = gi
        start += size
    return group


def honest_bids(S, params: BidModelParams, rng: RandomSource | int | None = None) -> np.ndarray:
    """Draw the honest bidding matrix with entries in {-1, 0, +1}.

    Group-1 reviewers bid 0 everywhere; groups 2 and 3 consider only their
    top-similarity papers and bid non-zero with their group's probability,
    the sign uniform on {-1, +1}.
    """
    rng = as_random_source(rng)
    S = np.asarray(S, dtype=np.float64)
    n, d = S.shape
    group = reviewer_groups(n, params, rng)
    top = _top_paper_mask(S, params.top_fraction)
    prob = np.asarray(params.bid_probabilities)[group][:, None]
    coins = rng.generator.random((n, d))
    signs = np.where(rng.generator.random((n, d)) < 0.5, -1, 1).astype(np.int8)
    bids = np.where(top & (coins < prob), signs, 0).astype(np.int8)
    return bids


def malicious_bids(target_paper: int, d: int) -> np.ndarray:
    """The manipulating reviewer's row: +1 on the target, -1 elsewhere."""
    if not 0 <= target_paper < d:
        raise ValueError("target paper index out of range")
    row = np.full(d, -1, dtype=np.int8)
    row[target_paper] = 1
    return row


def attacker_by_rank(S: np.ndarray, target_paper: int, rank: int) -> int:
    """Reviewer with the rank-th highest text similarity to the target (1-based).

    Ties break toward the lower reviewer index.
    """
    n = S.shape[0]
    if not 1 <= rank <= n:
        raise ValueError(f"attacker rank {rank} out of range 1..{n}")
    order = np.argsort(-S[:, target_paper], kind="stable")
    return int(order[rank - 1])


@dataclass
class ManipulationReport:
    """Per-trial and aggregate success probabilities of the manipulation."""

    attacker_rank: int
    q0: float
    gamma: float
    deterministic: np.ndarray
    randomized: np.ndarray
    nobid_deterministic: np.ndarray
    nobid_randomized: np.ndarray
    objective_deterministic: np.ndarray = field(default=None)
    objective_randomized: np.ndarray = field(default=None)

    @property
    def trials(self) -> int:
        return len(self.deterministic)

    def means(self) -> dict:
        return {
            "deterministic": float(np.mean(self.deterministic)),
            "randomized": float(np.mean(self.randomized)),
            "nobid_deterministic": float(np.mean(self.nobid_deterministic)),
            "nobid_randomized": float(np.mean(self.nobid_randomized)),
        }


def manipulation_experiment(
    S,
    params: BidModelParams,
    q0: float,
    attacker_rank: int,
    trials: int,
    rng: RandomSource | int | None = None,
    reviewer_load=6,
    paper_load=3,
    opts: SolveOptions | None = None,
) -> ManipulationReport:
    """Measure how often a bidding attacker reaches a random target paper.

    Each trial picks a target uniformly, takes the attacker as the
    rank-th most similar reviewer to it, draws honest bids for everyone
    else and the +1/-1 pattern for the attacker, rescales similarities,
    and records the attacker-target assignment probability under the
    deterministic optimum and the probability-capped randomized one, plus
    the honest-bids-only baseline for both methods.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = as_random_source(rng)
    S = np.asarray(S, dtype=np.float64)
    n, d = S.shape
    det = np.zeros(trials)
    ran = np.zeros(trials)
    nb_det = np.zeros(trials)
    nb_ran = np.zeros(trials)
    obj_det = np.zeros(trials)
    obj_ran = np.zeros(trials)
    for t, trial_rng in enumerate(rng.split(trials)):
        target = int(trial_rng.generator.integers(d))
        attacker = attacker_by_rank(S, target, attacker_rank)
        bids = honest_bids(S, params, trial_rng)
        nobid = bids.copy()
        nobid[attacker] = 0
        bids[attacker] = malicious_bids(target, d)

        for bid_matrix, det_out, ran_out, record_obj in (
            (bids, det, ran, True),
            (nobid, nb_det, nb_ran, False),
        ):
            inst = ProblemInstance(apply_bids(S, bid_matrix, params.gamma), reviewer_load, paper_load)
            M = solve_deterministic(inst, opts)
            F = solve_pairwise(inst, q0, opts)
            det_out[t] = M[attacker, target]
            ran_out[t] = F.probs[attacker, target]
            if record_obj:
                obj_det[t] = float(np.sum(inst.similarities * M))
                obj_ran[t] = expected_similarity(F, inst)
    return ManipulationReport(
        attacker_rank=attacker_rank,
        q0=q0,
        gamma=params.gamma,
        deterministic=det,
        randomized=ran,
        nobid_deterministic=nb_det,
        nobid_randomized=nb_ran,
        objective_deterministic=obj_det,
        objective_randomized=obj_ran,
    )
