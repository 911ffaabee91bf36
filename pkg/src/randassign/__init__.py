"""Randomized reviewer-paper assignment under probability caps.

Solve for optimal marginal assignment probabilities (optionally with
partition constraints, a max-min fairness objective, or bad-assignment
probability caps), sample deterministic assignments implementing the
marginals exactly, and decompose fractional assignments into explicit
lotteries.
"""

from .decompose import decompose, decompose_step, max_capacitated_matching
from .estimator import RandomizedAssigner
from .flow_sampler import build_flow, find_fractional_cycle, push_round, sample, sample_marginals
from .lp import (
    FairSolution,
    InfeasibleError,
    SolveOptions,
    solve_bad_expectation,
    solve_bad_pairwise,
    solve_bad_partition,
    solve_deterministic,
    solve_fair,
    solve_pairwise,
    solve_partition,
)
from .model import (
    AssignmentDistribution,
    BadAssignmentProbabilities,
    DeterministicAssignment,
    FractionalAssignment,
    ProbabilityCap,
    ProblemInstance,
    ReviewerPartition,
    ValidationReport,
    expected_similarity,
    same_subset_pair_count,
    stochastic_fairness,
    validate_instance,
)
from .partition_sampler import (
    expected_pair_bound,
    find_guarded_cycle,
    sample_partitioned,
    sample_partitioned_marginals,
)
from .rng import RandomSource

__version__ = "0.1.0"

__all__ = [
    "AssignmentDistribution",
    "BadAssignmentProbabilities",
    "DeterministicAssignment",
    "FairSolution",
    "FractionalAssignment",
    "InfeasibleError",
    "ProbabilityCap",
    "ProblemInstance",
    "RandomSource",
    "RandomizedAssigner",
    "ReviewerPartition",
    "SolveOptions",
    "ValidationReport",
    "build_flow",
    "decompose",
    "decompose_step",
    "expected_pair_bound",
    "expected_similarity",
    "find_fractional_cycle",
    "find_guarded_cycle",
    "max_capacitated_matching",
    "push_round",
    "sample",
    "sample_marginals",
    "sample_partitioned",
    "sample_partitioned_marginals",
    "same_subset_pair_count",
    "solve_bad_expectation",
    "solve_bad_pairwise",
    "solve_bad_partition",
    "solve_deterministic",
    "solve_fair",
    "solve_pairwise",
    "solve_partition",
    "stochastic_fairness",
    "validate_instance",
]
