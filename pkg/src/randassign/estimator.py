"""Scikit-learn style estimator wrapping the solvers and samplers.

``RandomizedAssigner`` follows the fit/sample convention of generative
estimators: ``fit(S)`` solves for the optimal marginal assignment matrix
of the configured problem variant, after which ``sample`` draws
deterministic assignments implementing those marginals and ``lottery``
computes the full explicit distribution. Parameters are plain constructor
arguments, so ``get_params``/``set_params``/``clone`` compose with the
usual scikit-learn tooling (e.g. for cap-value sweeps).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import lp
from .decompose import decompose
from .flow_sampler import sample as flow_sample
from .model import (
    AssignmentDistribution,
    ProblemInstance,
    ReviewerPartition,
    expected_similarity,
    stochastic_fairness,
)
from .partition_sampler import sample_partitioned
from .rng import as_random_source

MODES = ("pairwise", "partition", "fair", "bad-pairwise", "bad-partition", "bad-expectation")


class RandomizedAssigner(BaseEstimator):
    """Optimal randomized reviewer-paper assignment under probability caps.

    Parameters:
        mode: problem variant; one of "pairwise", "partition", "fair",
            "bad-pairwise", "bad-partition", "bad-expectation".
        q: per-pair probability cap, a scalar broadcast to all pairs or an
            (n, d) matrix. ``None`` means uncapped (all ones).
        reviewer_load: per-reviewer maximum load (scalar or length-n).
        paper_load: exact per-paper load (scalar or length-d).
        partition: reviewer subset labels (length n) for the partition
            modes; also switches ``sample`` to the guarded sampler.
        subset_cap: per-(subset, paper) load cap for mode="partition".
        bad_probs: (n, d) bad-assignment probabilities for the bad-* modes.
        lam: cap on each pair's joint bad-and-assigned probability.
        mu: per-paper cap on the expected number of bad assignments
            (mode="bad-expectation").
        feasibility_tol / optimality_tol: LP engine tolerances.
        random_state: seed for ``sample`` when none is passed explicitly.

    Attributes (after fit):
        assignment_: (n, d) optimal marginal probabilities.
        objective_: expected sum-similarity of ``assignment_``.
        fairness_value_: minimum per-paper expected similarity.
        instance_: the validated ``ProblemInstance``.
    """

    def __init__(
        self,
        mode: str = "pairwise",
        q=None,
        reviewer_load=3,
        paper_load=3,
        partition=None,
        subset_cap: float = 1.0,
        bad_probs=None,
        lam: float = 1.0,
        mu: float = 1.0,
        feasibility_tol: float = 1e-7,
        optimality_tol: float = 1e-7,
        random_state=None,
    ):
        self.mode = mode
        self.q = q
        self.reviewer_load = reviewer_load
        self.paper_load = paper_load
        self.partition = partition
        self.subset_cap = subset_cap
        self.bad_probs = bad_probs
        self.lam = lam
        self.mu = mu
        self.feasibility_tol = feasibility_tol
        self.optimality_tol = optimality_tol
        self.random_state = random_state

    def _partition(self) -> ReviewerPartition | None:
        if self.partition is None:
            return None
        if isinstance(self.partition, ReviewerPartition):
            return self.partition
        return ReviewerPartition.from_labels(self.partition)

    def fit(self, X, y=None):
        """Solve for the optimal marginal assignment matrix of ``X``.

        ``X`` is the (n_reviewers, n_papers) similarity matrix.
        """
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        S = check_array(X, dtype=np.float64, ensure_min_samples=1, ensure_min_features=1)
        instance = ProblemInstance(S, self.reviewer_load, self.paper_load)
        opts = lp.SolveOptions(
            feasibility_tolerance=self.feasibility_tol, optimality_tolerance=self.optimality_tol
        )
        partition = self._partition()
        fairness = None
        if self.mode == "pairwise":
            F = lp.solve_pairwise(instance, self.q, opts)
        elif self.mode == "partition":
            F = lp.solve_partition(instance, self.q, partition, self.subset_cap, opts)
        elif self.mode == "fair":
            sol = lp.solve_fair(instance, self.q, opts)
            F, fairness = sol.assignment, sol.fairness_value
        elif self.mode == "bad-pairwise":
            F = lp.solve_bad_pairwise(instance, self.bad_probs, self.lam, opts)
        elif self.mode == "bad-partition":
            F = lp.solve_bad_partition(instance, self.bad_probs, self.lam, partition, opts)
        else:
            F = lp.solve_bad_expectation(instance, self.bad_probs, self.lam, self.mu, opts)
        self.instance_ = instance
        self.assignment_ = F.probs
        self.objective_ = expected_similarity(F, instance)
        self.fairness_value_ = fairness if fairness is not None else stochastic_fairness(F, instance)
        self.n_features_in_ = S.shape[1]
        return self

    def sample(self, n_samples: int = 1, random_state=None) -> np.ndarray:
        """Draw deterministic assignments implementing the fitted marginals.

        Returns an (n_samples, n_reviewers, n_papers) 0/1 array. Uses the
        guarded partition sampler whenever a partition was configured.
        """
        check_is_fitted(self, "assignment_")
        rng = as_random_source(self.random_state if random_state is None else random_state)
        partition = self._partition()
        out = np.empty((n_samples, *self.assignment_.shape), dtype=np.int8)
        for i in range(n_samples):
            if partition is not None:
                M = sample_partitioned(self.assignment_, self.instance_, partition, rng)
            else:
                M = flow_sample(self.assignment_, self.instance_, rng)
            out[i] = M.assigned
        return out

    def lottery(self) -> AssignmentDistribution:
        """Explicit distribution over deterministic assignments realizing the fit."""
        check_is_fitted(self, "assignment_")
        return decompose(self.assignment_, self.instance_)

    def score(self, X=None, y=None) -> float:
        """Expected sum-similarity of the fitted randomized assignment."""
        check_is_fitted(self, "assignment_")
        return self.objective_
