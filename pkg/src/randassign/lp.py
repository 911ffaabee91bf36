"""Linear-programming solvers for the assignment problem variants.

All variants share one structure: maximize the expected sum-similarity
``sum(S * F)`` over fractional assignment matrices ``F`` with per-reviewer
load upper bounds, exact per-paper loads, and per-pair probability caps.
Variants add per-(subset, paper) load caps, a max-min fairness objective,
or constraints derived from bad-assignment probabilities.

The LPs are solved by HiGHS through ``scipy.optimize.linprog`` behind the
single ``_solve`` entry point; solver choice is deliberately pluggable in
one place.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .model import (
    BadAssignmentProbabilities,
    FractionalAssignment,
    ProbabilityCap,
    ProblemInstance,
    ReviewerPartition,
    as_matrix,
    expected_similarity,
    validate_instance,
)

#: Entrywise slack allowed on F <= Q in returned solutions.
CAP_TOL = 1e-7


class InfeasibleError(RuntimeError):
    """The constraint set admits no fractional assignment."""


class SolverError(RuntimeError):
    """The LP engine failed for a reason other than infeasibility."""


class InvalidInstanceError(ValueError):
    """The problem instance fails structural validation."""


@dataclass(frozen=True)
class SolveOptions:
    """Numerical knobs forwarded to the LP engine."""

    feasibility_tolerance: float = 1e-7
    optimality_tolerance: float = 1e-7
    max_iterations: int = 0  # 0 = solver default

    def __post_init__(self):
        if self.feasibility_tolerance <= 0 or self.optimality_tolerance <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class FairSolution:
    """Result of the max-min fairness solve."""

    assignment: FractionalAssignment
    fairness_value: float


def _check_instance(instance: ProblemInstance) -> None:
    report = validate_instance(instance)
    if not report:
        raise InvalidInstanceError(str(report))


def _normalize_caps(instance: ProblemInstance, caps) -> np.ndarray:
    n, d = instance.shape
    if caps is None:
        return np.ones((n, d))
    if isinstance(caps, (int, float)):
        caps = ProbabilityCap.uniform(float(caps), n, d)
    Q = as_matrix(caps)
    if Q.shape != (n, d):
        raise ValueError(f"caps shape {Q.shape} does not match instance shape {(n, d)}")
    return Q


def _check_cap_feasibility(instance: ProblemInstance, ub: np.ndarray) -> None:
    """Cheap per-paper infeasibility check: available cap mass vs required load."""
    mass = ub.sum(axis=0)
    short = mass < instance.paper_load - 1e-9
    if np.any(short):
        p = int(np.argmax(short))
        raise InfeasibleError(
            f"paper {p}: total available probability mass {mass[p]:.6g} "
            f"< required load {instance.paper_load[p]}"
        )


def _load_constraints(instance: ProblemInstance):
    """Sparse row-sum (<= k) and column-sum (== l) constraint matrices."""
    n, d = instance.shape
    nv = n * d
    ones = np.ones(nv)
    rows = sp.csr_matrix((ones, (np.repeat(np.arange(n), d), np.arange(nv))), shape=(n, nv))
    cols = sp.csr_matrix((ones, (np.tile(np.arange(d), n), np.arange(nv))), shape=(d, nv))
    return rows, cols


def _solve(c, A_ub, b_ub, A_eq, b_eq, bounds, opts: SolveOptions, context: str):
    options = {
        "presolve": True,
        "primal_feasibility_tolerance": opts.feasibility_tolerance,
        "dual_feasibility_tolerance": opts.optimality_tolerance,
    }
    if opts.max_iterations > 0:
        options["maxiter"] = opts.max_iterations
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs", options=options)
    if res.status == 2:
        raise InfeasibleError(f"{context}: solver reported infeasibility ({res.message})")
    if res.status != 0:
        raise SolverError(f"{context}: solver status {res.status} ({res.message})")
    return res


def _finish(x: np.ndarray, instance: ProblemInstance, ub: np.ndarray) -> FractionalAssignment:
    n, d = instance.shape
    F = np.clip(x.reshape(n, d), 0.0, None)
    if np.any(F - ub > CAP_TOL):
        raise SolverError("solution violates probability caps beyond tolerance")
    result = FractionalAssignment(F)
    report = result.validate(instance)
    if not report:
        raise SolverError(f"solution violates load constraints: {report}")
    return result


def solve_pairwise(instance: ProblemInstance, caps=None, opts: SolveOptions | None = None) -> FractionalAssignment:
    """Optimal marginal probabilities under per-pair caps.

    Maximizes ``sum(S * F)`` subject to ``0 <= F <= min(1, Q)``, reviewer
    row sums at most ``k_r`` and paper column sums exactly ``l_p``.

    Raises:
        InfeasibleError: no F satisfies the constraints (e.g. a paper whose
            total cap mass across reviewers is below its load).
    """
    opts = opts or SolveOptions()
    _check_instance(instance)
    Q = _normalize_caps(instance, caps)
    ub = np.minimum(1.0, Q)
    _check_cap_feasibility(instance, ub)
    n, d = instance.shape
    rows, cols = _load_constraints(instance)
    res = _solve(
        -instance.similarities.ravel(), rows, instance.reviewer_load.astype(float),
        cols, instance.paper_load.astype(float),
        np.column_stack([np.zeros(n * d), ub.ravel()]), opts, "pairwise",
    )
    return _finish(res.x, instance, ub)


def _subset_rows(partition: ReviewerPartition, n: int, d: int) -> sp.csr_matrix:
    """One row per (subset, paper): sum of F over the subset's reviewers."""
    m = partition.n_subsets
    sub = partition.subset_of
    # variable (r, p) appears in row (subset_of[r], p)
    var = np.arange(n * d)
    r = var // d
    p = var % d
    return sp.csr_matrix((np.ones(n * d), (sub[r] * d + p, var)), shape=(m * d, n * d))


def solve_partition(
    instance: ProblemInstance,
    caps,
    partition: ReviewerPartition,
    subset_cap: float = 1.0,
    opts: SolveOptions | None = None,
) -> FractionalAssignment:
    """Optimal marginals with per-(subset, paper) load caps.

    With ``subset_cap=1`` the companion guarded sampler never co-assigns two
    reviewers from the same subset; higher values loosen the cap and trade
    co-assignment risk for similarity.
    """
    opts = opts or SolveOptions()
    _check_instance(instance)
    if len(partition) != instance.n_reviewers:
        raise ValueError("partition does not cover the reviewer set")
    if subset_cap <= 0:
        raise ValueError("subset_cap must be positive")
    Q = _normalize_caps(instance, caps)
    ub = np.minimum(1.0, Q)
    _check_cap_feasibility(instance, ub)

    n, d = instance.shape
    m = partition.n_subsets
    # per-paper mass available once subset caps bind
    per_subset = np.zeros((m, d))
    np.add.at(per_subset, partition.subset_of, ub)
    mass = np.minimum(per_subset, subset_cap).sum(axis=0)
    short = mass < instance.paper_load - 1e-9
    if np.any(short):
        p = int(np.argmax(short))
        detail = " (subset_cap < 1 cannot meet integer paper loads)" if subset_cap < 1 else ""
        raise InfeasibleError(
            f"paper {p}: mass {mass[p]:.6g} available under subset cap {subset_cap} "
            f"< required load {instance.paper_load[p]}{detail}"
        )

    rows, cols = _load_constraints(instance)
    A_ub = sp.vstack([rows, _subset_rows(partition, n, d)], format="csr")
    b_ub = np.concatenate([instance.reviewer_load.astype(float), np.full(m * d, float(subset_cap))])
    res = _solve(
        -instance.similarities.ravel(), A_ub, b_ub, cols, instance.paper_load.astype(float),
        np.column_stack([np.zeros(n * d), ub.ravel()]), opts, "partition",
    )
    return _finish(res.x, instance, ub)


def solve_fair(instance: ProblemInstance, caps=None, opts: SolveOptions | None = None) -> FairSolution:
    """Maximize the minimum per-paper expected similarity under pairwise caps.

    An auxiliary scalar variable is maximized subject to being at most every
    paper's expected similarity; at the optimum it equals the stochastic
    fairness of the returned assignment.
    """
    opts = opts or SolveOptions()
    _check_instance(instance)
    Q = _normalize_caps(instance, caps)
    ub = np.minimum(1.0, Q)
    _check_cap_feasibility(instance, ub)
    n, d = instance.shape
    nv = n * d
    rows, cols = _load_constraints(instance)
    # variables: F (nv) then x (1); constraint x - sum_r S_rp F_rp <= 0 per paper
    fair = sp.hstack(
        [
            sp.csr_matrix(
                (-instance.similarities.ravel(), (np.tile(np.arange(d), n), np.arange(nv))),
                shape=(d, nv),
            ),
            sp.csr_matrix(np.ones((d, 1))),
        ],
        format="csr",
    )
    A_ub = sp.vstack([sp.hstack([rows, sp.csr_matrix((n, 1))]), fair], format="csr")
    b_ub = np.concatenate([instance.reviewer_load.astype(float), np.zeros(d)])
    A_eq = sp.hstack([cols, sp.csr_matrix((d, 1))], format="csr")
    c = np.zeros(nv + 1)
    c[-1] = -1.0
    bounds = np.vstack([np.column_stack([np.zeros(nv), ub.ravel()]), [[0.0, None]]])
    res = _solve(c, A_ub, b_ub, A_eq, instance.paper_load.astype(float), bounds, opts, "fair")
    assignment = _finish(res.x[:nv], instance, ub)
    return FairSolution(assignment=assignment, fairness_value=float(res.x[-1]))


def reduce_bad_to_caps(W, lam: float, n: int | None = None, d: int | None = None) -> ProbabilityCap:
    """Translate bad-assignment probabilities into per-pair caps.

    ``Q_rp = min(lam / W_rp, 1)``, with ``W_rp = 0`` mapping to ``Q_rp = 1``
    (the joint bad-and-assigned constraint is vacuous there).
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    Wm = as_matrix(W)
    with np.errstate(divide="ignore"):
        Q = np.where(Wm > 0.0, np.minimum(lam / np.where(Wm > 0.0, Wm, 1.0), 1.0), 1.0)
    return ProbabilityCap(Q)


def solve_bad_pairwise(
    instance: ProblemInstance, W, lam: float, opts: SolveOptions | None = None
) -> FractionalAssignment:
    """Cap the joint probability of a bad assignment at ``lam`` per pair."""
    W = W if isinstance(W, BadAssignmentProbabilities) else BadAssignmentProbabilities(as_matrix(W))
    return solve_pairwise(instance, reduce_bad_to_caps(W, lam), opts)


def solve_bad_partition(
    instance: ProblemInstance,
    W,
    lam: float,
    partition: ReviewerPartition,
    opts: SolveOptions | None = None,
) -> FractionalAssignment:
    """Bad-assignment caps combined with unit subset-paper load caps."""
    W = W if isinstance(W, BadAssignmentProbabilities) else BadAssignmentProbabilities(as_matrix(W))
    return solve_partition(instance, reduce_bad_to_caps(W, lam), partition, subset_cap=1.0, opts=opts)


def solve_bad_expectation(
    instance: ProblemInstance, W, lam: float, mu: float, opts: SolveOptions | None = None
) -> FractionalAssignment:
    """Cap each pair's bad-assignment probability and each paper's expected bad count.

    Adds ``F_rp * W_rp <= lam`` (folded into the variable bounds) and
    ``sum_r F_rp W_rp <= mu`` per paper on top of the load constraints.
    """
    opts = opts or SolveOptions()
    if mu < 0:
        raise ValueError("mu must be non-negative")
    _check_instance(instance)
    W = W if isinstance(W, BadAssignmentProbabilities) else BadAssignmentProbabilities(as_matrix(W))
    Wm = W.probs
    if Wm.shape != instance.shape:
        raise ValueError("W shape does not match instance shape")
    ub = np.minimum(1.0, reduce_bad_to_caps(W, lam).caps)
    _check_cap_feasibility(instance, ub)
    n, d = instance.shape
    rows, cols = _load_constraints(instance)
    expect = sp.csr_matrix((Wm.ravel(), (np.tile(np.arange(d), n), np.arange(n * d))), shape=(d, n * d))
    A_ub = sp.vstack([rows, expect], format="csr")
    b_ub = np.concatenate([instance.reviewer_load.astype(float), np.full(d, float(mu))])
    res = _solve(
        -instance.similarities.ravel(), A_ub, b_ub, cols, instance.paper_load.astype(float),
        np.column_stack([np.zeros(n * d), ub.ravel()]), opts, "bad-expectation",
    )
    return _finish(res.x, instance, ub)


def solve_deterministic(
    instance: ProblemInstance, opts: SolveOptions | None = None
) -> "np.ndarray":
    """Deterministic maximum sum-similarity assignment (the uncapped baseline).

    The uncapped LP's constraint matrix is totally unimodular, so a simplex
    vertex solution is integral; solved with dual simplex and rounded.
    """
    opts = opts or SolveOptions()
    _check_instance(instance)
    n, d = instance.shape
    rows, cols = _load_constraints(instance)
    options = {
        "presolve": True,
        "primal_feasibility_tolerance": opts.feasibility_tolerance,
        "dual_feasibility_tolerance": opts.optimality_tolerance,
    }
    res = linprog(
        -instance.similarities.ravel(), A_ub=rows, b_ub=instance.reviewer_load.astype(float),
        A_eq=cols, b_eq=instance.paper_load.astype(float), bounds=(0.0, 1.0),
        method="highs-ds", options=options,
    )
    if res.status == 2:
        raise InfeasibleError(f"deterministic: solver reported infeasibility ({res.message})")
    if res.status != 0:
        raise SolverError(f"deterministic: solver status {res.status} ({res.message})")
    M = res.x.reshape(n, d)
    if np.max(np.abs(M - np.round(M))) > 1e-6:
        raise SolverError("deterministic LP returned a non-integral vertex")
    return np.round(M).astype(np.int8)


@dataclass
class SolveSummary:
    """Book-keeping for one solve, as reported by the CLI sidecar."""

    objective: float
    fairness_value: float
    status: str
    wall_time_s: float


def timed_solve(fn, instance: ProblemInstance, *args, **kwargs):
    """Run a solver and report (assignment, summary)."""
    t0 = time.perf_counter()
    out = fn(instance, *args, **kwargs)
    wall = time.perf_counter() - t0
    if isinstance(out, FairSolution):
        F, fairness = out.assignment, out.fairness_value
    else:
        F, fairness = out, None
    from .model import stochastic_fairness

    summary = SolveSummary(
        objective=expected_similarity(F, instance),
        fairness_value=fairness if fairness is not None else stochastic_fairness(F, instance),
        status="optimal",
        wall_time_s=wall,
    )
    return F, summary
