"""Domain types and derived metrics for randomized reviewer-paper assignment.

Conventions used throughout the package:

* ``S`` is an ``(n_reviewers, n_papers)`` similarity matrix.
* Reviewer loads are *upper bounds* (a reviewer reviews at most ``k_r``
  papers); paper loads are *exact* (a paper receives exactly ``l_p``
  reviewers).
* A fractional assignment ``F`` stores per-pair marginal assignment
  probabilities; a deterministic assignment ``M`` is a 0/1 matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Absolute tolerance when checking fractional load sums (LP solver residuals).
VALIDATION_TOL = 1e-6


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _as_load_vector(load, size: int, name: str) -> np.ndarray:
    arr = np.asarray(load)
    if arr.ndim == 0:
        arr = np.full(size, arr)
    if arr.shape != (size,):
        raise ValueError(f"{name} must be a scalar or a vector of length {size}, got shape {arr.shape}")
    if not np.allclose(arr, np.round(arr)):
        raise ValueError(f"{name} must be integral")
    return _readonly(np.round(arr).astype(np.int64))


def as_matrix(obj) -> np.ndarray:
    """Return the underlying 2-D float array of a matrix-like object.

    Accepts bare ndarrays as well as the wrapper types defined in this
    module (anything exposing ``probs``, ``assigned`` or ``caps``).
    """
    for attr in ("probs", "assigned", "caps", "similarities"):
        if hasattr(obj, attr):
            obj = getattr(obj, attr)
            break
    arr = np.asarray(obj, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class ProblemInstance:
    """A reviewer-paper matching problem.

    Attributes:
        similarities: (n, d) non-negative match-quality scores.
        reviewer_load: length-n integer vector of per-reviewer maximum loads.
        paper_load: length-d integer vector of exact per-paper loads.
    """

    similarities: np.ndarray
    reviewer_load: np.ndarray
    paper_load: np.ndarray

    def __init__(self, similarities, reviewer_load, paper_load):
        S = np.asarray(similarities, dtype=np.float64)
        if S.ndim != 2:
            raise ValueError(f"similarities must be 2-D, got shape {S.shape}")
        n, d = S.shape
        object.__setattr__(self, "similarities", _readonly(S))
        object.__setattr__(self, "reviewer_load", _as_load_vector(reviewer_load, n, "reviewer_load"))
        object.__setattr__(self, "paper_load", _as_load_vector(paper_load, d, "paper_load"))

    @property
    def n_reviewers(self) -> int:
        return self.similarities.shape[0]

    @property
    def n_papers(self) -> int:
        return self.similarities.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.similarities.shape


@dataclass(frozen=True)
class ProbabilityCap:
    """Per-pair upper bounds on assignment probabilities (entries in [0, 1])."""

    caps: np.ndarray

    def __init__(self, caps):
        Q = np.asarray(caps, dtype=np.float64)
        if Q.ndim != 2:
            raise ValueError(f"caps must be 2-D, got shape {Q.shape}")
        if np.any(~np.isfinite(Q)) or Q.min(initial=0.0) < 0.0 or Q.max(initial=0.0) > 1.0:
            raise ValueError("cap entries must lie in [0, 1]")
        object.__setattr__(self, "caps", _readonly(Q))

    @classmethod
    def uniform(cls, q0: float, n_reviewers: int, n_papers: int) -> "ProbabilityCap":
        """Broadcast a single scalar cap to every reviewer-paper pair."""
        return cls(np.full((n_reviewers, n_papers), float(q0)))

    @classmethod
    def ones(cls, n_reviewers: int, n_papers: int) -> "ProbabilityCap":
        return cls(np.ones((n_reviewers, n_papers)))


@dataclass(frozen=True)
class ReviewerPartition:
    """A partition of the reviewer set into disjoint subsets.

    ``subset_of[r]`` is the subset index of reviewer ``r``; indices must be
    dense in ``[0, n_subsets)``.
    """

    subset_of: np.ndarray
    n_subsets: int

    def __init__(self, subset_of, n_subsets: int | None = None):
        lab = np.asarray(subset_of, dtype=np.int64)
        if lab.ndim != 1:
            raise ValueError("subset_of must be a 1-D vector")
        if lab.size == 0:
            raise ValueError("partition of an empty reviewer set")
        m = int(lab.max()) + 1 if n_subsets is None else int(n_subsets)
        if lab.min() < 0 or lab.max() >= m:
            raise ValueError("subset indices out of range")
        if len(np.unique(lab)) != m:
            raise ValueError("subset indices must be dense in [0, n_subsets)")
        object.__setattr__(self, "subset_of", _readonly(lab))
        object.__setattr__(self, "n_subsets", m)

    @classmethod
    def from_labels(cls, labels) -> "ReviewerPartition":
        """Build a partition from arbitrary hashable labels, densifying indices."""
        labels = list(labels)
        _, dense = np.unique(np.asarray(labels, dtype=object), return_inverse=True)
        return cls(dense.astype(np.int64))

    @classmethod
    def singletons(cls, n_reviewers: int) -> "ReviewerPartition":
        return cls(np.arange(n_reviewers, dtype=np.int64))

    def members(self, subset: int) -> np.ndarray:
        return np.flatnonzero(self.subset_of == subset)

    def __len__(self) -> int:
        return self.subset_of.size


@dataclass(frozen=True)
class FractionalAssignment:
    """Matrix of marginal assignment probabilities obeying the load constraints."""

    probs: np.ndarray

    def __init__(self, probs):
        F = np.asarray(probs, dtype=np.float64)
        if F.ndim != 2:
            raise ValueError(f"probs must be 2-D, got shape {F.shape}")
        object.__setattr__(self, "probs", _readonly(F))

    def validate(self, instance: ProblemInstance, tol: float = VALIDATION_TOL) -> "ValidationReport":
        F = self.probs
        violations = []
        if F.shape != instance.shape:
            return ValidationReport([f"shape {F.shape} != instance shape {instance.shape}"])
        if F.min(initial=0.0) < -tol or F.max(initial=0.0) > 1.0 + tol:
            violations.append("entries outside [0, 1]")
        row = F.sum(axis=1) - instance.reviewer_load
        if np.any(row > tol):
            r = int(np.argmax(row))
            violations.append(f"reviewer {r} load {F[r].sum():.9f} exceeds bound {instance.reviewer_load[r]}")
        col = np.abs(F.sum(axis=0) - instance.paper_load)
        if np.any(col > tol):
            p = int(np.argmax(col))
            violations.append(f"paper {p} load {F[:, p].sum():.9f} != required {instance.paper_load[p]}")
        return ValidationReport(violations)


@dataclass(frozen=True)
class DeterministicAssignment:
    """A 0/1 assignment matrix with exact paper loads and bounded reviewer loads."""

    assigned: np.ndarray

    def __init__(self, assigned):
        M = np.asarray(assigned)
        if M.ndim != 2:
            raise ValueError(f"assigned must be 2-D, got shape {M.shape}")
        if not np.all((M == 0) | (M == 1)):
            raise ValueError("assignment entries must be 0 or 1")
        object.__setattr__(self, "assigned", _readonly(M.astype(np.int8)))

    def validate(self, instance: ProblemInstance) -> "ValidationReport":
        M = self.assigned
        violations = []
        if M.shape != instance.shape:
            return ValidationReport([f"shape {M.shape} != instance shape {instance.shape}"])
        rows = M.sum(axis=1)
        if np.any(rows > instance.reviewer_load):
            r = int(np.argmax(rows - instance.reviewer_load))
            violations.append(f"reviewer {r} assigned {rows[r]} > bound {instance.reviewer_load[r]}")
        cols = M.sum(axis=0)
        if np.any(cols != instance.paper_load):
            p = int(np.argmax(np.abs(cols - instance.paper_load)))
            violations.append(f"paper {p} assigned {cols[p]} != required {instance.paper_load[p]}")
        return ValidationReport(violations)

    def paper_lists(self) -> list[list[int]]:
        """Per-paper lists of assigned reviewer indices."""
        return [np.flatnonzero(self.assigned[:, p]).tolist() for p in range(self.assigned.shape[1])]


@dataclass(frozen=True)
class AssignmentDistribution:
    """An explicit lottery: weighted deterministic assignments realizing some F."""

    components: tuple

    def __init__(self, components):
        comps = []
        for w, M in components:
            w = float(w)
            if not 0.0 < w <= 1.0 + 1e-12:
                raise ValueError(f"component weight {w} outside (0, 1]")
            if not isinstance(M, DeterministicAssignment):
                M = DeterministicAssignment(M)
            comps.append((w, M))
        object.__setattr__(self, "components", tuple(comps))

    def __len__(self) -> int:
        return len(self.components)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.components])

    def marginals(self) -> np.ndarray:
        """Weighted entrywise sum of the components (the implemented F)."""
        out = np.zeros(self.components[0][1].assigned.shape)
        for w, M in self.components:
            out += w * M.assigned
        return out

    def validate(self, instance: ProblemInstance, tol: float = VALIDATION_TOL) -> "ValidationReport":
        violations = []
        total = float(self.weights.sum())
        if abs(total - 1.0) > tol:
            violations.append(f"weights sum to {total}, not 1")
        for i, (_, M) in enumerate(self.components):
            rep = M.validate(instance)
            if not rep:
                violations.append(f"component {i}: " + "; ".join(rep.violations))
        return ValidationReport(violations)


@dataclass(frozen=True)
class BadAssignmentProbabilities:
    """Per-pair probabilities that an assignment would be reviewed untruthfully."""

    probs: np.ndarray

    def __init__(self, probs):
        W = np.asarray(probs, dtype=np.float64)
        if W.ndim != 2:
            raise ValueError(f"probs must be 2-D, got shape {W.shape}")
        if np.any(~np.isfinite(W)) or W.min(initial=0.0) < 0.0 or W.max(initial=0.0) > 1.0:
            raise ValueError("bad-assignment probabilities must lie in [0, 1]")
        object.__setattr__(self, "probs", _readonly(W))


@dataclass
class ValidationReport:
    """Outcome of a structural validation; falsy when violations were found."""

    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "OK" if self.ok else "; ".join(self.violations)


def validate_instance(instance: ProblemInstance) -> ValidationReport:
    """Check the structural feasibility preconditions of a problem instance."""
    S = instance.similarities
    violations = []
    if np.any(~np.isfinite(S)):
        r, p = np.argwhere(~np.isfinite(S))[0]
        violations.append(f"non-finite similarity at ({r}, {p})")
    elif S.min(initial=0.0) < 0.0:
        r, p = np.argwhere(S < 0.0)[0]
        violations.append(f"negative similarity at ({r}, {p})")
    if np.any(instance.reviewer_load < 1):
        violations.append("reviewer loads must be >= 1")
    if np.any(instance.paper_load < 1):
        violations.append("paper loads must be >= 1")
    cap = int(instance.reviewer_load.sum())
    demand = int(instance.paper_load.sum())
    if cap < demand:
        violations.append(f"total reviewer capacity {cap} < total paper demand {demand}")
    return ValidationReport(violations)


def _check_dims(F: np.ndarray, instance: ProblemInstance) -> None:
    if F.shape != instance.shape:
        raise ValueError(f"assignment shape {F.shape} does not match instance shape {instance.shape}")


def expected_similarity(F, instance: ProblemInstance) -> float:
    """Expected sum-similarity of a (fractional) assignment: sum of S * F."""
    F = as_matrix(F)
    _check_dims(F, instance)
    return float(np.sum(instance.similarities * F))


def stochastic_fairness(F, instance: ProblemInstance) -> float:
    """Minimum over papers of the expected assigned similarity."""
    F = as_matrix(F)
    _check_dims(F, instance)
    return float(np.min(np.sum(instance.similarities * F, axis=0)))


def same_subset_pair_count(M, partition: ReviewerPartition) -> int:
    """Number of same-subset reviewer pairs co-assigned to a paper.

    Counts ``C(x, 2)`` over every (subset, paper) cell, where ``x`` is the
    number of assigned reviewers from that subset on that paper.
    """
    M = as_matrix(M)
    if M.shape[0] != len(partition):
        raise ValueError(f"assignment has {M.shape[0]} reviewers but partition covers {len(partition)}")
    counts = subset_paper_counts(M, partition)
    return int(np.sum(counts * (counts - 1) // 2))


def subset_paper_counts(M, partition: ReviewerPartition) -> np.ndarray:
    """(n_subsets, n_papers) matrix of per-subset assigned-reviewer counts."""
    M = as_matrix(M)
    m = partition.n_subsets
    onehot = np.zeros((m, M.shape[0]))
    onehot[partition.subset_of, np.arange(M.shape[0])] = 1.0
    return np.round(onehot @ M).astype(np.int64)


def subset_paper_loads(F, partition: ReviewerPartition) -> np.ndarray:
    """(n_subsets, n_papers) matrix of fractional subset loads: sums of F over each subset."""
    F = as_matrix(F)
    m = partition.n_subsets
    onehot = np.zeros((m, F.shape[0]))
    onehot[partition.subset_of, np.arange(F.shape[0])] = 1.0
    return onehot @ F


def binom2(x: int) -> int:
    """Number of unordered pairs among x items."""
    return math.comb(int(x), 2)
