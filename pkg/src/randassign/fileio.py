"""File formats: problem JSON, fractional CSV, assignment/lottery JSON, bid CSV."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import (
    AssignmentDistribution,
    BadAssignmentProbabilities,
    DeterministicAssignment,
    ProbabilityCap,
    ProblemInstance,
    ReviewerPartition,
)

#: Fractional matrices are serialized with 12 significant digits.
CSV_FORMAT = "%.11e"


class ProblemFormatError(ValueError):
    """A problem or data file does not match the documented schema."""


@dataclass
class ProblemSpec:
    """A parsed problem file: the instance plus optional side inputs."""

    instance: ProblemInstance
    caps: ProbabilityCap | None = None
    partition: ReviewerPartition | None = None
    bad_probs: BadAssignmentProbabilities | None = None


def load_problem(path) -> ProblemSpec:
    """Parse a problem JSON file.

    Schema: ``similarities`` (2-D array, reviewers x papers, row-major),
    ``reviewer_load`` (integer or per-reviewer array), ``paper_load``
    (integer or per-paper array), optional ``q`` (scalar or 2-D array),
    optional ``partition`` (length-n array of subset indices), optional
    ``w`` (2-D array of bad-assignment probabilities).
    """
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"{path}: invalid JSON ({exc})") from exc
    try:
        S = np.asarray(data["similarities"], dtype=np.float64)
        instance = ProblemInstance(S, data["reviewer_load"], data["paper_load"])
    except KeyError as exc:
        raise ProblemFormatError(f"{path}: missing required key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"{path}: {exc}") from exc
    n, d = instance.shape
    caps = partition = bad = None
    try:
        if "q" in data and data["q"] is not None:
            q = data["q"]
            caps = ProbabilityCap.uniform(q, n, d) if np.isscalar(q) else ProbabilityCap(np.asarray(q))
        if "partition" in data and data["partition"] is not None:
            partition = ReviewerPartition.from_labels(data["partition"])
            if len(partition) != n:
                raise ValueError(f"partition length {len(partition)} != n_reviewers {n}")
        if "w" in data and data["w"] is not None:
            bad = BadAssignmentProbabilities(np.asarray(data["w"]))
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"{path}: {exc}") from exc
    return ProblemSpec(instance=instance, caps=caps, partition=partition, bad_probs=bad)


def save_problem(path, instance: ProblemInstance, q=None, partition=None, w=None) -> None:
    data = {
        "similarities": instance.similarities.tolist(),
        "reviewer_load": instance.reviewer_load.tolist(),
        "paper_load": instance.paper_load.tolist(),
    }
    if q is not None:
        data["q"] = q if np.isscalar(q) else np.asarray(q).tolist()
    if partition is not None:
        sub = partition.subset_of if isinstance(partition, ReviewerPartition) else partition
        data["partition"] = np.asarray(sub).tolist()
    if w is not None:
        data["w"] = np.asarray(w).tolist()
    Path(path).write_text(json.dumps(data))


def write_fractional_csv(path, F) -> None:
    F = F.probs if hasattr(F, "probs") else np.asarray(F)
    np.savetxt(path, F, fmt=CSV_FORMAT, delimiter=",")


def read_fractional_csv(path) -> np.ndarray:
    try:
        F = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ProblemFormatError(f"{path}: {exc}") from exc
    return F


def write_assignment_json(path, M: DeterministicAssignment) -> None:
    data = {
        "n_reviewers": int(M.assigned.shape[0]),
        "assignment": M.paper_lists(),
    }
    Path(path).write_text(json.dumps(data))


def read_assignment_json(path) -> DeterministicAssignment:
    try:
        data = json.loads(Path(path).read_text())
        n = int(data["n_reviewers"])
        lists = data["assignment"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ProblemFormatError(f"{path}: {exc}") from exc
    M = np.zeros((n, len(lists)), dtype=np.int8)
    for p, reviewers in enumerate(lists):
        M[np.asarray(reviewers, dtype=np.int64), p] = 1
    return DeterministicAssignment(M)


def write_lottery_json(path, dist: AssignmentDistribution) -> None:
    """Lottery JSON: array of {weight, assignment: per-paper reviewer lists}."""
    data = [
        {"weight": float(w), "assignment": M.paper_lists()} for w, M in dist.components
    ]
    Path(path).write_text(json.dumps(data))


def read_lottery_json(path, n_reviewers: int) -> AssignmentDistribution:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"{path}: {exc}") from exc
    comps = []
    for item in data:
        lists = item["assignment"]
        M = np.zeros((n_reviewers, len(lists)), dtype=np.int8)
        for p, reviewers in enumerate(lists):
            M[np.asarray(reviewers, dtype=np.int64), p] = 1
        comps.append((float(item["weight"]), DeterministicAssignment(M)))
    return AssignmentDistribution(comps)


_NUMERIC_BIDS = {"-1", "0", "1"}


def read_bid_csv(path, n_reviewers: int, n_papers: int):
    """Parse a bid CSV with rows ``reviewer_index,paper_index,bid``.

    Numeric bids in {-1, 0, 1} yield an int8 bid matrix (missing pairs are
    0); token bids in {yes, maybe, no_response} yield an object-dtype level
    matrix (missing pairs are ``no_response``).
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if not row or row[0].strip().startswith("#"):
                continue
            if row[0].strip().lower() in ("reviewer_index", "reviewer"):
                continue
            if len(row) != 3:
                raise ProblemFormatError(f"{path}: expected 3 columns, got {row!r}")
            rows.append((int(row[0]), int(row[1]), row[2].strip()))
    numeric = all(bid in _NUMERIC_BIDS for _, _, bid in rows)
    if numeric:
        bids = np.zeros((n_reviewers, n_papers), dtype=np.int8)
        for r, p, bid in rows:
            bids[r, p] = int(bid)
        return bids
    levels = np.full((n_reviewers, n_papers), "no_response", dtype=object)
    for r, p, bid in rows:
        levels[r, p] = bid
    return levels


def write_bid_csv(path, bids) -> None:
    bids = np.asarray(bids)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["reviewer_index", "paper_index", "bid"])
        for (r, p), bid in np.ndenumerate(bids):
            writer.writerow([r, p, bid])
