"""Command-line interface: solve, sample, decompose, experiment, generate.

Exit codes: 0 success, 1 input/parse error, 2 infeasible problem,
3 internal error. All commands honor ``--seed`` end to end; repeated
invocations with the same seed produce identical outputs.
"""

from __future__ import annotations

import csv
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import fileio, lp, simgen
from .decompose import DecompositionError, decompose as run_decompose
from .flow_sampler import SamplerError, sample as flow_sample
from .model import (
    FractionalAssignment,
    ReviewerPartition,
    expected_similarity,
    stochastic_fairness,
)
from .partition_sampler import sample_partitioned
from .rng import RandomSource

# file-level misuse is a parse error under the documented exit contract
click.UsageError.exit_code = 1

EXIT_PARSE = 1
EXIT_INFEASIBLE = 2
EXIT_INTERNAL = 3

MODES = ("pairwise", "partition", "fair", "bad-pairwise", "bad-partition", "bad-expectation")


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _run(fn):
    """Run a command body, mapping exceptions to the documented exit codes."""
    try:
        fn()
    except lp.InfeasibleError as exc:
        _fail(EXIT_INFEASIBLE, f"infeasible: {exc}")
    except (fileio.ProblemFormatError, FileNotFoundError, lp.InvalidInstanceError, ValueError) as exc:
        _fail(EXIT_PARSE, str(exc))
    except (lp.SolverError, SamplerError, DecompositionError) as exc:
        _fail(EXIT_INTERNAL, str(exc))


@click.group()
def main():
    """Randomized reviewer-paper assignment tools."""


def _parse_q(q: str | None, n: int, d: int):
    if q is None:
        return None
    try:
        return float(q)
    except ValueError:
        return fileio.read_fractional_csv(q)


@main.command()
@click.option("--problem", required=True, type=click.Path(), help="Problem JSON file.")
@click.option("--mode", default="pairwise", type=click.Choice(MODES))
@click.option("--q", default=None, help="Scalar cap or path to a CSV cap matrix (overrides the problem file).")
@click.option("--subset-cap", default=1.0, show_default=True, help="Per-(subset, paper) load cap.")
@click.option("--lambda", "lam", default=1.0, show_default=True, help="Bad-assignment probability cap.")
@click.option("--mu", default=1.0, show_default=True, help="Per-paper expected bad-assignment cap.")
@click.option("--seed", default=None, type=int, help="Accepted for interface uniformity; solving is deterministic.")
@click.option("--out", required=True, type=click.Path(), help="Output CSV for the fractional assignment.")
def solve(problem, mode, q, subset_cap, lam, mu, seed, out):
    """Solve for optimal marginal assignment probabilities."""

    def body():
        spec = fileio.load_problem(problem)
        inst = spec.instance
        caps = _parse_q(q, *inst.shape)
        if caps is None:
            caps = spec.caps
        t0 = time.perf_counter()
        fairness = None
        if mode == "pairwise":
            F = lp.solve_pairwise(inst, caps)
        elif mode == "partition":
            if spec.partition is None:
                raise fileio.ProblemFormatError("partition mode requires a partition in the problem file")
            F = lp.solve_partition(inst, caps, spec.partition, subset_cap)
        elif mode == "fair":
            sol = lp.solve_fair(inst, caps)
            F, fairness = sol.assignment, sol.fairness_value
        elif mode == "bad-pairwise":
            F = lp.solve_bad_pairwise(inst, _require_w(spec), lam)
        elif mode == "bad-partition":
            if spec.partition is None:
                raise fileio.ProblemFormatError("bad-partition mode requires a partition in the problem file")
            F = lp.solve_bad_partition(inst, _require_w(spec), lam, spec.partition)
        else:
            F = lp.solve_bad_expectation(inst, _require_w(spec), lam, mu)
        wall = time.perf_counter() - t0
        fileio.write_fractional_csv(out, F)
        sidecar = {
            "objective": expected_similarity(F, inst),
            "fairness_value": fairness if fairness is not None else stochastic_fairness(F, inst),
            "status": "optimal",
            "wall_time_s": wall,
            "mode": mode,
        }
        Path(out).with_suffix(".json").write_text(json.dumps(sidecar, indent=2))
        click.echo(f"objective {sidecar['objective']:.6f} fairness {sidecar['fairness_value']:.6f} ({wall:.2f}s)")

    _run(body)


def _require_w(spec: fileio.ProblemSpec):
    if spec.bad_probs is None:
        raise fileio.ProblemFormatError("this mode requires a 'w' matrix in the problem file")
    return spec.bad_probs


@main.command()
@click.option("--f", "f_path", required=True, type=click.Path(), help="Fractional assignment CSV.")
@click.option("--problem", required=True, type=click.Path(), help="Problem JSON file.")
@click.option("--samples", default=1, show_default=True, help="Number of assignments to draw.")
@click.option("--partition", "partition_path", default=None, type=click.Path(),
              help="JSON array of subset indices; switches to the guarded sampler.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(),
              help="Output JSON file (a directory is created when --samples > 1).")
@click.option("--marginals-check", "check_tol", default=None, type=float, flag_value=0.03,
              help="Print max |empirical - F| over the draws; exit nonzero above the threshold.")
def sample(f_path, problem, samples, partition_path, seed, out, check_tol):
    """Sample deterministic assignments implementing a fractional one."""

    def body():
        if samples < 1:
            raise ValueError("--samples must be at least 1")
        spec = fileio.load_problem(problem)
        inst = spec.instance
        F = FractionalAssignment(fileio.read_fractional_csv(f_path))
        partition = spec.partition
        if partition_path is not None:
            partition = ReviewerPartition.from_labels(json.loads(Path(partition_path).read_text()))
        rng = RandomSource(seed)
        rep = F.validate(inst)
        if not rep:
            raise lp.InfeasibleError(f"fractional assignment invalid for this problem: {rep}")

        def draw():
            if partition is not None:
                return sample_partitioned(F, inst, partition, rng)
            return flow_sample(F, inst, rng)

        counts = np.zeros(inst.shape)
        if samples == 1:
            M = draw()
            counts += M.assigned
            fileio.write_assignment_json(out, M)
        else:
            outdir = Path(out)
            outdir.mkdir(parents=True, exist_ok=True)
            for i in range(samples):
                M = draw()
                counts += M.assigned
                fileio.write_assignment_json(outdir / f"sample_{i:05d}.json", M)
        if check_tol is not None:
            dev = float(np.abs(counts / samples - F.probs).max())
            click.echo(f"max |empirical - F| = {dev:.5f} over {samples} draws")
            if dev > check_tol:
                _fail(EXIT_INTERNAL, f"empirical marginals deviate by {dev:.5f} > {check_tol}")

    _run(body)


@main.command(name="decompose")
@click.option("--f", "f_path", required=True, type=click.Path(), help="Fractional assignment CSV.")
@click.option("--problem", required=True, type=click.Path(), help="Problem JSON file.")
@click.option("--out", required=True, type=click.Path(), help="Output lottery JSON.")
@click.option("--max-components", default=None, type=int,
              help="Abort if the lottery exceeds this many components (guards against bugs).")
def decompose_cmd(f_path, problem, out, max_components):
    """Decompose a fractional assignment into an explicit lottery."""

    def body():
        spec = fileio.load_problem(problem)
        F = FractionalAssignment(fileio.read_fractional_csv(f_path))
        dist = run_decompose(F, spec.instance, max_components=max_components)
        fileio.write_lottery_json(out, dist)
        residual = float(np.abs(dist.marginals() - F.probs).max())
        click.echo(f"{len(dist)} components, reconstruction residual {residual:.3e}")

    _run(body)


def _make_instance(generator, n, d, g, k, l, rng):
    if generator == "community":
        return simgen.community_similarities(n, d, g, reviewer_load=k, paper_load=l)
    return simgen.uniform_similarities(n, d, rng, reviewer_load=k, paper_load=l)


def _grid(spec: str) -> np.ndarray:
    start, stop, step = (float(x) for x in spec.split(":"))
    count = int(round((stop - start) / step)) + 1
    return np.round(start + step * np.arange(count), 10)


def _write_curve(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


@main.group()
def experiment():
    """Synthetic experiment curves (CSV output for external plotting)."""


@experiment.command()
@click.option("--generator", default="uniform", type=click.Choice(["community", "uniform"]))
@click.option("--n", default=100, show_default=True)
@click.option("--d", default=100, show_default=True)
@click.option("--g", default=6, show_default=True, help="Community group size.")
@click.option("--k", default=3, show_default=True, help="Reviewer load bound.")
@click.option("--l", default=3, show_default=True, help="Paper load.")
@click.option("--q-grid", default="0.1:1.0:0.1", show_default=True)
@click.option("--trials", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
def tradeoff(generator, n, d, g, k, l, q_grid, trials, seed, out):
    """Objective (as % of the uncapped optimum) while sweeping the cap q0."""

    def body():
        grid = _grid(q_grid)
        percents = [[] for _ in grid]
        for rng in RandomSource(seed).split(trials):
            inst = _make_instance(generator, n, d, g, k, l, rng)
            M = lp.solve_deterministic(inst)
            best = float(np.sum(inst.similarities * M))
            for i, q0 in enumerate(grid):
                try:
                    F = lp.solve_pairwise(inst, float(q0))
                    percents[i].append(100.0 * expected_similarity(F, inst) / best)
                except lp.InfeasibleError:
                    percents[i].append(np.nan)
        rows = []
        for q0, vals in zip(grid, percents):
            mean, stderr = _mean_stderr(vals)
            rows.append([f"{q0:.3f}", _fmt(mean), _fmt(stderr)])
        _write_curve(out, ["q0", "percent_of_optimum", "stderr"], rows)
        click.echo(f"wrote {len(rows)} points to {out}")

    _run(body)


@experiment.command(name="partition-sweep")
@click.option("--generator", default="uniform", type=click.Choice(["community", "uniform"]))
@click.option("--n", default=100, show_default=True)
@click.option("--d", default=100, show_default=True)
@click.option("--g", default=6, show_default=True)
@click.option("--k", default=3, show_default=True)
@click.option("--l", default=3, show_default=True)
@click.option("--q0", default=0.5, show_default=True)
@click.option("--subsets", default=3, show_default=True,
              help="Random equal subsets (uniform generator); community uses its groups.")
@click.option("--cap-grid", default="1.0:2.0:0.1", show_default=True)
@click.option("--trials", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
def partition_sweep(generator, n, d, g, k, l, q0, subsets, cap_grid, trials, seed, out):
    """Objective (as % of the unpartitioned capped optimum) while loosening subset caps."""

    def body():
        grid = _grid(cap_grid)
        percents = [[] for _ in grid]
        for rng in RandomSource(seed).split(trials):
            inst = _make_instance(generator, n, d, g, k, l, rng)
            if generator == "community":
                partition = ReviewerPartition.from_labels(np.arange(n) // g)
            else:
                partition = ReviewerPartition.from_labels(rng.generator.permutation(n) % subsets)
            base = lp.solve_pairwise(inst, q0)
            base_obj = expected_similarity(base, inst)
            for i, cap in enumerate(grid):
                try:
                    F = lp.solve_partition(inst, q0, partition, float(cap))
                    percents[i].append(100.0 * expected_similarity(F, inst) / base_obj)
                except lp.InfeasibleError:
                    percents[i].append(np.nan)
        rows = []
        for cap, vals in zip(grid, percents):
            mean, stderr = _mean_stderr(vals)
            rows.append([f"{cap:.3f}", _fmt(mean), _fmt(stderr)])
        _write_curve(out, ["subset_cap", "percent_of_capped_optimum", "stderr"], rows)
        click.echo(f"wrote {len(rows)} points to {out}")

    _run(body)


@experiment.command()
@click.option("--generator", default="uniform", type=click.Choice(["community", "uniform"]))
@click.option("--n", default=200, show_default=True)
@click.option("--d", default=200, show_default=True)
@click.option("--g", default=6, show_default=True)
@click.option("--k", default=6, show_default=True)
@click.option("--l", default=3, show_default=True)
@click.option("--q0", default=0.5, show_default=True)
@click.option("--gamma", default=2.0, show_default=True, help="Bid scale.")
@click.option("--ranks", default="1,2,4,8,16,32", show_default=True,
              help="Attacker similarity ranks to evaluate.")
@click.option("--trials", default=10, show_default=True, help="Target papers per rank.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
def manipulation(generator, n, d, g, k, l, q0, gamma, ranks, trials, seed, out):
    """Attacker success probability by rank: deterministic vs randomized."""

    def body():
        inst = _make_instance(generator, n, d, g, k, l, RandomSource(seed))
        params = simgen.BidModelParams(gamma=gamma)
        rows = []
        rank_list = [int(r) for r in ranks.split(",")]
        rng = RandomSource(seed + 1)
        for rank, rank_rng in zip(rank_list, rng.split(len(rank_list))):
            report = simgen.manipulation_experiment(
                inst.similarities, params, q0, rank, trials, rank_rng,
                reviewer_load=k, paper_load=l,
            )
            m = report.means()
            rows.append([
                rank, _fmt(m["deterministic"]), _fmt(m["randomized"]),
                _fmt(m["nobid_deterministic"]), _fmt(m["nobid_randomized"]),
            ])
        _write_curve(
            out,
            ["rank", "deterministic", "randomized", "nobid_deterministic", "nobid_randomized"],
            rows,
        )
        click.echo(f"wrote {len(rows)} ranks to {out}")

    _run(body)


@main.command()
@click.option("--generator", default="uniform", type=click.Choice(["community", "uniform", "from-bids"]))
@click.option("--n", default=100, show_default=True)
@click.option("--d", default=100, show_default=True)
@click.option("--g", default=6, show_default=True)
@click.option("--k", default=3, show_default=True)
@click.option("--l", default=3, show_default=True)
@click.option("--bids", "bid_path", default=None, type=click.Path(), help="Bid CSV for from-bids.")
@click.option("--q", default=None, type=float, help="Embed a scalar cap in the problem file.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
def generate(generator, n, d, g, k, l, bid_path, q, seed, out):
    """Generate a problem JSON file from a synthetic model or a bid CSV."""

    def body():
        if generator == "from-bids":
            if bid_path is None:
                raise fileio.ProblemFormatError("from-bids requires --bids")
            levels = fileio.read_bid_csv(bid_path, n, d)
            if levels.dtype != object:
                raise fileio.ProblemFormatError(
                    "from-bids expects yes/maybe/no_response tokens in the bid CSV"
                )
            inst = simgen.bids_to_similarities(levels, reviewer_load=k, paper_load=l)
        else:
            inst = _make_instance(generator, n, d, g, k, l, RandomSource(seed))
        fileio.save_problem(out, inst, q=q)
        click.echo(f"wrote {inst.n_reviewers}x{inst.n_papers} problem to {out}")

    _run(body)


def _mean_stderr(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if np.isnan(arr).any():
        return float("nan"), float("nan")
    if arr.size <= 1:
        return float(arr.mean()), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(arr.size))


def _fmt(x: float) -> str:
    return "nan" if np.isnan(x) else f"{x:.6f}"


if __name__ == "__main__":  # pragma: no cover
    main()
