import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randassign import (
    AssignmentDistribution,
    DeterministicAssignment,
    FractionalAssignment,
    ProbabilityCap,
    ProblemInstance,
    ReviewerPartition,
    expected_similarity,
    same_subset_pair_count,
    stochastic_fairness,
    validate_instance,
)
from randassign.model import subset_paper_counts, subset_paper_loads


class TestValidateInstance:
    def test_feasible_instance_is_ok(self):
        inst = ProblemInstance([[0.9], [0.3]], 1, 1)
        assert validate_instance(inst).ok

    def test_capacity_shortfall_reported(self):
        inst = ProblemInstance([[0.5, 0.5]], 1, 1)
        report = validate_instance(inst)
        assert not report.ok
        assert "total reviewer capacity 1 < total paper demand 2" in str(report)

    def test_negative_similarity_reported(self):
        inst = ProblemInstance([[0.5], [-0.1]], 1, 1)
        report = validate_instance(inst)
        assert not report.ok
        assert "negative similarity" in str(report)

    def test_nonfinite_similarity_reported(self):
        inst = ProblemInstance([[np.inf], [0.1]], 1, 1)
        assert not validate_instance(inst).ok

    def test_loads_below_one_reported(self):
        inst = ProblemInstance([[1.0], [1.0]], [1, 0], 1)
        assert not validate_instance(inst).ok


class TestExpectedSimilarity:
    def test_single_entry(self):
        inst = ProblemInstance([[0.7]], 1, 1)
        assert expected_similarity([[1.0]], inst) == pytest.approx(0.7)

    def test_linear_combination(self):
        inst = ProblemInstance([[0.9], [0.3]], 1, 1)
        assert expected_similarity([[0.5], [0.5]], inst) == pytest.approx(0.6)

    def test_zero_assignment(self):
        inst = ProblemInstance([[0.9], [0.3]], 1, 1)
        assert expected_similarity(np.zeros((2, 1)), inst) == 0.0

    def test_dimension_mismatch_raises(self):
        inst = ProblemInstance([[0.9], [0.3]], 1, 1)
        with pytest.raises(ValueError):
            expected_similarity(np.zeros((1, 2)), inst)

    @given(alpha=st.floats(0.0, 1.0), seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_linearity(self, alpha, seed):
        r = np.random.default_rng(seed)
        inst = ProblemInstance(r.random((4, 3)), 2, 1)
        F1, F2 = r.random((4, 3)), r.random((4, 3))
        mixed = expected_similarity(alpha * F1 + (1 - alpha) * F2, inst)
        parts = alpha * expected_similarity(F1, inst) + (1 - alpha) * expected_similarity(F2, inst)
        assert mixed == pytest.approx(parts, rel=1e-9, abs=1e-12)


class TestStochasticFairness:
    def test_min_over_papers(self):
        inst = ProblemInstance([[5.0, 0.0], [0.0, 2.0]], 1, 1)
        assert stochastic_fairness([[1, 0], [0, 1]], inst) == pytest.approx(2.0)

    def test_uniform_half(self):
        inst = ProblemInstance(np.ones((2, 2)), 1, 1)
        assert stochastic_fairness(np.full((2, 2), 0.5), inst) == pytest.approx(1.0)

    def test_single_paper_equals_sum(self):
        inst = ProblemInstance([[0.9], [0.3]], 1, 1)
        assert stochastic_fairness([[0.5], [0.5]], inst) == pytest.approx(0.6)

    def test_jensen_upper_bounds_lottery_fairness(self, rng):
        # fairness of the marginals dominates the lottery's expected min-paper similarity
        inst = ProblemInstance(rng.random((4, 3)), 2, 2)
        M1 = DeterministicAssignment([[1, 1, 0], [1, 0, 1], [0, 1, 1], [0, 0, 0]])
        M2 = DeterministicAssignment([[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]])
        dist = AssignmentDistribution([(0.4, M1), (0.6, M2)])
        fair_of_mix = stochastic_fairness(dist.marginals(), inst)
        expected_fair = sum(
            w * stochastic_fairness(M.assigned.astype(float), inst) for w, M in dist.components
        )
        assert fair_of_mix >= expected_fair - 1e-12


class TestSameSubsetPairs:
    def test_two_same_subset_reviewers_one_paper(self):
        part = ReviewerPartition([0, 0, 1])
        M = [[1], [1], [0]]
        assert same_subset_pair_count(M, part) == 1

    def test_singleton_subsets_never_pair(self):
        part = ReviewerPartition.singletons(3)
        assert same_subset_pair_count([[1], [1], [1]], part) == 0

    def test_three_same_subset_reviewers(self):
        part = ReviewerPartition([0, 0, 0])
        assert same_subset_pair_count([[1], [1], [1]], part) == 3

    def test_counts_and_loads_helpers(self):
        part = ReviewerPartition([0, 1, 0])
        F = np.array([[0.5, 0.2], [1.0, 0.0], [0.25, 0.5]])
        loads = subset_paper_loads(F, part)
        assert loads == pytest.approx(np.array([[0.75, 0.7], [1.0, 0.0]]))
        M = np.array([[1, 0], [1, 0], [0, 1]])
        counts = subset_paper_counts(M, part)
        assert counts.tolist() == [[1, 1], [1, 0]]


class TestTypes:
    def test_instance_arrays_are_readonly(self):
        inst = ProblemInstance([[1.0]], 1, 1)
        with pytest.raises(ValueError):
            inst.similarities[0, 0] = 2.0

    def test_scalar_loads_broadcast(self):
        inst = ProblemInstance(np.ones((3, 2)), 2, 1)
        assert inst.reviewer_load.tolist() == [2, 2, 2]
        assert inst.paper_load.tolist() == [1, 1]

    def test_heterogeneous_loads(self):
        inst = ProblemInstance(np.ones((2, 2)), [1, 3], [2, 1])
        assert inst.reviewer_load.tolist() == [1, 3]
        assert inst.paper_load.tolist() == [2, 1]

    def test_cap_range_enforced(self):
        with pytest.raises(ValueError):
            ProbabilityCap([[1.5]])
        with pytest.raises(ValueError):
            ProbabilityCap([[-0.1]])

    def test_partition_density_enforced(self):
        with pytest.raises(ValueError):
            ReviewerPartition([0, 2])
        part = ReviewerPartition.from_labels(["cmu", "mit", "cmu"])
        assert part.n_subsets == 2
        assert part.members(part.subset_of[0]).tolist() == [0, 2]

    def test_fractional_validation(self):
        inst = ProblemInstance(np.ones((2, 1)), 1, 1)
        ok = FractionalAssignment([[0.5], [0.5]])
        assert ok.validate(inst).ok
        bad_col = FractionalAssignment([[0.5], [0.4]])
        assert not bad_col.validate(inst).ok
        bad_row = FractionalAssignment([[1.5], [-0.5]])
        assert not bad_row.validate(inst).ok

    def test_deterministic_validation(self):
        inst = ProblemInstance(np.ones((2, 1)), 1, 1)
        assert DeterministicAssignment([[1], [0]]).validate(inst).ok
        assert not DeterministicAssignment([[1], [1]]).validate(inst).ok
        with pytest.raises(ValueError):
            DeterministicAssignment([[0.5], [0.5]])

    def test_distribution_weights_and_marginals(self):
        M1 = DeterministicAssignment([[1], [0]])
        M2 = DeterministicAssignment([[0], [1]])
        dist = AssignmentDistribution([(0.5, M1), (0.5, M2)])
        assert dist.marginals() == pytest.approx(np.array([[0.5], [0.5]]))
        inst = ProblemInstance(np.ones((2, 1)), 1, 1)
        assert dist.validate(inst).ok
        with pytest.raises(ValueError):
            AssignmentDistribution([(0.0, M1)])
