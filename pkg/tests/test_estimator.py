import numpy as np
import pytest
from sklearn.base import clone

from randassign import RandomizedAssigner, same_subset_pair_count
from randassign.model import ReviewerPartition
from randassign.rng import RandomSource
from randassign.simgen import uniform_similarities


@pytest.fixture
def S(rng):
    return rng.random((12, 8))


class TestEstimatorApi:
    def test_fit_sets_attributes(self, S):
        est = RandomizedAssigner(mode="pairwise", q=0.5, reviewer_load=6, paper_load=3)
        est.fit(S)
        assert est.assignment_.shape == S.shape
        assert est.objective_ > 0
        assert est.fairness_value_ >= 0
        assert np.all(est.assignment_ <= 0.5 + 1e-7)

    def test_get_set_params_roundtrip(self):
        est = RandomizedAssigner(q=0.5, subset_cap=1.2)
        params = est.get_params()
        assert params["q"] == 0.5
        assert params["subset_cap"] == 1.2
        est.set_params(q=0.7)
        assert est.q == 0.7

    def test_clone_compatible(self, S):
        est = RandomizedAssigner(mode="fair", q=0.6, reviewer_load=4, paper_load=2)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()
        cloned.fit(S)
        assert hasattr(cloned, "fairness_value_")

    def test_unknown_mode_rejected(self, S):
        with pytest.raises(ValueError, match="unknown mode"):
            RandomizedAssigner(mode="maximal").fit(S)

    def test_score_is_objective(self, S):
        est = RandomizedAssigner(q=0.5, reviewer_load=6, paper_load=3).fit(S)
        assert est.score() == est.objective_

    def test_sample_before_fit_raises(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            RandomizedAssigner().sample()


class TestSampling:
    def test_sample_shape_and_loads(self, S):
        est = RandomizedAssigner(q=0.5, reviewer_load=6, paper_load=3).fit(S)
        draws = est.sample(n_samples=5, random_state=0)
        assert draws.shape == (5, 12, 8)
        for M in draws:
            assert M.sum(axis=0).tolist() == [3] * 8
            assert np.all(M.sum(axis=1) <= 6)

    def test_sample_reproducible(self, S):
        est = RandomizedAssigner(q=0.5, reviewer_load=6, paper_load=3, random_state=7).fit(S)
        a = est.sample(n_samples=3)
        b = est.sample(n_samples=3)
        assert np.array_equal(a, b)

    def test_partition_mode_prevents_pairs(self, S):
        labels = np.arange(12) % 4
        est = RandomizedAssigner(
            mode="partition", q=0.5, reviewer_load=6, paper_load=3,
            partition=labels, subset_cap=1.0,
        ).fit(S)
        part = ReviewerPartition.from_labels(labels)
        for M in est.sample(n_samples=300, random_state=1):
            assert same_subset_pair_count(M, part) == 0

    def test_lottery_reconstructs_marginals(self, S):
        est = RandomizedAssigner(q=0.5, reviewer_load=6, paper_load=3).fit(S)
        dist = est.lottery()
        assert np.abs(dist.marginals() - est.assignment_).max() <= 1e-6


class TestModes:
    def test_fair_mode(self, S):
        est = RandomizedAssigner(mode="fair", q=0.6, reviewer_load=6, paper_load=3).fit(S)
        per_paper = (S * est.assignment_).sum(axis=0)
        assert est.fairness_value_ == pytest.approx(per_paper.min(), abs=1e-6)

    def test_bad_pairwise_mode(self, S, rng):
        W = rng.random(S.shape)
        est = RandomizedAssigner(
            mode="bad-pairwise", bad_probs=W, lam=0.4, reviewer_load=6, paper_load=3
        ).fit(S)
        assert np.all(est.assignment_ * W <= 0.4 + 1e-6)

    def test_bad_expectation_mode(self, S, rng):
        W = rng.random(S.shape)
        est = RandomizedAssigner(
            mode="bad-expectation", bad_probs=W, lam=0.6, mu=1.0,
            reviewer_load=6, paper_load=3,
        ).fit(S)
        assert np.all((est.assignment_ * W).sum(axis=0) <= 1.0 + 1e-6)

    def test_cap_sweep_via_set_params(self):
        S = uniform_similarities(15, 10, RandomSource(3)).similarities
        est = RandomizedAssigner(q=0.3, reviewer_load=6, paper_load=3)
        objectives = []
        for q0 in (0.3, 0.5, 0.8, 1.0):
            objectives.append(est.set_params(q=q0).fit(S).objective_)
        assert all(b >= a - 1e-7 for a, b in zip(objectives, objectives[1:]))
