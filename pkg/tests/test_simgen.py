import numpy as np
import pytest

from randassign import RandomSource
from randassign.simgen import (
    BidModelParams,
    apply_bids,
    attacker_by_rank,
    bids_to_similarities,
    community_similarities,
    honest_bids,
    malicious_bids,
    manipulation_experiment,
    reviewer_groups,
    uniform_similarities,
)


class TestCommunityModel:
    def test_two_blocks(self):
        inst = community_similarities(6, 6, 3)
        S = inst.similarities
        assert S[:3, :3].sum() == 9
        assert S[3:, 3:].sum() == 9
        assert S[:3, 3:].sum() == 0
        assert S[3:, :3].sum() == 0

    def test_full_block_is_all_ones(self):
        inst = community_similarities(4, 4, 4)
        assert inst.similarities.sum() == 16

    def test_block_unconstrained_optimum(self):
        inst = community_similarities(360, 360, 6)
        # 3 unit-similarity reviewers per paper at l=3
        assert float(np.sum(np.sort(inst.similarities, axis=0)[-3:, :])) == 1080.0

    def test_indivisible_group_raises(self):
        with pytest.raises(ValueError):
            community_similarities(6, 6, 4)
        with pytest.raises(ValueError):
            community_similarities(6, 5, 3)


class TestUniformModel:
    def test_deterministic_under_seed(self):
        a = uniform_similarities(20, 15, RandomSource(4))
        b = uniform_similarities(20, 15, RandomSource(4))
        assert np.array_equal(a.similarities, b.similarities)

    def test_entries_in_unit_interval(self):
        inst = uniform_similarities(50, 40, RandomSource(1))
        assert inst.similarities.min() >= 0.0
        assert inst.similarities.max() < 1.0

    def test_sample_mean_near_half(self):
        inst = uniform_similarities(1000, 1000, RandomSource(2))
        assert 0.49 <= inst.similarities.mean() <= 0.51


class TestBidsToSimilarities:
    def test_level_mapping(self):
        inst = bids_to_similarities([["yes", "maybe"], ["no_response", "yes"]])
        assert inst.similarities.tolist() == [[4.0, 2.0], [1.0, 4.0]]

    def test_all_maybe(self):
        inst = bids_to_similarities([["maybe"] * 3] * 2)
        assert np.all(inst.similarities == 2.0)

    def test_unknown_token_raises(self):
        with pytest.raises(ValueError, match="unknown bid level"):
            bids_to_similarities([["yes", "nope"]])


class TestApplyBids:
    def test_zero_bids_identity(self):
        S = np.array([[0.3, 0.7]])
        assert apply_bids(S, np.zeros((1, 2), dtype=int), 2.0) == pytest.approx(S)

    def test_positive_bid_scales_up(self):
        assert apply_bids(np.ones((1, 1)), np.ones((1, 1), dtype=int), 2.0)[0, 0] == pytest.approx(2.0)

    def test_negative_bid_scales_down(self):
        assert apply_bids(np.ones((1, 1)), -np.ones((1, 1), dtype=int), 4.0)[0, 0] == pytest.approx(0.25)

    def test_gamma_must_be_positive(self):
        with pytest.raises(ValueError):
            apply_bids(np.ones((1, 1)), np.zeros((1, 1), dtype=int), 0.0)

    def test_bid_levels_validated(self):
        with pytest.raises(ValueError, match="values in"):
            apply_bids(np.ones((1, 1)), np.array([[2]]), 2.0)


class TestHonestBids:
    def test_group_one_bids_nothing(self):
        rng = RandomSource(3)
        S = uniform_similarities(100, 50, rng).similarities
        params = BidModelParams()
        group_rng = RandomSource(3)
        groups = reviewer_groups(100, params, group_rng)
        bids = honest_bids(S, params, RandomSource(3))
        assert np.all(bids[groups == 0] == 0)

    def test_bids_only_in_top_fraction(self):
        rng = RandomSource(5)
        S = uniform_similarities(60, 50, rng).similarities
        bids = honest_bids(S, BidModelParams(), RandomSource(5))
        t = int(0.10 * 50)
        for r in range(60):
            nonzero = np.flatnonzero(bids[r])
            if nonzero.size == 0:
                continue
            cutoff = np.sort(S[r])[-t]
            assert np.all(S[r, nonzero] >= cutoff)

    def test_group_three_bid_rate(self):
        # group-3 reviewers bid on ~24 of their top-100 papers at d=1000
        params = BidModelParams()
        S = uniform_similarities(300, 1000, RandomSource(6)).similarities
        groups = reviewer_groups(300, params, RandomSource(6))
        bids = honest_bids(S, params, RandomSource(6))
        g3 = bids[groups == 2]
        per_reviewer = (g3 != 0).sum(axis=1)
        mean = per_reviewer.mean()
        sigma = np.sqrt(100 * 0.24 * 0.76 / len(per_reviewer))
        assert abs(mean - 24.0) <= 3 * sigma

    def test_deterministic_under_seed(self):
        S = uniform_similarities(40, 30, RandomSource(7)).similarities
        b1 = honest_bids(S, BidModelParams(), RandomSource(8))
        b2 = honest_bids(S, BidModelParams(), RandomSource(8))
        assert np.array_equal(b1, b2)

    def test_group_sizes_exact_split(self):
        groups = reviewer_groups(103, BidModelParams(), RandomSource(9))
        counts = np.bincount(groups, minlength=3)
        assert counts[0] == 20  # floor(0.2 * 103)
        assert counts[1] == 51  # floor(0.5 * 103)
        assert counts[2] == 32  # remainder


class TestMaliciousBids:
    def test_pattern(self):
        assert malicious_bids(1, 3).tolist() == [-1, 1, -1]

    def test_single_positive_at_target(self):
        row = malicious_bids(4, 10)
        assert row[4] == 1
        assert (row == 1).sum() == 1
        assert (row == -1).sum() == 9

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            malicious_bids(3, 3)


class TestAttackerByRank:
    def test_rank_one_is_argmax(self):
        S = np.array([[0.1], [0.9], [0.5]])
        assert attacker_by_rank(S, 0, 1) == 1
        assert attacker_by_rank(S, 0, 2) == 2
        assert attacker_by_rank(S, 0, 3) == 0

    def test_ties_break_to_lower_index(self):
        S = np.array([[0.5], [0.5], [0.5]])
        assert attacker_by_rank(S, 0, 1) == 0
        assert attacker_by_rank(S, 0, 2) == 1


@pytest.fixture(scope="module")
def report():
    S = uniform_similarities(30, 20, RandomSource(10)).similarities
    return manipulation_experiment(
        S, BidModelParams(gamma=2.0), q0=0.5, attacker_rank=2, trials=4,
        rng=RandomSource(11), reviewer_load=6, paper_load=3,
    )


class TestManipulationExperiment:
    def test_randomized_success_capped(self, report):
        assert np.all(report.randomized <= 0.5 + 1e-6)

    def test_deterministic_success_binary(self, report):
        assert set(np.unique(report.deterministic)) <= {0.0, 1.0}
        assert set(np.unique(report.nobid_deterministic)) <= {0.0, 1.0}

    def test_means_reported(self, report):
        m = report.means()
        assert set(m) == {
            "deterministic", "randomized", "nobid_deterministic", "nobid_randomized",
        }
        assert 0.0 <= m["randomized"] <= 0.5 + 1e-6

    def test_uncapped_randomized_matches_deterministic_objective(self):
        S = uniform_similarities(20, 12, RandomSource(12)).similarities
        report = manipulation_experiment(
            S, BidModelParams(), q0=1.0, attacker_rank=1, trials=3,
            rng=RandomSource(13), reviewer_load=6, paper_load=3,
        )
        assert report.objective_randomized == pytest.approx(
            report.objective_deterministic, abs=1e-5
        )

    def test_trials_validated(self):
        with pytest.raises(ValueError):
            manipulation_experiment(np.ones((4, 3)), BidModelParams(), 0.5, 1, 0)


class TestBidModelParams:
    def test_defaults_match_bidding_model(self):
        p = BidModelParams()
        assert p.group_fractions == (0.20, 0.50, 0.30)
        assert p.bid_probabilities == (0.0, 0.016, 0.24)
        assert p.top_fraction == 0.10

    def test_validation(self):
        with pytest.raises(ValueError):
            BidModelParams(gamma=-1.0)
        with pytest.raises(ValueError):
            BidModelParams(group_fractions=(0.5, 0.5, 0.5))
        with pytest.raises(ValueError):
            BidModelParams(bid_probabilities=(0.0, 2.0, 0.1))
