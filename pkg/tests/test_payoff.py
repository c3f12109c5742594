import numpy as np
import pytest

import feedsim as fs
import helpers
import oracle_bruteforce as oracle
from feedsim.payoff import concentrated_payoffs

# frozen from tests/oracle_bruteforce.py (run standalone before the build):
#   payoff N=3 K=2 stakes(1,1,1) p=0.8 d=1 focal=0 -> 0.33333333333333337
FROZEN_SYMMETRIC_TRIO_PAYOFF = 0.33333333333333337
#   best c for stakes(4,1,1): d=1 -> 3, d=3 -> 3 (3 and 4 tie at d=1)
FROZEN_BEST_C_411 = {1.0: 3, 3.0: 3}


def test_optimal_allocation_examples():
    assert fs.optimal_allocation(8, 3).allocation == (6, 1, 1)
    assert fs.optimal_allocation(5, 1).allocation == (5,)
    assert fs.optimal_allocation(4, 4).allocation == (1, 1, 1, 1)
    with pytest.raises(ValueError):
        fs.optimal_allocation(3, 4)


def test_sole_participant_takes_the_whole_reward():
    for num_classes, d in ((2, 1.0), (5, 2.5)):
        cfg = fs.SystemConfig(
            num_classes=num_classes,
            confusion=fs.ConfusionMatrix.identity(num_classes),
            users=(fs.UserProfile(1, 3),),
        )
        query = fs.PayoffQuery(cfg, 1, fs.Strategy.single(3), d)
        assert fs.expected_payoff_exact(query).value == pytest.approx(1.0, abs=1e-15)
        mc = fs.expected_payoff_mc(query, samples=100, seed=0)
        assert mc.value == 1.0 and mc.std_error == 0.0


@pytest.mark.parametrize("stakes,d", [((3, 2), 1.0), ((3, 2), 2.0), ((1, 1), 4.0)])
def test_perfect_oracles_split_by_factor(stakes, d):
    cfg = fs.SystemConfig(
        num_classes=2,
        confusion=fs.ConfusionMatrix.identity(2),
        users=(fs.UserProfile(1, stakes[0]), fs.UserProfile(2, stakes[1])),
    )
    query = fs.PayoffQuery(cfg, 1, fs.Strategy.single(stakes[0]), d)
    expected = stakes[0] ** d / (stakes[0] ** d + stakes[1] ** d)
    assert fs.expected_payoff_exact(query).value == pytest.approx(expected, abs=1e-15)


def test_frozen_symmetric_trio_value():
    cfg = helpers.symmetric_binary_config([1, 1, 1])
    query = fs.PayoffQuery(cfg, 1, fs.Strategy.single(1), 1.0)
    value = fs.expected_payoff_exact(query).value
    assert value == pytest.approx(FROZEN_SYMMETRIC_TRIO_PAYOFF, abs=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_exact_matches_bruteforce_on_random_instances(seed):
    rng = np.random.default_rng(seed)
    cfg = helpers.random_config(rng, uniform_prior=(seed % 2 == 0))
    strategies = {}
    for user in cfg.users:
        c = int(rng.integers(1, user.total_stake + 1))
        strategies[user.user_id] = fs.optimal_allocation(user.total_stake, c)
    focal = int(rng.integers(1, cfg.num_users + 1))
    d = float(rng.uniform(1.0, 3.0))
    query = fs.PayoffQuery(
        cfg,
        focal,
        strategies[focal],
        d,
        other_strategies={k: v for k, v in strategies.items() if k != focal},
    )
    got = fs.expected_payoff_exact(query).value
    want = oracle.expected_payoff(
        cfg.confusion.entries.tolist(),
        cfg.prior.probabilities.tolist(),
        [strategies[u.user_id].allocation for u in cfg.users],
        focal - 1,
        d,
    )
    assert got == pytest.approx(want, abs=1e-11)
    assert 0.0 <= got <= cfg.total_reward + 1e-12


def test_total_reward_scales_the_estimate():
    cfg = fs.SystemConfig(
        num_classes=2,
        confusion=fs.ConfusionMatrix.identity(2),
        users=(fs.UserProfile(1, 2), fs.UserProfile(2, 1)),
        total_reward=7.5,
    )
    query = fs.PayoffQuery(cfg, 1, fs.Strategy.single(2), 1.0)
    assert fs.expected_payoff_exact(query).value == pytest.approx(5.0)


@pytest.mark.parametrize("seed", range(4))
def test_payoffs_over_all_users_sum_to_total_reward(seed):
    rng = np.random.default_rng(100 + seed)
    cfg = helpers.random_config(rng)
    strategies = {
        u.user_id: fs.optimal_allocation(
            u.total_stake, int(rng.integers(1, u.total_stake + 1))
        )
        for u in cfg.users
    }
    d = float(rng.uniform(1.0, 2.5))
    total = sum(
        fs.expected_payoff_exact(
            fs.PayoffQuery(
                cfg,
                user.user_id,
                strategies[user.user_id],
                d,
                other_strategies={
                    k: v for k, v in strategies.items() if k != user.user_id
                },
            )
        ).value
        for user in cfg.users
    )
    assert total == pytest.approx(cfg.total_reward, abs=1e-10)


@pytest.mark.parametrize("seed", range(4))
def test_splitting_never_hurts_at_d1(seed):
    """At d = 1 the factor is split-invariant, so extra votes only help."""
    rng = np.random.default_rng(200 + seed)
    cfg = helpers.random_config(rng, max_stake=5)
    for user in cfg.users:
        values = concentrated_payoffs(
            cfg, user.user_id, 1.0, range(1, user.total_stake + 1)
        )
        assert np.all(np.diff(values) >= -1e-12)


def test_infeasible_strategy_rejected(ref_config):
    with pytest.raises(ValueError):
        fs.PayoffQuery(
            ref_config, 1, fs.Strategy((9,)), 1.0
        ).resolved_strategies()
    with pytest.raises(ValueError):
        fs.expected_payoff_exact(
            fs.PayoffQuery(ref_config, 99, fs.Strategy.single(1), 1.0)
        )


def test_budget_refusal_directs_to_monte_carlo(ref_config):
    query = fs.PayoffQuery(ref_config, 1, fs.Strategy.single(8), 1.0)
    with pytest.raises(fs.EnumerationBudgetError):
        fs.expected_payoff_exact(query, budget=10**6)


def test_mc_agrees_with_exact_within_three_sigma():
    hits = 0
    trials = 20
    for seed in range(trials):
        rng = np.random.default_rng(300 + seed)
        cfg = helpers.random_config(rng)
        focal = int(rng.integers(1, cfg.num_users + 1))
        stake = cfg.user(focal).total_stake
        c = int(rng.integers(1, stake + 1))
        d = float(rng.uniform(1.0, 2.5))
        query = fs.PayoffQuery(cfg, focal, fs.optimal_allocation(stake, c), d)
        exact = fs.expected_payoff_exact(query).value
        mc = fs.expected_payoff_mc(query, samples=40000, seed=seed)
        band = 3 * mc.std_error if mc.std_error else 1e-9
        hits += abs(mc.value - exact) <= band
    assert hits >= trials - 1


@pytest.mark.parametrize("c", [1, 8])
def test_reference_network_mc_cross_check(ref_config, c):
    """Million-sample estimates bracket the exact values on the big instance."""
    query = fs.PayoffQuery(ref_config, 1, fs.optimal_allocation(8, c), 1.0)
    exact = fs.expected_payoff_exact(query).value
    mc = fs.expected_payoff_mc(query, samples=10**6, seed=2 + c)
    assert abs(mc.value - exact) <= 3 * mc.std_error


def test_mc_is_deterministic_given_seed():
    cfg = helpers.symmetric_binary_config([2, 1, 1])
    query = fs.PayoffQuery(cfg, 1, fs.optimal_allocation(2, 2), 1.5)
    a = fs.expected_payoff_mc(query, samples=5000, seed=9)
    b = fs.expected_payoff_mc(query, samples=5000, seed=9)
    assert (a.value, a.std_error) == (b.value, b.std_error)
    assert a.samples == 5000 and a.method == "monte_carlo"


def test_best_response_frozen_and_trivial():
    cfg = helpers.symmetric_binary_config([4, 1, 1])
    for d, want in FROZEN_BEST_C_411.items():
        assert fs.best_response_c(cfg, 1, d) == want
    # stake-1 user has exactly one feasible strategy
    assert fs.best_response_c(cfg, 2, 1.0) == 1


def test_best_response_matches_bruteforce():
    rng = np.random.default_rng(17)
    cfg = helpers.random_config(rng, max_users=3, max_stake=4)
    for d in (1.0, 2.0):
        want = oracle.best_oracle_count(
            cfg.confusion.entries.tolist(),
            cfg.prior.probabilities.tolist(),
            list(cfg.stakes),
            0,
            d,
        )
        assert fs.best_response_c(cfg, 1, d) == want


@pytest.mark.parametrize("total_stake", [4, 5, 6])
def test_concentrated_allocation_dominates_compositions(total_stake):
    """Concentrated-split dominance on one small instance per stake level."""
    import itertools

    cfg = helpers.symmetric_binary_config([total_stake, 2, 1], accuracy=0.7)
    for c in range(1, total_stake + 1):
        for d in (1.0, 1.5, 2.0):
            best = fs.expected_payoff_exact(
                fs.PayoffQuery(cfg, 1, fs.optimal_allocation(total_stake, c), d)
            ).value
            for composition in itertools.combinations(
                range(1, total_stake), c - 1
            ):
                parts = np.diff((0,) + composition + (total_stake,))
                value = fs.expected_payoff_exact(
                    fs.PayoffQuery(cfg, 1, fs.Strategy(tuple(int(p) for p in parts)), d)
                ).value
                assert value <= best + 1e-12
