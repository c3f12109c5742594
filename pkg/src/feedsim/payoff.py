"""Expected payoff of a (possibly mirroring) user, exact and Monte Carlo.

The exact path enumerates every joint rival-report vector (the engine in
`enumeration`); the Monte Carlo path samples full rounds. Both integrate the
uniform tie-break analytically or by sampling, respectively. Concentrating
all stake beyond the per-oracle minimum on a single oracle maximizes the
reward factor for a fixed oracle count, so the concentrated allocation is
the canonical mirroring strategy and the one the best-response search uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import _montecarlo
from .constants import DEFAULT_MC_SAMPLES, DEFAULT_SEED
from .enumeration import DEFAULT_BUDGET, get_enumerator
from .incentive import allocation_factor
from .model import Strategy, SystemConfig, require_valid

EXACT = "exact"
MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class PayoffQuery:
    """Payoff question: one focal user's strategy against everyone else's.

    `other_strategies` defaults to every rival running a single oracle with
    its full stake. `d` is the reward-factor exponent.
    """

    config: SystemConfig
    focal_user: int
    focal_strategy: Strategy
    d: float
    other_strategies: Mapping[int, Strategy] | None = None

    def resolved_strategies(self) -> dict[int, Strategy]:
        """Per-user strategies with defaults filled in; validates feasibility."""
        require_valid(self.config)
        if self.d < 1.0:
            raise ValueError(f"exponent must be >= 1, got {self.d!r}")
        strategies = self.config.default_strategies()
        self.config.user(self.focal_user)  # raises on unknown id
        overrides = dict(self.other_strategies or {})
        overrides[self.focal_user] = self.focal_strategy
        for user_id, strategy in overrides.items():
            problems = strategy.violations_for_stake(
                self.config.user(user_id).total_stake
            )
            if problems:
                raise ValueError(f"user {user_id}: " + "; ".join(problems))
            strategies[user_id] = strategy
        return strategies


@dataclass(frozen=True)
class PayoffEstimate:
    """Expected payoff plus how it was obtained."""

    value: float
    method: str
    std_error: float = 0.0
    samples: int = 0


def optimal_allocation(total_stake: int, oracle_count: int) -> Strategy:
    """Stake split maximizing the reward factor at a fixed oracle count.

    Puts the minimum stake on all but one oracle: (s - c + 1, 1, ..., 1).
    For d >= 1 the factor is convex in each entry, so shifting stake from a
    smaller entry onto a larger one never decreases it; this allocation
    dominates every other integer split of `total_stake` into `oracle_count`
    parts.
    """
    return Strategy.concentrated(total_stake, oracle_count)


def _engine_inputs(query: PayoffQuery):
    """(engine, focal strategy, ordered rival strategies) for a query."""
    strategies = query.resolved_strategies()
    rivals = [u.user_id for u in query.config.users if u.user_id != query.focal_user]
    rival_mults = [strategies[m].oracle_count for m in rivals]
    engine = get_enumerator(
        query.config.confusion.entries,
        query.config.prior.probabilities,
        rival_mults,
    )
    return engine, strategies, rivals


def expected_payoff_exact(
    query: PayoffQuery,
    budget: int = DEFAULT_BUDGET,
    threads: int | None = None,
) -> PayoffEstimate:
    """Exact expected payoff by full enumeration (refuses over-budget spaces)."""
    engine, strategies, rivals = _engine_inputs(query)
    engine.check_budget(budget)
    focal_factor = allocation_factor(strategies[query.focal_user].allocation, query.d)
    rival_factors = [allocation_factor(strategies[m].allocation, query.d) for m in rivals]
    value = engine.payoffs(
        [strategies[query.focal_user].oracle_count],
        [focal_factor],
        rival_factors,
        total_reward=query.config.total_reward,
        threads=threads,
    )[0]
    return PayoffEstimate(value=float(value), method=EXACT)


def expected_payoff_mc(
    query: PayoffQuery,
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> PayoffEstimate:
    """Unbiased sampled estimate of the same expectation, with standard error."""
    strategies = query.resolved_strategies()
    ordered = [u.user_id for u in query.config.users]
    mults = [strategies[m].oracle_count for m in ordered]
    factors = [allocation_factor(strategies[m].allocation, query.d) for m in ordered]
    value, stderr = _montecarlo.payoff_mc(
        query.config.confusion.entries,
        query.config.prior.probabilities,
        mults,
        factors,
        ordered.index(query.focal_user),
        query.config.total_reward,
        samples,
        seed,
    )
    return PayoffEstimate(
        value=value, method=MONTE_CARLO, std_error=stderr, samples=int(samples)
    )


def concentrated_payoffs(
    config: SystemConfig,
    focal_user: int,
    d: float,
    oracle_counts,
    budget: int = DEFAULT_BUDGET,
    threads: int | None = None,
) -> np.ndarray:
    """Exact payoffs for several concentrated oracle counts in one engine pass.

    Rivals run single full-stake oracles. Shares the enumerated chunks and the
    per-class rival-factor sums across all requested counts.
    """
    stake = config.user(focal_user).total_stake
    counts = [int(c) for c in oracle_counts]
    base_query = PayoffQuery(
        config=config,
        focal_user=focal_user,
        focal_strategy=Strategy.single(stake),
        d=d,
    )
    engine, strategies, rivals = _engine_inputs(base_query)
    engine.check_budget(budget)
    factors = []
    for c in counts:
        alloc = optimal_allocation(stake, c).allocation  # validates feasibility
        factors.append(allocation_factor(alloc, d))
    rival_factors = [allocation_factor(strategies[m].allocation, d) for m in rivals]
    return engine.payoffs(
        counts,
        factors,
        rival_factors,
        total_reward=config.total_reward,
        threads=threads,
    )


def best_response_c(
    config: SystemConfig,
    focal_user: int,
    d: float,
    method: str = EXACT,
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = DEFAULT_SEED,
    budget: int = DEFAULT_BUDGET,
    threads: int | None = None,
) -> int:
    """Oracle count maximizing the focal user's expected payoff.

    Evaluates every feasible concentrated strategy with rivals at single
    full-stake oracles; ties break toward fewer oracles.
    """
    stake = config.user(focal_user).total_stake
    counts = list(range(1, stake + 1))
    if method == EXACT:
        values = concentrated_payoffs(
            config, focal_user, d, counts, budget=budget, threads=threads
        )
    elif method == MONTE_CARLO:
        seeds = np.random.SeedSequence(seed).generate_state(len(counts))
        values = np.array(
            [
                expected_payoff_mc(
                    PayoffQuery(
                        config=config,
                        focal_user=focal_user,
                        focal_strategy=optimal_allocation(stake, c),
                        d=d,
                    ),
                    samples=samples,
                    seed=int(s),
                ).value
                for c, s in zip(counts, seeds)
            ]
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    return counts[int(np.argmax(values))]  # argmax takes the first (smallest c) on ties
