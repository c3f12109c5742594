"""System error rate and (oracle count, exponent) sweep experiments.

The error rate is the probability that the majority output differs from the
true class, with ties integrated analytically. It depends on vote counts
only, never on the reward exponent, so a sweep computes it once per oracle
count and repeats it across exponents. Sweeps emit fixed-schema CSV rows
ordered by (d, c), written atomically so a failed run never leaves a partial
file behind.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import _montecarlo
from .constants import DEFAULT_MC_SAMPLES, DEFAULT_SEED
from .enumeration import DEFAULT_BUDGET, get_enumerator
from .model import Strategy, SystemConfig, require_valid
from .payoff import (
    EXACT,
    MONTE_CARLO,
    PayoffQuery,
    concentrated_payoffs,
    expected_payoff_mc,
    optimal_allocation,
)

CSV_HEADER = "c,d,expected_payoff,payoff_stderr,error_rate,error_stderr"


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: the focal user's oracle counts crossed with exponents."""

    config: SystemConfig
    focal_user: int
    c_values: tuple[int, ...]
    d_values: tuple[float, ...]
    method: str = EXACT
    samples: int = DEFAULT_MC_SAMPLES
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        require_valid(self.config)
        object.__setattr__(self, "c_values", tuple(int(c) for c in self.c_values))
        object.__setattr__(self, "d_values", tuple(float(d) for d in self.d_values))
        if not self.c_values or not self.d_values:
            raise ValueError("c_values and d_values must be non-empty")
        stake = self.config.user(self.focal_user).total_stake
        for c in self.c_values:
            if not 1 <= c <= stake:
                raise ValueError(
                    f"c={c} infeasible for user {self.focal_user} with stake {stake}"
                )
        for d in self.d_values:
            if d < 1.0:
                raise ValueError(f"exponent must be >= 1, got {d!r}")
        if self.method not in (EXACT, MONTE_CARLO):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class SweepRow:
    c: int
    d: float
    expected_payoff: float
    payoff_stderr: float
    error_rate: float
    error_stderr: float


def _resolve_profiles(
    config: SystemConfig, strategies: Mapping[int, Strategy] | None
) -> tuple[list[int], list[Strategy]]:
    resolved = config.default_strategies()
    for user_id, strategy in (strategies or {}).items():
        problems = strategy.violations_for_stake(config.user(user_id).total_stake)
        if problems:
            raise ValueError(f"user {user_id}: " + "; ".join(problems))
        resolved[user_id] = strategy
    ordered = [u.user_id for u in config.users]
    return ordered, [resolved[m] for m in ordered]


def _exact_error_rates(
    config: SystemConfig,
    focal_user: int,
    focal_counts: Sequence[int],
    other_strategies: Mapping[int, Strategy] | None,
    budget: int,
    threads: int | None,
) -> np.ndarray:
    """Error rate for each focal oracle count, sharing one enumeration pass."""
    ordered, resolved = _resolve_profiles(config, other_strategies)
    rival_mults = [
        s.oracle_count for m, s in zip(ordered, resolved) if m != focal_user
    ]
    engine = get_enumerator(
        config.confusion.entries, config.prior.probabilities, rival_mults
    )
    engine.check_budget(budget)
    return engine.error_rates(focal_counts, threads=threads)


def error_rate_exact(
    config: SystemConfig,
    strategies: Mapping[int, Strategy] | None = None,
    budget: int = DEFAULT_BUDGET,
    threads: int | None = None,
) -> float:
    """Exact probability that the decided output differs from the truth.

    Independent of the reward exponent: only oracle counts matter.
    """
    require_valid(config)
    ordered, resolved = _resolve_profiles(config, strategies)
    focal = ordered[0]
    return float(
        _exact_error_rates(
            config,
            focal,
            [resolved[0].oracle_count],
            {m: s for m, s in zip(ordered, resolved) if m != focal},
            budget,
            threads,
        )[0]
    )


def error_rate_mc(
    config: SystemConfig,
    strategies: Mapping[int, Strategy] | None = None,
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> tuple[float, float]:
    """Sampled estimate of the error rate with its standard error."""
    require_valid(config)
    ordered, resolved = _resolve_profiles(config, strategies)
    return _montecarlo.error_rate_mc_core(
        config.confusion.entries,
        config.prior.probabilities,
        [s.oracle_count for s in resolved],
        samples,
        seed,
    )


def run_experiment(
    spec: ExperimentSpec,
    budget: int = DEFAULT_BUDGET,
    threads: int | None = None,
) -> list[SweepRow]:
    """Evaluate payoff and error rate over the (c, d) grid of a spec.

    The focal user plays the concentrated allocation at each c; everyone else
    runs a single full-stake oracle. Rows are ordered by (d, c). Error rates
    are computed once per c and reused across d. Deterministic for a fixed
    seed regardless of thread count.
    """
    config = spec.config
    stake = config.user(spec.focal_user).total_stake
    counts = list(spec.c_values)
    if spec.method == EXACT:
        error_by_c = dict(
            zip(counts, _exact_error_rates(config, spec.focal_user, counts, None,
                                           budget, threads))
        )
        error_stderr_by_c = {c: 0.0 for c in counts}
        payoff_cell = {}
        for d in spec.d_values:
            values = concentrated_payoffs(
                config, spec.focal_user, d, counts, budget=budget, threads=threads
            )
            for c, value in zip(counts, values):
                payoff_cell[(c, d)] = (float(value), 0.0)
    else:
        error_by_c = {}
        error_stderr_by_c = {}
        for ci, c in enumerate(counts):
            err_seed = np.random.SeedSequence(
                spec.seed, spawn_key=(0, ci)
            ).generate_state(1)[0]
            err, err_se = error_rate_mc(
                config,
                {spec.focal_user: optimal_allocation(stake, c)},
                samples=spec.samples,
                seed=int(err_seed),
            )
            error_by_c[c] = err
            error_stderr_by_c[c] = err_se
        payoff_cell = {}
        for di, d in enumerate(spec.d_values):
            for ci, c in enumerate(counts):
                pay_seed = np.random.SeedSequence(
                    spec.seed, spawn_key=(1, di, ci)
                ).generate_state(1)[0]
                est = expected_payoff_mc(
                    PayoffQuery(config, spec.focal_user, optimal_allocation(stake, c), d),
                    samples=spec.samples,
                    seed=int(pay_seed),
                )
                payoff_cell[(c, d)] = (est.value, est.std_error)
    rows = []
    for d in spec.d_values:
        for c in counts:
            value, stderr = payoff_cell[(c, d)]
            rows.append(
                SweepRow(
                    c=c,
                    d=d,
                    expected_payoff=value,
                    payoff_stderr=stderr,
                    error_rate=float(error_by_c[c]),
                    error_stderr=float(error_stderr_by_c[c]),
                )
            )
    return rows


def _format(value: float) -> str:
    return f"{value:.12g}"


def sweep_rows_to_csv(rows: Sequence[SweepRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    str(r.c),
                    _format(r.d),
                    _format(r.expected_payoff),
                    _format(r.payoff_stderr),
                    _format(r.error_rate),
                    _format(r.error_stderr),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    """Write the fixed-schema sweep CSV atomically (write then rename)."""
    path = Path(path)
    text = sweep_rows_to_csv(rows)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def experiment_from_dict(
    config: SystemConfig, section: Mapping | None, **overrides
) -> ExperimentSpec:
    """Build a spec from a config document's `experiment` section plus overrides."""
    section = dict(section or {})
    section.update({k: v for k, v in overrides.items() if v is not None})
    focal = section.get("focal_user", config.users[0].user_id)
    stake = config.user(focal).total_stake
    c_values = section.get("c_values", list(range(1, stake + 1)))
    d_values = section.get("d_values", [1.0])
    method = section.get("method", EXACT)
    return ExperimentSpec(
        config=config,
        focal_user=focal,
        c_values=tuple(c_values),
        d_values=tuple(d_values),
        method=MONTE_CARLO if method == "mc" else method,
        samples=int(section.get("samples", DEFAULT_MC_SAMPLES)),
        seed=int(section.get("seed", DEFAULT_SEED)),
    )
