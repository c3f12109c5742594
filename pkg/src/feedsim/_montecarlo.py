"""Vectorized Monte Carlo round simulation shared by payoff and metrics code.

Each trial draws a truth class from the prior, one report per user from the
confusion row, resolves the majority vote with a uniformly sampled tie-break,
and settles the reward split -- the same round semantics as the scalar
building blocks (`sample_report`, `majority_vote`, `distribute_rewards`),
evaluated in batches. Batch sizes are fixed so a given seed always yields
the same stream.
"""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

_BATCH = 1 << 16


def _inverse_cdf(cum_rows: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Map uniforms through per-row CDFs; clipped so row sums < 1 by an ulp are safe."""
    idx = (uniforms[:, None] >= cum_rows).sum(axis=1)
    return np.minimum(idx, cum_rows.shape[1] - 1)


def mc_rounds(
    confusion: np.ndarray,
    prior: np.ndarray,
    multiplicities: Sequence[int],
    samples: int,
    rng: np.random.Generator,
) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield batches of (truth, per-user reports, decided output), all 0-based."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    mults = np.asarray(multiplicities, dtype=np.int64)
    num_users = mults.size
    cum_prior = np.cumsum(np.asarray(prior, dtype=np.float64))[None, :]
    cum_rows = np.cumsum(np.asarray(confusion, dtype=np.float64), axis=1)
    num_classes = cum_rows.shape[1]
    remaining = int(samples)
    while remaining > 0:
        n = min(remaining, _BATCH)
        remaining -= n
        truth = _inverse_cdf(cum_prior.repeat(n, axis=0), rng.random(n))
        report_uniforms = rng.random((n, num_users))
        reports = np.empty((n, num_users), dtype=np.int64)
        truth_cdfs = cum_rows[truth]
        for m in range(num_users):
            reports[:, m] = _inverse_cdf(truth_cdfs, report_uniforms[:, m])
        counts = np.zeros((n, num_classes), dtype=np.int64)
        rows = np.arange(n)
        for m in range(num_users):
            counts[rows, reports[:, m]] += mults[m]
        top = counts.max(axis=1)
        winner_mask = counts == top[:, None]
        n_winners = winner_mask.sum(axis=1)
        # tie-break: uniform among winners; drawn every round for a fixed stream
        pick = np.minimum(
            (rng.random(n) * n_winners).astype(np.int64) + 1, n_winners
        )
        output = (np.cumsum(winner_mask, axis=1) >= pick[:, None]).argmax(axis=1)
        yield truth, reports, output


def mean_and_stderr(total: float, total_sq: float, samples: int) -> tuple[float, float]:
    mean = total / samples
    if samples < 2:
        return mean, 0.0
    variance = max(total_sq - samples * mean * mean, 0.0) / (samples - 1)
    return mean, float(np.sqrt(variance / samples))


def payoff_mc(
    confusion: np.ndarray,
    prior: np.ndarray,
    multiplicities: Sequence[int],
    user_factors: Sequence[float],
    focal_index: int,
    total_reward: float,
    samples: int,
    seed: int,
) -> tuple[float, float]:
    """Sample mean and standard error of the focal user's round payoff."""
    factors = np.asarray(user_factors, dtype=np.float64)
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    for _, reports, output in mc_rounds(confusion, prior, multiplicities, samples, rng):
        correct = reports == output[:, None]
        denom = correct @ factors
        # factor/denom first: a lone winner pays exactly total_reward
        payoff = np.where(
            correct[:, focal_index],
            factors[focal_index] / denom * float(total_reward),
            0.0,
        )
        total += float(payoff.sum())
        total_sq += float((payoff * payoff).sum())
    return mean_and_stderr(total, total_sq, samples)


def error_rate_mc_core(
    confusion: np.ndarray,
    prior: np.ndarray,
    multiplicities: Sequence[int],
    samples: int,
    seed: int,
) -> tuple[float, float]:
    """Sample mean and standard error of the output-differs-from-truth indicator."""
    rng = np.random.default_rng(seed)
    errors = 0
    for truth, _, output in mc_rounds(confusion, prior, multiplicities, samples, rng):
        errors += int((output != truth).sum())
    return mean_and_stderr(float(errors), float(errors), samples)
