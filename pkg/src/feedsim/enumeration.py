"""Exact-expectation engine over the joint report space of rival users.

Expected payoffs and error rates are sums over K truth classes, K focal
reports, and the K^(N-1) joint reports of the other users: the reward
denominator depends on exactly which rivals matched the decided output, so
the rival space is enumerated per identity rather than collapsed by counts.
The enumeration is processed in fixed-size chunks; per-chunk arrays (report
digits, vote counts, rival maxima, joint probabilities) are cached and shared
across focal oracle counts and exponents. Chunks may be evaluated by a thread
pool, but partial sums are always reduced in chunk order, so results are
bit-identical for any thread count.
"""

from __future__ import annotations

import os
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_BUDGET = 10**9
DEFAULT_CHUNK = 1 << 19
_CACHE_BYTE_LIMIT = 512 * 1024 * 1024
_ENGINE_CACHE_SIZE = 4


class EnumerationBudgetError(RuntimeError):
    """Exact enumeration would exceed the term budget; use the Monte Carlo path."""


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        return max(os.cpu_count() or 1, 1)
    return max(int(threads), 1)


@dataclass
class _ChunkArrays:
    digits: np.ndarray     # (n, t) uint8: report of each rival user, 0-based
    counts: np.ndarray     # (n, K) int32: votes cast by rivals per class
    rival_max: np.ndarray  # (K, n) int32: max rival count over classes != v
    inv_tie: np.ndarray    # (K, n) f8: 1 / (1 + #rival classes at rival_max)
    probs: np.ndarray      # (K, n) f8: joint probability of rival reports | truth


class ExactEnumerator:
    """Enumerates rival reports once and answers many expectation queries."""

    def __init__(
        self,
        confusion: np.ndarray,
        prior: np.ndarray,
        rival_multiplicities: Sequence[int],
        chunk_size: int = DEFAULT_CHUNK,
    ):
        self.confusion = np.ascontiguousarray(confusion, dtype=np.float64)
        self.prior = np.ascontiguousarray(prior, dtype=np.float64)
        self.num_classes = self.confusion.shape[0]
        self.mults = tuple(int(m) for m in rival_multiplicities)
        self.num_rivals = len(self.mults)
        self.n_vectors = self.num_classes**self.num_rivals
        self.chunk_size = int(chunk_size)
        self.n_chunks = max(1, -(-self.n_vectors // self.chunk_size))
        k, t = self.num_classes, self.num_rivals
        per_vector = t + 4 * k + 4 * k + 8 * k + 8 * k
        self._chunks: list[_ChunkArrays | None] | None = (
            [None] * self.n_chunks
            if self.n_vectors * per_vector <= _CACHE_BYTE_LIMIT
            else None
        )

    @property
    def term_count(self) -> int:
        """Enumeration terms including truth and focal-report dimensions."""
        return self.n_vectors * self.num_classes * self.num_classes

    def check_budget(self, budget: int = DEFAULT_BUDGET) -> None:
        if self.term_count > budget:
            raise EnumerationBudgetError(
                f"exact enumeration needs {self.term_count} terms, over the "
                f"budget of {budget}; use the Monte Carlo estimator instead"
            )

    # -- chunk construction -------------------------------------------------

    def _build_chunk(self, index: int) -> _ChunkArrays:
        k, t = self.num_classes, self.num_rivals
        lo = index * self.chunk_size
        hi = min(lo + self.chunk_size, self.n_vectors)
        n = hi - lo
        digits = np.empty((n, t), dtype=np.uint8)
        q = np.arange(lo, hi, dtype=np.int64)
        for j in range(t):
            digits[:, j] = q % k
            q //= k
        counts = np.zeros((n, k), dtype=np.int32)
        rows = np.arange(n)
        for j in range(t):
            counts[rows, digits[:, j]] += self.mults[j]
        rival_max = np.empty((k, n), dtype=np.int32)
        inv_tie = np.empty((k, n), dtype=np.float64)
        for v in range(k):
            rival_cols = np.delete(counts, v, axis=1)
            if rival_cols.shape[1]:
                top = rival_cols.max(axis=1)
                ties = (rival_cols == top[:, None]).sum(axis=1)
            else:
                top = np.full(n, -1, dtype=np.int32)
                ties = np.zeros(n, dtype=np.int64)
            rival_max[v] = top
            inv_tie[v] = 1.0 / (1.0 + ties)
        probs = np.empty((k, n), dtype=np.float64)
        for truth in range(k):
            joint = np.ones(n, dtype=np.float64)
            row = self.confusion[truth]
            for j in range(t):
                joint *= row[digits[:, j]]
            probs[truth] = joint
        return _ChunkArrays(digits, counts, rival_max, inv_tie, probs)

    def _chunk(self, index: int) -> _ChunkArrays:
        if self._chunks is None:
            return self._build_chunk(index)
        cached = self._chunks[index]
        if cached is None:
            cached = self._build_chunk(index)
            self._chunks[index] = cached
        return cached

    def _map_reduce(self, worker, threads: int | None) -> np.ndarray:
        pool_size = min(resolve_threads(threads), self.n_chunks)
        if pool_size <= 1:
            parts = [worker(self._chunk(i)) for i in range(self.n_chunks)]
        else:
            with ThreadPoolExecutor(max_workers=pool_size) as pool:
                parts = list(pool.map(lambda i: worker(self._chunk(i)),
                                      range(self.n_chunks)))
        total = parts[0]
        for part in parts[1:]:  # fixed reduction order: thread-count invariant
            total = total + part
        return total

    # -- queries ------------------------------------------------------------

    def payoffs(
        self,
        focal_counts: Sequence[int],
        focal_factors: Sequence[float],
        rival_factors: Sequence[float],
        total_reward: float = 1.0,
        threads: int | None = None,
    ) -> np.ndarray:
        """Expected focal payoff for each (oracle count, reward factor) pair.

        The focal user casts `focal_counts[i]` identical votes and, when its
        report is the decided output, earns `focal_factors[i]` against the
        rival factors of every rival that also matched.
        """
        cs = [int(c) for c in focal_counts]
        fs = [float(f) for f in focal_factors]
        if len(cs) != len(fs):
            raise ValueError("focal_counts and focal_factors must align")
        if any(c < 1 for c in cs):
            raise ValueError("focal oracle count must be >= 1")
        rf = np.asarray(rival_factors, dtype=np.float64)
        if rf.size != self.num_rivals:
            raise ValueError(f"expected {self.num_rivals} rival factors")
        k = self.num_classes
        truth_weight = self.prior[:, None] * self.confusion  # (K truth, K report)

        def worker(ch: _ChunkArrays) -> np.ndarray:
            out = np.zeros(len(cs))
            for v in range(k):
                matched = np.zeros(ch.digits.shape[0])
                for j in range(self.num_rivals):
                    matched += rf[j] * (ch.digits[:, j] == v)
                base = ch.counts[:, v]
                weights = truth_weight[:, v]
                for i, (c, f) in enumerate(zip(cs, fs)):
                    votes = base + c
                    win_mass = (votes > ch.rival_max[v]) + (
                        votes == ch.rival_max[v]
                    ) * ch.inv_tie[v]
                    payoff = win_mass * (f / (f + matched))
                    out[i] += float(weights @ (ch.probs @ payoff))
            return out

        return self._map_reduce(worker, threads) * float(total_reward)

    def error_rates(
        self,
        focal_counts: Sequence[int],
        threads: int | None = None,
    ) -> np.ndarray:
        """Probability the decided output differs from the truth, per focal count."""
        cs = [int(c) for c in focal_counts]
        if any(c < 1 for c in cs):
            raise ValueError("focal oracle count must be >= 1")
        k = self.num_classes
        truth_weight = self.prior[:, None] * self.confusion

        def worker(ch: _ChunkArrays) -> np.ndarray:
            out = np.zeros(len(cs))
            for v in range(k):
                base = ch.counts[:, v]
                for i, c in enumerate(cs):
                    votes = base + c
                    top = np.maximum(ch.rival_max[v], votes)
                    n_winners = (votes == top).astype(np.float64)
                    for other in range(k):
                        if other != v:
                            n_winners += ch.counts[:, other] == top
                    inv_winners = 1.0 / n_winners
                    for truth in range(k):
                        hit = votes == top if truth == v else ch.counts[:, truth] == top
                        correct_mass = hit * inv_winners
                        out[i] += truth_weight[truth, v] * float(
                            ch.probs[truth] @ (1.0 - correct_mass)
                        )
            return out

        return self._map_reduce(worker, threads)


_engines: "OrderedDict[tuple, ExactEnumerator]" = OrderedDict()


def get_enumerator(
    confusion: np.ndarray,
    prior: np.ndarray,
    rival_multiplicities: Sequence[int],
    chunk_size: int = DEFAULT_CHUNK,
) -> ExactEnumerator:
    """Engine factory with a small cache keyed by the full problem statics.

    Callers evaluating many (oracle count, exponent) points against the same
    network share one engine and therefore its enumerated chunks.
    """
    confusion = np.ascontiguousarray(confusion, dtype=np.float64)
    prior = np.ascontiguousarray(prior, dtype=np.float64)
    key = (
        confusion.shape[0],
        confusion.tobytes(),
        prior.tobytes(),
        tuple(int(m) for m in rival_multiplicities),
        int(chunk_size),
    )
    engine = _engines.get(key)
    if engine is None:
        engine = ExactEnumerator(confusion, prior, rival_multiplicities, chunk_size)
        _engines[key] = engine
        while len(_engines) > _ENGINE_CACHE_SIZE:
            _engines.popitem(last=False)
    else:
        _engines.move_to_end(key)
    return engine
