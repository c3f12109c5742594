"""Domain types for a majority-vote data-feed system.

Class labels are 1-based integers in [1, K]. The confusion matrix is
row-stochastic with rows indexed by the true class: ``entries[k-1, l-1]``
is the probability that an oracle reports class l when the truth is k.
Stakes are positive integers in units of the minimum stake (normalized
to 1), so oracle counts and stake splits live on an integer lattice.

Types are plain containers: construction checks shapes and types, while
numeric invariants (row sums, prior normalization, stake bounds) are
checked by :func:`validate_config`, which reports every violation instead
of stopping at the first. Operations that need a sound config call
:func:`require_valid`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

PRIOR_TOL = 1e-9
ROW_SUM_TOL = 1e-6

#: 1-based class index in [1, K].
ClassLabel = int


class ConfigFormatError(ValueError):
    """A config document is structurally unreadable (bad JSON, shapes, types)."""


class InvalidConfigError(ValueError):
    """A structurally sound config violates domain invariants."""

    def __init__(self, report: "ValidationReport"):
        super().__init__("; ".join(report.violations))
        self.report = report


def _as_float_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ConfigFormatError(f"{name} must be a flat sequence of numbers")
    return arr


@dataclass(frozen=True)
class ClassPrior:
    """Prior distribution of the true class; defaults to uniform."""

    probabilities: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "probabilities", _as_float_vector(self.probabilities, "prior")
        )

    @classmethod
    def uniform(cls, num_classes: int) -> "ClassPrior":
        return cls(np.full(num_classes, 1.0 / num_classes))

    @property
    def num_classes(self) -> int:
        return self.probabilities.size

    def violations(self) -> list[str]:
        out = []
        if np.any(self.probabilities < 0) or not np.all(np.isfinite(self.probabilities)):
            out.append("prior has negative or non-finite entries")
        total = float(self.probabilities.sum())
        if abs(total - 1.0) > PRIOR_TOL:
            out.append(f"prior sums to {total!r} (expected 1 within {PRIOR_TOL:g})")
        return out


@dataclass(frozen=True)
class ConfusionMatrix:
    """Shared K x K report distribution: rows truth, columns reported class."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ConfigFormatError("confusion matrix must be square and non-empty")
        object.__setattr__(self, "entries", arr)

    @classmethod
    def identity(cls, num_classes: int) -> "ConfusionMatrix":
        return cls(np.eye(num_classes))

    @property
    def num_classes(self) -> int:
        return self.entries.shape[0]

    def row(self, truth: ClassLabel) -> np.ndarray:
        """Report distribution given true class `truth` (1-based)."""
        if not 1 <= truth <= self.num_classes:
            raise ValueError(f"truth index {truth} out of range [1, {self.num_classes}]")
        return self.entries[truth - 1]

    def is_weakly_accurate(self) -> bool:
        """True iff each diagonal entry strictly exceeds every other entry in its row."""
        e = self.entries
        diag = np.diag(e).copy()
        off = e.copy()
        np.fill_diagonal(off, -np.inf)
        return bool(np.all(diag > off.max(axis=1)))

    def renormalized(self) -> "ConfusionMatrix":
        """Rows rescaled to unit sum. Explicit opt-in; loading never renormalizes silently."""
        sums = self.entries.sum(axis=1, keepdims=True)
        if np.any(sums <= 0):
            raise ValueError("cannot renormalize a row with non-positive sum")
        return ConfusionMatrix(self.entries / sums)

    def violations(self) -> list[str]:
        out = []
        e = self.entries
        if np.any(e < 0) or np.any(e > 1) or not np.all(np.isfinite(e)):
            out.append("confusion matrix has entries outside [0, 1]")
        for k, total in enumerate(e.sum(axis=1), start=1):
            if abs(total - 1.0) > ROW_SUM_TOL:
                out.append(f"row {k} sums to {total:g} (expected 1 within {ROW_SUM_TOL:g})")
        return out


@dataclass(frozen=True)
class UserProfile:
    """A participant identified by a 1-based id with integer staking power."""

    user_id: int
    total_stake: int

    def violations(self) -> list[str]:
        out = []
        if not isinstance(self.user_id, int) or isinstance(self.user_id, bool):
            out.append(f"user id {self.user_id!r} is not an integer")
        stake = self.total_stake
        if not isinstance(stake, int) or isinstance(stake, bool):
            out.append(f"user {self.user_id}: stake {stake!r} is not an integer")
        elif stake < 1:
            out.append(f"user {self.user_id}: stake {stake} is below the minimum stake 1")
        return out


@dataclass(frozen=True)
class Strategy:
    """How a user splits its stake across mirrored oracles.

    `allocation[i]` is the stake on oracle i; every oracle submits the same
    report. The canonical form concentrates everything above the per-oracle
    minimum on the first oracle: (s - c + 1, 1, ..., 1).
    """

    allocation: tuple[int, ...]

    def __post_init__(self):
        alloc = tuple(int(a) for a in self.allocation)
        if not alloc:
            raise ValueError("a strategy needs at least one oracle")
        if any(a < 1 for a in alloc):
            raise ValueError("every oracle must stake at least the minimum stake 1")
        object.__setattr__(self, "allocation", alloc)

    @classmethod
    def single(cls, total_stake: int) -> "Strategy":
        return cls((total_stake,))

    @classmethod
    def concentrated(cls, total_stake: int, oracle_count: int) -> "Strategy":
        if not 1 <= oracle_count <= total_stake:
            raise ValueError(
                f"oracle count {oracle_count} infeasible for stake {total_stake}"
            )
        return cls((total_stake - oracle_count + 1,) + (1,) * (oracle_count - 1))

    @property
    def oracle_count(self) -> int:
        return len(self.allocation)

    @property
    def total_staked(self) -> int:
        return sum(self.allocation)

    def canonical(self) -> "Strategy":
        """Concentrated strategy with the same oracle count and total stake."""
        return Strategy.concentrated(self.total_staked, self.oracle_count)

    def violations_for_stake(self, total_stake: int) -> list[str]:
        out = []
        if self.total_staked > total_stake:
            out.append(
                f"allocation {self.allocation} stakes {self.total_staked} "
                f"but the user only holds {total_stake}"
            )
        if self.oracle_count > total_stake:
            out.append(
                f"{self.oracle_count} oracles infeasible with stake {total_stake}"
            )
        return out


@dataclass(frozen=True)
class SystemConfig:
    """Full description of one data-feed network."""

    num_classes: int
    confusion: ConfusionMatrix
    users: tuple[UserProfile, ...]
    prior: ClassPrior = None  # defaults to uniform over num_classes
    total_reward: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if self.prior is None:
            object.__setattr__(self, "prior", ClassPrior.uniform(self.num_classes))

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def stakes(self) -> tuple[int, ...]:
        return tuple(u.total_stake for u in self.users)

    def user(self, user_id: int) -> UserProfile:
        for u in self.users:
            if u.user_id == user_id:
                return u
        raise ValueError(f"no user with id {user_id}")

    def default_strategies(self) -> dict[int, Strategy]:
        """Everyone runs a single oracle carrying their full stake."""
        return {u.user_id: Strategy.single(u.total_stake) for u in self.users}


@dataclass(frozen=True)
class ValidationReport:
    """All invariant violations found, plus the weak-accuracy predicate."""

    violations: tuple[str, ...]
    weakly_accurate: bool

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        lines = [f"violation: {v}" for v in self.violations]
        lines.append(f"valid: {'yes' if self.is_valid else 'no'}")
        lines.append(f"weakly accurate: {'yes' if self.weakly_accurate else 'no'}")
        return "\n".join(lines)


def validate_config(config: SystemConfig) -> ValidationReport:
    """Check every domain invariant and report all violations found."""
    out: list[str] = []
    k = config.num_classes
    if not isinstance(k, int) or k < 1:
        out.append(f"num_classes {k!r} must be a positive integer")
    if config.confusion.num_classes != k:
        out.append(
            f"confusion matrix is {config.confusion.num_classes}x"
            f"{config.confusion.num_classes} but num_classes is {k}"
        )
    if config.prior.num_classes != k:
        out.append(f"prior has {config.prior.num_classes} entries, expected {k}")
    out.extend(config.confusion.violations())
    out.extend(config.prior.violations())
    if not config.users:
        out.append("config has no users")
    for u in config.users:
        out.extend(u.violations())
    ids = [u.user_id for u in config.users]
    if len(set(ids)) != len(ids):
        out.append(f"user ids are not unique: {sorted(ids)}")
    elif config.users and sorted(ids) != list(range(1, len(ids) + 1)):
        out.append(f"user ids must be contiguous 1..{len(ids)}, got {sorted(ids)}")
    reward = config.total_reward
    if not (isinstance(reward, (int, float)) and math.isfinite(reward) and reward > 0):
        out.append(f"total reward {reward!r} must be a positive finite number")
    return ValidationReport(tuple(out), config.confusion.is_weakly_accurate())


def require_valid(config: SystemConfig) -> None:
    report = validate_config(config)
    if not report.is_valid:
        raise InvalidConfigError(report)


def sample_report(
    confusion: ConfusionMatrix,
    truth: ClassLabel,
    rng: np.random.Generator,
    size: int | None = None,
):
    """Draw oracle reports for a given true class.

    Returns a single 1-based label, or an array of them when `size` is given.
    Deterministic for a given generator state.
    """
    row = confusion.row(truth)
    cum = np.cumsum(row)
    if size is None:
        draw = np.minimum(np.searchsorted(cum, rng.random(), side="right"),
                          confusion.num_classes - 1)
        return int(draw) + 1
    draws = np.searchsorted(cum, rng.random(size), side="right")
    return np.minimum(draws, confusion.num_classes - 1) + 1


# ---------------------------------------------------------------------------
# Config document I/O (JSON)
# ---------------------------------------------------------------------------

def read_config_document(path) -> dict:
    """Parse a JSON config document, raising ConfigFormatError on unreadable input."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigFormatError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigFormatError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigFormatError("config document must be a JSON object")
    return doc


def config_from_dict(doc: Mapping, renormalize: bool = False) -> SystemConfig:
    """Build a SystemConfig from a parsed document.

    Structural problems raise ConfigFormatError; numeric invariant violations
    are left for validate_config so they can all be reported together.
    """
    try:
        num_classes = doc["num_classes"]
        confusion_rows = doc["confusion"]
        users_doc = doc["users"]
    except KeyError as exc:
        raise ConfigFormatError(f"config is missing required key {exc}") from exc
    if not isinstance(num_classes, int) or isinstance(num_classes, bool):
        raise ConfigFormatError("num_classes must be an integer")
    try:
        confusion = ConfusionMatrix(confusion_rows)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigFormatError):
            raise
        raise ConfigFormatError(f"confusion matrix is malformed: {exc}") from exc
    if renormalize:
        confusion = confusion.renormalized()
    if not isinstance(users_doc, list):
        raise ConfigFormatError("users must be a list of {id, stake} objects")
    users = []
    for entry in users_doc:
        if not isinstance(entry, dict) or "id" not in entry or "stake" not in entry:
            raise ConfigFormatError(f"user entry {entry!r} needs 'id' and 'stake'")
        users.append(UserProfile(user_id=entry["id"], total_stake=entry["stake"]))
    prior = None
    if doc.get("prior") is not None:
        prior = ClassPrior(_as_float_vector(doc["prior"], "prior"))
    total_reward = doc.get("total_reward", 1.0)
    if not isinstance(total_reward, (int, float)) or isinstance(total_reward, bool):
        raise ConfigFormatError("total_reward must be a number")
    return SystemConfig(
        num_classes=num_classes,
        confusion=confusion,
        users=tuple(users),
        prior=prior,
        total_reward=float(total_reward),
    )


def load_config(path, renormalize: bool = False) -> SystemConfig:
    return config_from_dict(read_config_document(path), renormalize=renormalize)


def config_to_dict(config: SystemConfig) -> dict:
    return {
        "num_classes": config.num_classes,
        "prior": config.prior.probabilities.tolist(),
        "confusion": config.confusion.entries.tolist(),
        "users": [{"id": u.user_id, "stake": u.total_stake} for u in config.users],
        "total_reward": config.total_reward,
    }
