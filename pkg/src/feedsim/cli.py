"""Command-line surface: validate, payoff, solve-d, sweep, estimate-cm.

Every command is non-interactive and reproducible: seeds default to a fixed
constant (never the clock), thread counts change wall time but never results,
and each output file gets a sidecar manifest recording how it was produced.
Exit codes: 0 success, 1 domain failure (invalid config, infeasible request,
exhausted search), 2 unreadable or ill-formed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .constants import DEFAULT_MC_SAMPLES, DEFAULT_SEED
from .enumeration import EnumerationBudgetError
from .ingest import IngestError, IngestSettings, estimate_confusion, read_annotation_csv
from .metrics import experiment_from_dict, run_experiment, write_sweep_csv
from .model import (
    ConfigFormatError,
    InvalidConfigError,
    config_from_dict,
    read_config_document,
    require_valid,
    validate_config,
)
from .payoff import EXACT, MONTE_CARLO, PayoffQuery, expected_payoff_exact, \
    expected_payoff_mc, optimal_allocation
from .solver import DMaxExceededError, SolverSettings, find_d_opt, \
    find_d_opt_from_oracle_stakes

_METHODS = {"exact": EXACT, "mc": MONTE_CARLO, "monte_carlo": MONTE_CARLO}


@dataclass(frozen=True)
class RunManifest:
    """Provenance written next to every output file."""

    command: str
    config_path: str
    seed: int
    tool_version: str
    timestamp: str

    @classmethod
    def capture(cls, command: str, config_path, seed: int) -> "RunManifest":
        return cls(
            command=command,
            config_path=str(config_path),
            seed=int(seed),
            tool_version=__version__,
            timestamp=datetime.now(timezone.utc).isoformat(),
        )

    def write_beside(self, output_path) -> None:
        sidecar = Path(str(output_path) + ".manifest.json")
        sidecar.write_text(json.dumps(self.__dict__, indent=2) + "\n")


def _load(config_path, renormalize: bool = False):
    return config_from_dict(read_config_document(config_path), renormalize=renormalize)


def _parse_c_range(text: str) -> list[int]:
    """Accept 'lo:hi' (inclusive) or a comma list like '1,2,5'."""
    text = text.strip()
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(",") if part.strip()]


def _parse_d_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def cmd_validate(args) -> int:
    config = _load(args.config, renormalize=args.renormalize)
    report = validate_config(config)
    print(report)
    return 0 if report.is_valid else 1


def cmd_payoff(args) -> int:
    config = _load(args.config)
    require_valid(config)
    stake = config.user(args.user).total_stake
    query = PayoffQuery(
        config=config,
        focal_user=args.user,
        focal_strategy=optimal_allocation(stake, args.c),
        d=args.d,
    )
    if _METHODS[args.method] == EXACT:
        estimate = expected_payoff_exact(query, threads=args.threads)
    else:
        estimate = expected_payoff_mc(query, samples=args.samples, seed=args.seed)
    print(
        f"expected_payoff={estimate.value:.12g} method={estimate.method} "
        f"std_error={estimate.std_error:.12g} samples={estimate.samples}"
    )
    return 0


def cmd_solve_d(args) -> int:
    config = _load(args.config)
    require_valid(config)
    settings = SolverSettings(epsilon=args.epsilon, d_max=args.d_max)
    if args.from_oracle_stakes:
        # observed per-oracle stakes: with default single-oracle participation
        # the config's stake list is exactly that vector
        d_opt, certificate = find_d_opt_from_oracle_stakes(
            [u.total_stake for u in config.users],
            config.confusion,
            config.num_classes,
            settings,
            prior=config.prior,
            total_reward=config.total_reward,
            threads=args.threads,
        )
    else:
        d_opt, certificate = find_d_opt(config, settings, threads=args.threads)
    print(f"d_opt={d_opt:.12g} checks={len(certificate.checks)} "
          f"satisfied={'yes' if certificate.satisfied else 'no'}")
    if args.out:
        Path(args.out).write_text(json.dumps(certificate.to_dict(), indent=2) + "\n")
        RunManifest.capture("solve-d", args.config, DEFAULT_SEED).write_beside(args.out)
    return 0


def cmd_sweep(args) -> int:
    doc = read_config_document(args.config)
    config = config_from_dict(doc)
    require_valid(config)
    spec = experiment_from_dict(
        config,
        doc.get("experiment"),
        focal_user=args.user,
        c_values=_parse_c_range(args.c_range) if args.c_range else None,
        d_values=_parse_d_list(args.d_list) if args.d_list else None,
        method=_METHODS[args.method] if args.method else None,
        samples=args.samples,
        seed=args.seed,
    )
    rows = run_experiment(spec, threads=args.threads)
    write_sweep_csv(rows, args.out)
    RunManifest.capture("sweep", args.config, spec.seed).write_beside(args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_estimate_cm(args) -> int:
    label_map = None
    if args.label_map:
        label_map = {
            str(k): int(v) for k, v in json.loads(args.label_map).items()
        }
    settings = IngestSettings(
        min_participation=args.min_participation,
        smoothing=args.smoothing,
        label_map=label_map,
    )
    records = read_annotation_csv(args.records, settings, args.k)
    matrix, report = estimate_confusion(records, settings, args.k)
    fragment = {"num_classes": args.k, "confusion": matrix.entries.tolist()}
    if args.out:
        Path(args.out).write_text(json.dumps(fragment, indent=2) + "\n")
        RunManifest.capture("estimate-cm", args.records, DEFAULT_SEED).write_beside(
            args.out
        )
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feedsim",
        description="Mirroring-attack analysis for majority-vote data feeds",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a config file's invariants")
    p.add_argument("config")
    p.add_argument("--renormalize", action="store_true",
                   help="rescale confusion rows to unit sum before checking")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("payoff", help="expected payoff of one user's strategy")
    p.add_argument("config")
    p.add_argument("--user", type=int, required=True)
    p.add_argument("--c", type=int, default=1, help="oracle count (concentrated split)")
    p.add_argument("--d", type=float, default=1.0, help="reward exponent")
    p.add_argument("--method", choices=sorted(_METHODS), default="exact")
    p.add_argument("--samples", type=int, default=DEFAULT_MC_SAMPLES)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_payoff)

    p = sub.add_parser("solve-d", help="find the smallest mirroring-proof exponent")
    p.add_argument("config")
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--d-max", type=float, default=16.0)
    p.add_argument("--from-oracle-stakes", action="store_true",
                   help="treat the config's stakes as observed per-oracle stakes")
    p.add_argument("--out", default=None, help="write the certificate JSON here")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_solve_d)

    p = sub.add_parser("sweep", help="payoff and error-rate table over (c, d)")
    p.add_argument("config")
    p.add_argument("--user", type=int, default=None)
    p.add_argument("--c-range", default=None, help="'lo:hi' or comma list")
    p.add_argument("--d-list", default=None, help="comma list of exponents")
    p.add_argument("--method", choices=sorted(_METHODS), default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("estimate-cm", help="estimate a confusion matrix from annotations")
    p.add_argument("records", help="CSV with task_id,annotator_id,label,gold_label")
    p.add_argument("--k", type=int, required=True, help="number of classes")
    p.add_argument("--min-participation", type=float, default=0.1)
    p.add_argument("--smoothing", type=float, default=0.0)
    p.add_argument("--label-map", default=None,
                   help="JSON object mapping raw labels to class indices")
    p.add_argument("--out", default=None, help="write the config fragment here")
    p.set_defaults(func=cmd_estimate_cm)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigFormatError, FileNotFoundError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InvalidConfigError, DMaxExceededError, EnumerationBudgetError,
            IngestError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
