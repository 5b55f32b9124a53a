"""Command-line interface: rates, sweep, crossover, hist, verify.

Exit codes: 0 success, 2 usage/config, 3 enumeration capacity,
4 degenerate gains, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments, simulate, verification
from .errors import (CapacityError, ConfigError, DegenerateGainsError,
                     NumericalFailureError)
from .geometry import Scenario, load_scenario
from .modes import TransmissionMode

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_DEGENERACY = 4
EXIT_NUMERICAL = 5


def _common_flags(parser: argparse.ArgumentParser, *, config_required: bool = True,
                  drops: bool = False, channels: bool = False) -> None:
    parser.add_argument("--config", required=config_required,
                        help="scenario config file (bundled names like "
                             "fig2.cfg are resolved automatically)")
    parser.add_argument("--seed", type=int, default=1, help="master RNG seed")
    parser.add_argument("--snr", default="0:5:50",
                        help="SNR grid in dB as start:step:stop")
    parser.add_argument("--out", help="output CSV path (default: stdout)")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes for simulation-heavy steps")
    if drops:
        parser.add_argument("--drops", type=int, default=simulate.DEFAULT_N_DROPS,
                            help="number of uniform user drops")
    if channels:
        parser.add_argument("--channels", type=int,
                            default=simulate.DEFAULT_N_CHANNELS,
                            help="fading realizations per Monte Carlo estimate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dasrate",
        description="Ergodic sum-rate analysis and simulation for "
                    "distributed antenna downlinks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="per-mode rate curves on a fixed geometry")
    _common_flags(p, channels=True)
    p.add_argument("--modes", default="",
                   help="comma-separated mode labels like '[1 2],[2 1]' "
                        "(default: every admissible mode)")
    p.add_argument("--no-mc", action="store_true",
                   help="emit analytic columns only (byte-stable output)")

    p = sub.add_parser("sweep", help="cell-averaged curves over uniform drops")
    _common_flags(p, drops=True, channels=True)
    p.add_argument("--scheme", action="append", default=None,
                   choices=["ideal", "min-distance"],
                   help="selection scheme to sweep (repeatable)")
    p.add_argument("--fixed-mode", action="append", default=None,
                   help="fixed mode label like '[1 2]' to sweep (repeatable)")
    p.add_argument("--rating", choices=["analytic", "mc"], default="analytic",
                   help="record closed-form rates (fast) or Monte Carlo "
                        "estimates (validation)")
    p.add_argument("--force-ideal", action="store_true",
                   help="allow exhaustive sweeps past the candidate-count guard")

    p = sub.add_parser("crossover",
                       help="single-user vs two-user crossover report (2x2)")
    _common_flags(p)
    p.add_argument("--reference-db", type=float, default=None,
                   help="external reference value to compare against, in dB")

    p = sub.add_parser("hist", help="selected-mode histogram by (K_A, N_A) group")
    _common_flags(p, drops=True)
    p.add_argument("--snr-ranges", default="0:10,10:20,20:30,30:40",
                   help="comma-separated lo:hi dB ranges")

    p = sub.add_parser("verify", help="run the self-check suites")
    p.add_argument("--level", choices=["quick", "full"], default="quick")
    return parser


def _resolve_config(name: str) -> Scenario:
    path = Path(name)
    if not path.exists():
        path = experiments.bundled_config_path(name)
    return load_scenario(path)


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_rates(args) -> int:
    scenario = _resolve_config(args.config)
    grid = experiments.parse_snr_spec(args.snr)
    labels = [tok for tok in args.modes.split(",") if tok.strip()] or None
    modes = experiments.resolve_mode_filter(labels, scenario.n_ports,
                                            scenario.n_users)
    curve = experiments.mode_rate_curves(scenario, modes, grid,
                                         n_channels=args.channels,
                                         seed=args.seed,
                                         include_mc=not args.no_mc)
    _emit(experiments.curve_to_csv(curve), args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    scenario = _resolve_config(args.config)
    grid = experiments.parse_snr_spec(args.snr)
    schemes: list = list(args.scheme or [])
    for label in args.fixed_mode or []:
        schemes.append(TransmissionMode.from_label(label))
    if not schemes:
        schemes = ["ideal", "min-distance"]
    curve = experiments.sweep_curves(scenario, schemes, grid,
                                     n_drops=args.drops, n_channels=args.channels,
                                     seed=args.seed, rating=args.rating,
                                     n_jobs=args.jobs,
                                     force_ideal=args.force_ideal)
    _emit(experiments.curve_to_csv(curve), args.out)
    return EXIT_OK


def _cmd_crossover(args) -> int:
    scenario = _resolve_config(args.config)
    report = experiments.crossover_report(scenario,
                                          reference_db=args.reference_db)
    _emit("\n".join(report.lines()) + "\n", args.out)
    return EXIT_OK


def _parse_ranges(spec: str) -> list[tuple[float, float]]:
    ranges = []
    for chunk in spec.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 2:
            raise ConfigError(f"SNR range must be lo:hi, got {chunk!r}")
        try:
            ranges.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ConfigError(f"non-numeric SNR range {chunk!r}") from exc
    if not ranges:
        raise ConfigError("no SNR ranges given")
    return ranges


def _cmd_hist(args) -> int:
    scenario = _resolve_config(args.config)
    fractions = simulate.mode_histogram(scenario, _parse_ranges(args.snr_ranges),
                                        n_drops=args.drops, seed=args.seed,
                                        n_jobs=args.jobs)
    _emit(experiments.histogram_to_csv(fractions), args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    results = verification.run_checks(args.level)
    for result in results:
        print(result.line())
    failed = sum(1 for r in results if not r.passed)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"rates": _cmd_rates, "sweep": _cmd_sweep,
                "crossover": _cmd_crossover, "hist": _cmd_hist,
                "verify": _cmd_verify}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except DegenerateGainsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERACY
    except NumericalFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
