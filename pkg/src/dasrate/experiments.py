"""Experiment drivers behind the CLI: rate curves, sweeps, crossover
reports, histograms, and their CSV forms.

CSV output is RFC-4180 style with '.' decimals and a fixed column order,
so analytic-only outputs are byte-identical across runs and machines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import simulate
from .errors import ConfigError
from .geometry import PathlossMatrix, Scenario, pathloss_matrix
from .modes import TransmissionMode, enumerate_ideal
from .rate import (CrossoverFormulas, approx_sum_rate, crossover_snr,
                   ergodic_sum_rate, rate_curve_intersection_db)
from .simulate import RateCurve, RateSeries, cell_average, mc_ergodic_sum_rate


def _fmt(value: float) -> str:
    return format(value, ".12g")


def parse_snr_spec(spec: str) -> tuple[float, ...]:
    """SNR grid from a ``start:step:stop`` dB spec (stop inclusive)."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"SNR spec must be start:step:stop in dB, got {spec!r}")
    try:
        start, step, stop = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"non-numeric SNR spec {spec!r}") from exc
    if step <= 0 or stop < start:
        raise ConfigError(f"SNR spec needs step > 0 and stop >= start, got {spec!r}")
    n_steps = int(math.floor((stop - start) / step + 1e-9))
    return tuple(start + i * step for i in range(n_steps + 1))


def bundled_config_path(name: str) -> Path:
    """Filesystem path of a packaged example config (e.g. ``fig2.cfg``)."""
    ref = resources.files("dasrate").joinpath("configs", name)
    with resources.as_file(ref) as path:
        if not path.exists():
            raise ConfigError(f"no bundled config named {name!r}")
        return path


def curve_to_csv(curve: RateCurve) -> str:
    """Flatten a rate curve: one row per SNR point, one column block per series."""
    header = ["snr_db"]
    columns = []
    for s in curve.series:
        header.append(f"{s.label}_{s.kind}")
        columns.append(s.values)
        if s.kind == "mc" and s.std_errors is not None:
            header.append(f"{s.label}_mc_stderr")
            columns.append(s.std_errors)
    lines = [",".join(header)]
    for i, db in enumerate(curve.snr_grid_db):
        row = [_fmt(db)] + [_fmt(col[i]) for col in columns]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def histogram_to_csv(fractions: dict[tuple[float, float], dict[str, float]]) -> str:
    lines = ["range_lo_db,range_hi_db,group_label,fraction"]
    for (lo, hi), groups in fractions.items():
        for label, fraction in groups.items():
            lines.append(",".join([_fmt(lo), _fmt(hi), label, _fmt(fraction)]))
    return "\n".join(lines) + "\n"


# --- fixed-geometry rate curves ---------------------------------------------

def resolve_mode_filter(labels: list[str] | None, n_ports: int,
                        n_users: int) -> tuple[TransmissionMode, ...]:
    """Modes for a rates run; an empty filter means the full ideal set."""
    candidates = enumerate_ideal(n_ports, n_users)
    if not labels:
        return candidates.modes
    valid = {m.label: m for m in candidates.modes}
    chosen = []
    for text in labels:
        try:
            mode = TransmissionMode.from_label(text)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if mode.label not in valid:
            raise ConfigError(f"unknown mode label {text!r}; valid labels: "
                              + ", ".join(valid))
        chosen.append(valid[mode.label])
    return tuple(chosen)


def mode_rate_curves(scenario: Scenario, modes, snr_grid_db,
                     n_channels: int = simulate.DEFAULT_N_CHANNELS,
                     seed: int = 1, include_mc: bool = True) -> RateCurve:
    """Per-mode analytic curves over a fixed geometry, with optional
    Monte Carlo companions (independent draws per mode and SNR point)."""
    if scenario.user_positions is None:
        raise ConfigError("rates experiment needs fixed user positions in the config")
    pl = pathloss_matrix(scenario)
    grid = tuple(float(db) for db in snr_grid_db)
    series: list[RateSeries] = []
    for m_idx, mode in enumerate(modes):
        analytic = []
        mc_means = []
        mc_errs = []
        for p_idx, db in enumerate(grid):
            point = scenario.with_snr_db(db)
            analytic.append(ergodic_sum_rate(point, pl, mode).sum_rate)
            if include_mc:
                est = mc_ergodic_sum_rate(point, pl, mode, n_channels,
                                          seed=(seed, m_idx, p_idx))
                mc_means.append(est.mean)
                mc_errs.append(est.std_error)
        series.append(RateSeries(label=mode.label, kind="analytic",
                                 values=tuple(analytic)))
        if include_mc:
            series.append(RateSeries(label=mode.label, kind="mc",
                                     values=tuple(mc_means),
                                     std_errors=tuple(mc_errs)))
    return RateCurve(snr_grid_db=grid, series=tuple(series))


# --- cell-averaged sweeps -----------------------------------------------------

# Exhaustive sweeps beyond this candidate count must be forced explicitly.
SWEEP_IDEAL_LIMIT = 1000


def sweep_curves(template: Scenario, schemes, snr_grid_db, n_drops: int,
                 n_channels: int, seed: int, rating: str = "analytic",
                 n_jobs: int = 1, force_ideal: bool = False) -> RateCurve:
    """Cell-averaged curves for a list of schemes and/or fixed modes."""
    from .modes import ideal_count

    curve: RateCurve | None = None
    for scheme in schemes:
        if scheme == "ideal" and not force_ideal:
            count = ideal_count(template.n_ports, template.n_users)
            if count > SWEEP_IDEAL_LIMIT:
                raise ConfigError(
                    f"exhaustive sweep would evaluate {count} candidates per "
                    f"drop and SNR point; pass force_ideal/--force-ideal to "
                    f"run it anyway")
        one = cell_average(template, scheme, snr_grid_db, n_drops,
                           n_channels, seed, rating=rating, n_jobs=n_jobs)
        curve = one if curve is None else curve.merged_with(one)
    if curve is None:
        raise ConfigError("no schemes requested")
    return curve


# --- crossover report ---------------------------------------------------------

@dataclass(frozen=True)
class CrossoverReport:
    formulas: CrossoverFormulas
    formulas_swapped_users: CrossoverFormulas
    approx_intersection_db: float | None
    exact_intersection_db: float | None
    reference_db: float | None = None

    def lines(self) -> list[str]:
        out = ["crossover analysis for modes [1 1] vs [1 2] (2 ports, 2 users)"]
        out.append(f"  formula, users as given:  "
                   f"{self.formulas.single_vs_12_db:.3f} dB  "
                   f"(companion [1 1] vs [2 1]: {self.formulas.single_vs_21_db:.3f} dB)")
        out.append(f"  formula, users swapped:   "
                   f"{self.formulas_swapped_users.single_vs_12_db:.3f} dB  "
                   f"(companion: {self.formulas_swapped_users.single_vs_21_db:.3f} dB)")
        if self.approx_intersection_db is None:
            out.append("  approximated curves:      no crossover in range")
        else:
            out.append(f"  approximated curves:      "
                       f"{self.approx_intersection_db:.3f} dB (bisection)")
        if self.exact_intersection_db is None:
            out.append("  exact curves:             no crossover in range")
        else:
            out.append(f"  exact curves:             "
                       f"{self.exact_intersection_db:.3f} dB (bisection)")
        if (self.approx_intersection_db is not None
                and self.exact_intersection_db is not None):
            gap = abs(self.approx_intersection_db - self.exact_intersection_db)
            out.append(f"  approx-vs-exact gap:      {gap:.3f} dB")
        if self.reference_db is not None:
            delta = self.formulas.single_vs_12_db - self.reference_db
            out.append(f"  reference comparison:     {self.reference_db:.3f} dB "
                       f"(formula deviates by {delta:+.3f} dB)")
        return out


def crossover_report(scenario: Scenario,
                     reference_db: float | None = None,
                     lo_db: float = -20.0, hi_db: float = 80.0) -> CrossoverReport:
    """Self-auditing crossover comparison for a 2x2 fixed geometry.

    Reports the closed-form value under both user labelings plus the
    numerically bisected intersections of the approximated and exact
    [1 1]-vs-[1 2] rate curves.
    """
    if scenario.n_ports != 2 or scenario.n_users != 2:
        raise ConfigError("crossover analysis is defined for 2 ports and 2 users")
    if scenario.user_positions is None:
        raise ConfigError("crossover analysis needs fixed user positions")
    pl = pathloss_matrix(scenario)
    swapped = PathlossMatrix(distances=pl.distances[::-1].copy(),
                             gains=pl.gains[::-1].copy())
    single = TransmissionMode((1, 1))
    paired = TransmissionMode((1, 2))

    def approx_rate(mode):
        return lambda snr: approx_sum_rate(
            scenario.with_tx_power(snr * scenario.noise_power), pl, mode)

    def exact_rate(mode):
        return lambda snr: ergodic_sum_rate(
            scenario.with_tx_power(snr * scenario.noise_power), pl, mode).sum_rate

    approx_db = rate_curve_intersection_db(approx_rate(single), approx_rate(paired),
                                           lo_db=lo_db, hi_db=hi_db)
    exact_db = rate_curve_intersection_db(exact_rate(single), exact_rate(paired),
                                          lo_db=lo_db, hi_db=hi_db)
    return CrossoverReport(formulas=crossover_snr(pl),
                           formulas_swapped_users=crossover_snr(swapped),
                           approx_intersection_db=approx_db,
                           exact_intersection_db=exact_db,
                           reference_db=reference_db)
