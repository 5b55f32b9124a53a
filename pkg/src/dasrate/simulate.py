"""Monte Carlo fading engine and cell-averaged experiments.

Fading power gains are drawn directly as unit-mean exponentials (the
squared magnitude of a unit-variance complex Gaussian). All randomness is
keyed by counter-based streams derived from (seed, drop, point, chunk),
and partial results are combined in fixed chunk order, so outputs are
bit-identical for a given seed regardless of worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .geometry import PathlossMatrix, Scenario, db_to_linear, drop_users_uniform, pathloss_matrix
from .modes import (CandidateSet, DegenerateGeometryWarning, TransmissionMode,
                    enumerate_ideal, enumerate_min_distance)
from .rate import ergodic_sum_rate
from .selection import select_mode

# Full-scale experiment defaults; CI-scale runs pass smaller counts.
DEFAULT_N_CHANNELS = 5000
DEFAULT_N_DROPS = 4000

# Trials per RNG stream; fixed so chunk boundaries never depend on n_jobs.
MC_CHUNK = 8192


@dataclass(frozen=True)
class ChannelRealization:
    """One small-scale fading draw: |h|^2 per (user, port), unit mean."""

    power_gains: np.ndarray  # shape (K, N)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_trials: int


@dataclass(frozen=True)
class RateSeries:
    label: str
    kind: str  # "analytic" or "mc"
    values: tuple[float, ...]
    std_errors: tuple[float, ...] | None = None


@dataclass(frozen=True)
class RateCurve:
    snr_grid_db: tuple[float, ...]
    series: tuple[RateSeries, ...]

    def __post_init__(self) -> None:
        names = [(s.label, s.kind) for s in self.series]
        if len(set(names)) != len(names):
            raise ValueError("duplicate (label, kind) pairs in rate curve")
        for s in self.series:
            if len(s.values) != len(self.snr_grid_db):
                raise ValueError(f"series {s.label!r} length does not match grid")

    def merged_with(self, other: "RateCurve") -> "RateCurve":
        if other.snr_grid_db != self.snr_grid_db:
            raise ValueError("cannot merge curves over different SNR grids")
        return RateCurve(self.snr_grid_db, self.series + other.series)


def _stream(entropy, spawn_key) -> np.random.Generator:
    """Counter-based generator for one (seed, index...) key."""
    seq = np.random.SeedSequence(entropy=entropy, spawn_key=tuple(spawn_key))
    return np.random.Generator(np.random.Philox(seq))


def draw_channel(n_users: int, n_ports: int, seed) -> ChannelRealization:
    rng = np.random.default_rng(seed)
    gains = rng.exponential(size=(n_users, n_ports))
    gains.setflags(write=False)
    return ChannelRealization(power_gains=gains)


def _mode_weight_matrices(pathloss: PathlossMatrix, mode: TransmissionMode,
                          tx_power: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-(user, port) received-power weights S*P split into signal and
    interference parts according to the mode's support sets."""
    n_users, n_ports = pathloss.gains.shape
    sig = np.zeros((n_users, n_ports))
    intf = np.zeros((n_users, n_ports))
    for user, ports in mode.support_sets.items():
        for j in ports:
            sig[user - 1, j] = pathloss.gains[user - 1, j] * tx_power
        for j in mode.complements[user]:
            intf[user - 1, j] = pathloss.gains[user - 1, j] * tx_power
    return sig, intf


def instantaneous_rates(scenario: Scenario, pathloss: PathlossMatrix,
                        mode: TransmissionMode,
                        channel: ChannelRealization) -> np.ndarray:
    """Per-user rates log2(1 + SINR) for one fading draw; idle users get 0."""
    sig_w, intf_w = _mode_weight_matrices(pathloss, mode, scenario.tx_power)
    h = channel.power_gains
    signal = (sig_w * h).sum(axis=1)
    denom = scenario.noise_power + (intf_w * h).sum(axis=1)
    return np.log2(1.0 + signal / denom)


def _batch_sum_rates(sig_w: np.ndarray, intf_w: np.ndarray, noise: float,
                     h: np.ndarray) -> np.ndarray:
    """Sum rates for a (T, K, N) block of fading draws."""
    signal = np.einsum("tkn,kn->tk", h, sig_w)
    denom = noise + np.einsum("tkn,kn->tk", h, intf_w)
    return np.log2(1.0 + signal / denom).sum(axis=1)


def _chunk_sizes(n_trials: int, chunk: int = MC_CHUNK) -> list[int]:
    full, rest = divmod(n_trials, chunk)
    return [chunk] * full + ([rest] if rest else [])


def _mc_chunk_worker(args) -> tuple[float, float]:
    sig_w, intf_w, noise, n_users, n_ports, entropy, spawn_key, size = args
    rng = _stream(entropy, spawn_key)
    h = rng.exponential(size=(size, n_users, n_ports))
    rates = _batch_sum_rates(sig_w, intf_w, noise, h)
    return float(rates.sum()), float(np.square(rates).sum())


def mc_ergodic_sum_rate(scenario: Scenario, pathloss: PathlossMatrix,
                        mode: TransmissionMode, n_channels: int, seed,
                        n_jobs: int = 1) -> McEstimate:
    """Monte Carlo estimate of the ergodic sum rate over fading.

    ``seed`` may be an int or a tuple of ints (callers namespace nested
    experiments by passing e.g. (seed, drop, point)).
    """
    if n_channels < 2:
        raise ValueError("n_channels must be >= 2")
    sig_w, intf_w = _mode_weight_matrices(pathloss, mode, scenario.tx_power)
    n_users, n_ports = pathloss.gains.shape
    tasks = [(sig_w, intf_w, scenario.noise_power, n_users, n_ports,
              seed, (c,), size)
             for c, size in enumerate(_chunk_sizes(n_channels))]
    if n_jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            partials = list(pool.map(_mc_chunk_worker, tasks))
    else:
        partials = [_mc_chunk_worker(t) for t in tasks]
    total = 0.0
    total_sq = 0.0
    for s1, s2 in partials:  # fixed chunk order keeps the reduction exact
        total += s1
        total_sq += s2
    mean = total / n_channels
    var = max(total_sq - n_channels * mean * mean, 0.0) / (n_channels - 1)
    return McEstimate(mean=mean, std_error=math.sqrt(var / n_channels),
                      n_trials=n_channels)


# --- cell-averaged experiments ----------------------------------------------

Scheme = str | TransmissionMode  # "ideal" | "min-distance" | fixed mode


def _candidates_for_drop(scheme: Scheme, pathloss: PathlossMatrix,
                         ideal: CandidateSet | None) -> CandidateSet | None:
    if isinstance(scheme, TransmissionMode):
        return None
    if scheme == "ideal":
        return ideal
    if scheme == "min-distance":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateGeometryWarning)
            return enumerate_min_distance(pathloss)
    raise ConfigError(f"unknown scheme {scheme!r}")


def _scheme_label(scheme: Scheme) -> str:
    return scheme.label if isinstance(scheme, TransmissionMode) else scheme


def _cell_drop_worker(args) -> tuple[np.ndarray, np.ndarray]:
    (template, scheme, ideal, grid_db, n_channels, seed, drop, rating) = args
    scenario = drop_users_uniform(
        template, np.random.SeedSequence(entropy=seed, spawn_key=(drop,)))
    pl = pathloss_matrix(scenario)
    candidates = _candidates_for_drop(scheme, pl, ideal)

    values = np.empty(len(grid_db))
    errors = np.zeros(len(grid_db))
    for idx, snr_db in enumerate(grid_db):
        snr = db_to_linear(snr_db)
        if candidates is None:
            chosen = scheme
            if rating == "analytic":
                point = scenario.with_tx_power(snr * scenario.noise_power)
                values[idx] = ergodic_sum_rate(point, pl, chosen).sum_rate
        else:
            result = select_mode(scenario, pl, candidates, snr)
            chosen = result.chosen_mode
            if rating == "analytic":
                values[idx] = result.chosen_rate
        if rating == "mc":
            point = scenario.with_tx_power(snr * scenario.noise_power)
            est = mc_ergodic_sum_rate(point, pl, chosen, n_channels,
                                      seed=(seed, drop, idx))
            values[idx] = est.mean
            errors[idx] = est.std_error
    return values, errors


def cell_average(scenario_template: Scenario, scheme: Scheme,
                 snr_grid_db, n_drops: int, n_channels: int, seed: int,
                 rating: str = "analytic", n_jobs: int = 1) -> RateCurve:
    """Rate curve averaged over uniform user drops.

    Selection (for the two scheme strategies) always uses closed-form
    rates; the recorded value per drop is closed-form when
    ``rating="analytic"`` or a fading-simulation estimate when
    ``rating="mc"``. Fixed modes skip selection entirely.
    """
    if n_drops < 1:
        raise ValueError("n_drops must be >= 1")
    if rating not in ("analytic", "mc"):
        raise ConfigError(f"rating must be 'analytic' or 'mc', got {rating!r}")
    grid = tuple(float(db) for db in snr_grid_db)
    ideal = (enumerate_ideal(scenario_template.n_ports, scenario_template.n_users)
             if scheme == "ideal" else None)
    tasks = [(scenario_template, scheme, ideal, grid, n_channels, seed, d, rating)
             for d in range(n_drops)]
    if n_jobs > 1 and n_drops > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_cell_drop_worker, tasks, chunksize=8))
    else:
        results = [_cell_drop_worker(t) for t in tasks]

    per_drop = np.stack([values for values, _ in results])  # fixed drop order
    mean = per_drop.mean(axis=0)
    if n_drops > 1:
        stderr = per_drop.std(axis=0, ddof=1) / math.sqrt(n_drops)
    else:
        stderr = np.zeros_like(mean)
    series = RateSeries(label=_scheme_label(scheme),
                        kind="analytic" if rating == "analytic" else "mc",
                        values=tuple(float(v) for v in mean),
                        std_errors=tuple(float(e) for e in stderr))
    return RateCurve(snr_grid_db=grid, series=(series,))


def _hist_drop_worker(args) -> dict[float, str]:
    """Selected-mode group label per grid point, for one drop."""
    template, grid_points, seed, drop = args
    scenario = drop_users_uniform(
        template, np.random.SeedSequence(entropy=seed, spawn_key=(drop,)))
    pl = pathloss_matrix(scenario)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateGeometryWarning)
        candidates = enumerate_min_distance(pl)
    chosen_at = {}
    for db in grid_points:
        mode = select_mode(scenario, pl, candidates, db_to_linear(db)).chosen_mode
        chosen_at[db] = f"KA{mode.n_active_users}_NA{mode.n_active_ports}"
    return chosen_at


def mode_histogram(scenario_template: Scenario, snr_ranges_db, n_drops: int,
                   seed: int, grid_step_db: float = 5.0,
                   n_jobs: int = 1) -> dict[tuple[float, float], dict[str, float]]:
    """Relative selection frequency of (K_A, N_A) groups per SNR range.

    For every drop and every grid point inside a range, the nearest-user
    scheme's selected mode is tallied under the label ``KA{k}_NA{n}``;
    fractions sum to one within each range.
    """
    ranges = [(float(lo), float(hi)) for lo, hi in snr_ranges_db]
    for lo, hi in ranges:
        if hi < lo:
            raise ConfigError(f"invalid SNR range [{lo}, {hi}]")
    points_per_range = []
    for lo, hi in ranges:
        points = [lo]
        while points[-1] + grid_step_db <= hi + 1e-9:
            points.append(points[-1] + grid_step_db)
        points_per_range.append(points)

    flat_points = tuple(sorted({db for pts in points_per_range for db in pts}))
    tasks = [(scenario_template, flat_points, seed, d) for d in range(n_drops)]
    if n_jobs > 1 and n_drops > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            per_drop = list(pool.map(_hist_drop_worker, tasks, chunksize=8))
    else:
        per_drop = [_hist_drop_worker(t) for t in tasks]

    counts: dict[tuple[float, float], dict[str, int]] = {r: {} for r in ranges}
    for chosen_at in per_drop:
        for r, points in zip(ranges, points_per_range):
            for db in points:
                label = chosen_at[db]
                counts[r][label] = counts[r].get(label, 0) + 1

    fractions: dict[tuple[float, float], dict[str, float]] = {}
    for r in ranges:
        total = sum(counts[r].values())
        fractions[r] = {label: counts[r][label] / total
                        for label in sorted(counts[r])}
    return fractions
