"""Closed-form SINR statistics and ergodic rates for fixed large-scale gains.

With Rayleigh fading, a user's aggregate signal power and its
interference-plus-noise power are each weighted sums of independent
exponentials, so both densities are hypoexponential mixtures obtained by
partial fractions. The ratio's density and the resulting ergodic rate
then reduce to combinations of scaled exponential-integral terms.
All formulas assume pairwise-distinct gains; near-ties are separated by a
deterministic relative perturbation (see ``GAIN_TIE_REL_TOL``), which the
continuity of the rate in the gains makes harmless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import numerics
from .errors import DegenerateGainsError
from .geometry import PathlossMatrix, Scenario, linear_to_db
from .modes import TransmissionMode

LN2 = math.log(2.0)

# Two gains closer than this (relative) are treated as tied and nudged apart.
GAIN_TIE_REL_TOL = 1e-9
# Relative perturbation unit applied to the later of a tied pair.
GAIN_PERTURB_REL = 1e-7
_GUARD_MAX_PASSES = 8

# Evaluations of the scaled E1 kernel repeat heavily across candidate
# modes at a fixed (geometry, SNR) point; memoize by argument.
_E1_CACHE: dict[float, float] = {}
_E1_CACHE_LIMIT = 200_000


def _exp_e1(x: float) -> float:
    value = _E1_CACHE.get(x)
    if value is None:
        value = numerics.exp_e1(x)
        if len(_E1_CACHE) >= _E1_CACHE_LIMIT:
            _E1_CACHE.clear()
        _E1_CACHE[x] = value
    return value


def clear_caches() -> None:
    _E1_CACHE.clear()


def _separate_gains(gains: Sequence[float]) -> list[float]:
    """Nudge near-tied gains apart deterministically.

    The k-th offender is scaled by (1 + GAIN_PERTURB_REL * k) so repeated
    values fan out; raises if ties survive the pass budget.
    """
    values = [float(g) for g in gains]
    for _ in range(_GUARD_MAX_PASSES):
        clash = None
        for b in range(1, len(values)):
            for a in range(b):
                if abs(values[a] - values[b]) <= GAIN_TIE_REL_TOL * max(values[a], values[b]):
                    clash = b
                    break
            if clash is not None:
                break
        if clash is None:
            return values
        values[clash] *= 1.0 + GAIN_PERTURB_REL * (clash + 1)
    raise DegenerateGainsError(f"gains remained tied after separation guard: {gains}")


@dataclass(frozen=True)
class UserLinkPartition:
    """One user's link budget under a mode: desired vs. interfering gains.

    Construction separates near-tied gains across the union of both lists
    (the rate expression divides by every pairwise difference, including
    signal-vs-interference ones).
    """

    signal_gains: tuple[float, ...]
    interference_gains: tuple[float, ...]
    tx_power: float
    noise_power: float

    def __post_init__(self) -> None:
        if not self.signal_gains:
            raise ValueError("partition needs at least one signal gain")
        if any(g <= 0 for g in self.signal_gains + self.interference_gains):
            raise ValueError("all gains must be strictly positive")
        if self.tx_power <= 0 or self.noise_power <= 0:
            raise ValueError("tx_power and noise_power must be strictly positive")
        merged = _separate_gains(self.signal_gains + self.interference_gains)
        n_sig = len(self.signal_gains)
        object.__setattr__(self, "signal_gains", tuple(merged[:n_sig]))
        object.__setattr__(self, "interference_gains", tuple(merged[n_sig:]))


def partition_for_user(pathloss: PathlossMatrix, mode: TransmissionMode,
                       user: int, tx_power: float,
                       noise_power: float) -> UserLinkPartition | None:
    """Partition for a (1-based) user, or None when the mode leaves it idle."""
    ports = mode.support_sets.get(user)
    if not ports:
        return None
    row = pathloss.gains[user - 1]
    signal = tuple(float(row[j]) for j in sorted(ports))
    interference = tuple(float(row[j]) for j in sorted(mode.complements[user]))
    return UserLinkPartition(signal_gains=signal, interference_gains=interference,
                             tx_power=tx_power, noise_power=noise_power)


def _pf_weights(gains: Sequence[float]) -> list[float]:
    """Partial-fraction weights w_k = prod_{l != k} g_k / (g_k - g_l)."""
    weights = []
    for k, gk in enumerate(gains):
        prod = 1.0
        for l, gl in enumerate(gains):
            if l != k:
                prod *= gk / (gk - gl)
        weights.append(prod)
    return weights


# --- densities and distribution functions ----------------------------------

def pdf_signal(partition: UserLinkPartition) -> Callable:
    """Density of the aggregate received signal power on (0, inf).

    Hypoexponential mixture: sum_k w_k/(S_k P) * exp(-rho/(S_k P)).
    """
    scales = [g * partition.tx_power for g in partition.signal_gains]
    weights = _pf_weights(partition.signal_gains)

    def pdf(rho):
        rho = np.asarray(rho, dtype=float)
        out = sum(w / s * np.exp(-rho / s) for w, s in zip(weights, scales))
        return np.where(rho > 0.0, out, 0.0)

    return pdf


def cdf_signal(partition: UserLinkPartition) -> Callable:
    scales = [g * partition.tx_power for g in partition.signal_gains]
    weights = _pf_weights(partition.signal_gains)

    def cdf(rho):
        rho = np.asarray(rho, dtype=float)
        out = sum(w * (-np.expm1(-np.maximum(rho, 0.0) / s))
                  for w, s in zip(weights, scales))
        return np.where(rho > 0.0, out, 0.0)

    return cdf


def pdf_interference_plus_noise(partition: UserLinkPartition) -> Callable:
    """Density of noise power plus aggregate interference, on (noise, inf)."""
    if not partition.interference_gains:
        raise ValueError("partition has no interference gains")
    noise = partition.noise_power
    scales = [g * partition.tx_power for g in partition.interference_gains]
    weights = _pf_weights(partition.interference_gains)

    def pdf(rho):
        rho = np.asarray(rho, dtype=float)
        shifted = rho - noise
        out = sum(w / s * np.exp(-np.maximum(shifted, 0.0) / s)
                  for w, s in zip(weights, scales))
        return np.where(shifted > 0.0, out, 0.0)

    return pdf


def cdf_interference_plus_noise(partition: UserLinkPartition) -> Callable:
    if not partition.interference_gains:
        raise ValueError("partition has no interference gains")
    noise = partition.noise_power
    scales = [g * partition.tx_power for g in partition.interference_gains]
    weights = _pf_weights(partition.interference_gains)

    def cdf(rho):
        rho = np.asarray(rho, dtype=float)
        shifted = np.maximum(rho - noise, 0.0)
        out = sum(w * (-np.expm1(-shifted / s)) for w, s in zip(weights, scales))
        return np.where(rho > noise, out, 0.0)

    return cdf


def pdf_sinr(partition: UserLinkPartition) -> Callable:
    """Density of the SINR ratio on (0, inf).

    Requires at least one interference gain; with none the ratio reduces
    to signal/noise and callers should use the no-interference rate path.
    """
    if not partition.interference_gains:
        raise ValueError("no interference gains: use the no-interference "
                         "rate path instead of the SINR ratio density")
    sig, intf = partition.signal_gains, partition.interference_gains
    p, noise = partition.tx_power, partition.noise_power
    w_sig, w_intf = _pf_weights(sig), _pf_weights(intf)

    def pdf(rho):
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        for wk, sk in zip(w_sig, sig):
            for wu, su in zip(w_intf, intf):
                denom = su * rho + sk
                out = out + (wk * wu * (noise * denom + sk * su * p) / denom ** 2
                             * np.exp(-noise * rho / (sk * p)))
        out = out / p
        return np.where(rho > 0.0, out, 0.0)

    return pdf


def cdf_sinr(partition: UserLinkPartition) -> Callable:
    if not partition.interference_gains:
        raise ValueError("no interference gains: use the no-interference path")
    sig, intf = partition.signal_gains, partition.interference_gains
    p, noise = partition.tx_power, partition.noise_power
    w_sig, w_intf = _pf_weights(sig), _pf_weights(intf)

    def cdf(rho):
        rho = np.asarray(rho, dtype=float)
        rpos = np.maximum(rho, 0.0)
        tail = np.zeros_like(rpos)
        for wk, sk in zip(w_sig, sig):
            for wu, su in zip(w_intf, intf):
                tail = tail + (wk * wu * sk / (sk + rpos * su)
                               * np.exp(-noise * rpos / (sk * p)))
        return np.where(rho > 0.0, 1.0 - tail, 0.0)

    return cdf


# --- ergodic rates ----------------------------------------------------------

def _log1p_inv(x: float) -> float:
    """ln(1 + 1/x): the high-accuracy stand-in used by the approximated rates."""
    return math.log1p(1.0 / x)


def _rate_with_interference(partition: UserLinkPartition,
                            kernel: Callable[[float], float]) -> float:
    sig, intf = partition.signal_gains, partition.interference_gains
    p, noise = partition.tx_power, partition.noise_power
    w_sig, w_intf = _pf_weights(sig), _pf_weights(intf)
    kernel_at = {g: kernel(noise / (g * p)) for g in set(sig) | set(intf)}
    total = 0.0
    for wk, sk in zip(w_sig, sig):
        for wu, su in zip(w_intf, intf):
            total += (wk * wu * sk / (sk - su)
                      * (kernel_at[sk] - kernel_at[su]))
    return total / LN2


def _rate_no_interference(gains: Sequence[float], tx_power: float,
                          noise_power: float,
                          kernel: Callable[[float], float]) -> float:
    weights = _pf_weights(gains)
    return sum(w * kernel(noise_power / (g * tx_power))
               for w, g in zip(weights, gains)) / LN2


def ergodic_user_rate(partition: UserLinkPartition) -> float:
    """Exact ergodic rate of one user, in bits/s/Hz.

    Weighted differences of scaled-E1 terms; dispatches to the
    interference-free form when the partition has no interferers.
    """
    if not partition.interference_gains:
        return _rate_no_interference(partition.signal_gains, partition.tx_power,
                                     partition.noise_power, _exp_e1)
    return _rate_with_interference(partition, _exp_e1)


def ergodic_user_rate_no_interference(signal_gains: Sequence[float],
                                      tx_power: float,
                                      noise_power: float) -> float:
    """Exact ergodic rate with no interfering port: signal over noise only."""
    gains = _separate_gains(signal_gains)
    return _rate_no_interference(gains, tx_power, noise_power, _exp_e1)


@dataclass(frozen=True)
class AnalysisPoint:
    """Closed-form rates of one (scenario, mode) pair at one SNR."""

    snr: float
    per_user_rates: tuple[float, ...]
    sum_rate: float


def ergodic_sum_rate(scenario: Scenario, pathloss: PathlossMatrix,
                     mode: TransmissionMode) -> AnalysisPoint:
    """Exact ergodic sum rate: per-user rates summed over active users.

    Users not served by the mode contribute exactly zero.
    """
    per_user = []
    for user in range(1, scenario.n_users + 1):
        part = partition_for_user(pathloss, mode, user,
                                  scenario.tx_power, scenario.noise_power)
        if part is None:
            per_user.append(0.0)
            continue
        try:
            per_user.append(ergodic_user_rate(part))
        except DegenerateGainsError as exc:
            raise DegenerateGainsError(
                f"user {user}, mode {mode.label}: {exc}") from exc
    return AnalysisPoint(snr=scenario.snr, per_user_rates=tuple(per_user),
                         sum_rate=float(sum(per_user)))


def approx_sum_rate(scenario: Scenario, pathloss: PathlossMatrix,
                    mode: TransmissionMode) -> float:
    """Approximated sum rate: every scaled-E1 term replaced by ln(1 + 1/x).

    The substitution upper-bounds each term individually, but differences
    of substituted terms carry no sign guarantee, so this is not a bound
    on the exact sum rate in general.
    """
    total = 0.0
    for user in range(1, scenario.n_users + 1):
        part = partition_for_user(pathloss, mode, user,
                                  scenario.tx_power, scenario.noise_power)
        if part is None:
            continue
        if part.interference_gains:
            total += _rate_with_interference(part, _log1p_inv)
        else:
            total += _rate_no_interference(part.signal_gains, part.tx_power,
                                           part.noise_power, _log1p_inv)
    return total


# --- two-port, two-user analysis -------------------------------------------

@dataclass(frozen=True)
class CrossoverFormulas:
    """High-SNR crossover points (linear SNR) from the closed-form rule.

    ``single_vs_12``: where mode [1 1] overtakes [1 2];
    ``single_vs_21``: where mode [1 1] overtakes [2 1].
    """

    single_vs_12: float
    single_vs_21: float

    @property
    def single_vs_12_db(self) -> float:
        return linear_to_db(self.single_vs_12)

    @property
    def single_vs_21_db(self) -> float:
        return linear_to_db(self.single_vs_21)


def crossover_snr(pathloss: PathlossMatrix) -> CrossoverFormulas:
    """Closed-form high-SNR crossover of single-user vs. two-user modes.

    Valid for the 2x2 case. When the second user's two gains coincide the
    ratio power r**(1/(r-1)) tends to e, and that limit is returned
    instead of failing.
    """
    gains = pathloss.gains
    if gains.shape != (2, 2):
        raise ValueError(f"crossover analysis needs a 2x2 gain matrix, "
                         f"got shape {gains.shape}")
    s12 = float(gains[0, 1])
    s21, s22 = float(gains[1, 0]), float(gains[1, 1])
    if abs(s21 - s22) <= GAIN_TIE_REL_TOL * max(s21, s22):
        return CrossoverFormulas(single_vs_12=math.e / s12,
                                 single_vs_21=math.e / s21)
    ratio = s21 / s22
    vs_12 = (1.0 / s12) * ratio ** (s22 / (s21 - s22))
    vs_21 = (1.0 / s21) * ratio ** (s21 / (s21 - s22))
    return CrossoverFormulas(single_vs_12=vs_12, single_vs_21=vs_21)


def single_user_rate_lower_bound(pathloss: PathlossMatrix, user_index: int,
                                 snr: float) -> float:
    """log2(max-gain * snr + 1): floor on the all-ports single-user rate."""
    gains = pathloss.gains
    if gains.shape[1] != 2:
        raise ValueError("single-user bound is stated for the two-port case")
    best = float(np.max(gains[user_index - 1]))
    return math.log2(best * snr + 1.0)


def rate_curve_intersection_db(rate_a: Callable[[float], float],
                               rate_b: Callable[[float], float],
                               lo_db: float = -20.0, hi_db: float = 80.0,
                               tol_db: float = 1e-4,
                               scan_step_db: float = 0.25) -> float | None:
    """Highest-SNR crossing of two rate curves, located by bisection.

    ``rate_a``/``rate_b`` map linear SNR to bits/s/Hz. The difference is
    scanned on a dB grid and the last sign change is refined; returns the
    crossing in dB, or None when the curves do not cross in range.
    """
    def diff(db: float) -> float:
        rho = 10.0 ** (db / 10.0)
        return rate_a(rho) - rate_b(rho)

    n_steps = int(math.ceil((hi_db - lo_db) / scan_step_db))
    grid = [lo_db + i * (hi_db - lo_db) / n_steps for i in range(n_steps + 1)]
    values = [diff(db) for db in grid]

    bracket = None
    for i in range(len(grid) - 1):
        if values[i] == 0.0:
            bracket = (grid[i], grid[i])
        elif values[i] * values[i + 1] < 0.0:
            bracket = (grid[i], grid[i + 1])
    if bracket is None:
        return None

    lo, hi = bracket
    f_lo = diff(lo)
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        f_mid = diff(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)
