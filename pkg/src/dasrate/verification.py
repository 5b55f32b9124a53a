"""Self-check suites behind ``dasrate verify``.

Each check compares an implementation path against an independent route
(classical bounds, adaptive quadrature, brute-force enumeration, or
Monte Carlo) and reports the measured error against its tolerance.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from . import numerics, rate, simulate
from .geometry import Scenario, drop_users_uniform, pathloss_matrix
from .modes import (enumerate_ideal, enumerate_min_distance, ideal_count,
                    min_distance_count)
from .rate import UserLinkPartition
from .selection import compare_schemes, select_mode


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = (f"[{status}] {self.name}: measured {self.measured:.3e}, "
                f"tolerated {self.tolerance:.3e}")
        return text + (f" ({self.detail})" if self.detail else "")


def quadrature_user_rate(partition: UserLinkPartition) -> float:
    """Independent rate oracle: adaptive quadrature against the SINR density.

    With interference, integrates log2(1+rho) against the ratio density;
    without, against the signal density rescaled to SNR units.
    """
    noise = partition.noise_power
    scale = max(partition.signal_gains) * partition.tx_power / noise
    cut = max(50.0, 60.0 * scale)
    if partition.interference_gains:
        pdf = rate.pdf_sinr(partition)
        return numerics.log_integral_quadrature(pdf, upper_cut=cut)
    signal_pdf = rate.pdf_signal(partition)
    return numerics.log_integral_quadrature(
        lambda rho: noise * signal_pdf(rho * noise), upper_cut=cut)


def random_partition(rng: np.random.Generator, max_signal: int = 3,
                     max_interference: int = 3,
                     allow_empty_interference: bool = False) -> UserLinkPartition:
    n_sig = int(rng.integers(1, max_signal + 1))
    lo = 0 if allow_empty_interference else 1
    n_intf = int(rng.integers(lo, max_interference + 1))
    gains = 10.0 ** rng.uniform(-3.0, -0.5, size=n_sig + n_intf)
    return UserLinkPartition(signal_gains=tuple(gains[:n_sig]),
                             interference_gains=tuple(gains[n_sig:]),
                             tx_power=10.0 ** rng.uniform(0.0, 4.0),
                             noise_power=1.0)


def _template(n: int, k: int) -> Scenario:
    return Scenario(n_ports=n, n_users=k, cell_radius=math.sqrt(112.0 / 3.0),
                    pathloss_exponent=3.0, tx_power=1.0, noise_power=1.0)


# --- individual checks -------------------------------------------------------

def check_exp_e1_bounds() -> CheckResult:
    """Classical bracket 0.5*ln(1+2/x) <= exp(x)E1(x) <= ln(1+1/x), strictly."""
    xs = np.logspace(-6, 3, 240)
    worst = math.inf
    monotone = True
    prev = math.inf
    for x in xs:
        v = numerics.exp_e1(float(x))
        lo = 0.5 * math.log1p(2.0 / x)
        hi = math.log1p(1.0 / x)
        worst = min(worst, v - lo, hi - v)
        if v >= prev:
            monotone = False
        prev = v
    return CheckResult("exp_e1 two-sided bound and monotonicity",
                       worst > 0.0 and monotone, measured=worst, tolerance=0.0,
                       detail="margin must stay strictly positive")


def check_exp_e1_branch_consistency() -> CheckResult:
    """Series and continued-fraction branches agree at the switchover."""
    x = numerics.SERIES_CF_SPLIT
    a = numerics._exp_e1_series(x)
    b = numerics._exp_e1_continued_fraction(x)
    err = abs(a - b) / abs(a)
    return CheckResult("exp_e1 branch consistency at switchover", err <= 1e-12,
                       measured=err, tolerance=1e-12)


def check_exp_e1_reference() -> CheckResult:
    """Agreement with scipy's unscaled E1 where that stays representable."""
    xs = np.logspace(-4, 2.5, 120)
    worst = 0.0
    for x in xs:
        ref = math.exp(x) * float(special.exp1(x))
        worst = max(worst, abs(numerics.exp_e1(float(x)) - ref) / ref)
    return CheckResult("exp_e1 vs scipy reference", worst <= 1e-12,
                       measured=worst, tolerance=1e-12)


def check_exp_e1_asymptote() -> CheckResult:
    """x * exp(x)E1(x) -> 1 for large arguments."""
    err = abs(1e6 * numerics.exp_e1(1e6) - 1.0)
    return CheckResult("exp_e1 leading asymptote at x=1e6", err <= 1e-5,
                       measured=err, tolerance=1e-5)


def check_pdf_normalization(n_partitions: int = 10) -> CheckResult:
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(n_partitions):
        part = random_partition(rng)
        total, _ = integrate.quad(rate.pdf_signal(part), 0.0, np.inf, limit=300)
        worst = max(worst, abs(total - 1.0))
        total, _ = integrate.quad(rate.pdf_interference_plus_noise(part),
                                  part.noise_power, np.inf, limit=300)
        worst = max(worst, abs(total - 1.0))
        total, _ = integrate.quad(rate.pdf_sinr(part), 0.0, np.inf, limit=300)
        worst = max(worst, abs(total - 1.0))
    return CheckResult("density normalization (signal, interference, SINR)",
                       worst <= 1e-6, measured=worst, tolerance=1e-6)


def check_rate_vs_quadrature(n_partitions: int = 10) -> CheckResult:
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(n_partitions):
        part = random_partition(rng, allow_empty_interference=True)
        closed = rate.ergodic_user_rate(part)
        worst = max(worst, abs(closed - quadrature_user_rate(part)))
    return CheckResult("closed-form rate vs quadrature oracle",
                       worst <= 1e-8, measured=worst, tolerance=1e-8)


def _brute_force_ideal_size(n: int, k: int) -> int:
    count = 0
    for assignment in itertools.product(range(k + 1), repeat=n):
        users = {u for u in assignment if u != 0}
        ports_on = sum(1 for u in assignment if u != 0)
        if not users:
            continue
        if len(users) == 1 and ports_on < n:
            continue
        count += 1
    return count


def check_candidate_counts() -> CheckResult:
    """Count formulas vs. actual enumerations vs. brute-force filtering."""
    rng = np.random.default_rng(303)
    worst = 0
    for n, k in itertools.product(range(1, 5), range(1, 5)):
        expected = ideal_count(n, k)
        worst = max(worst, abs(len(enumerate_ideal(n, k)) - expected),
                    abs(_brute_force_ideal_size(n, k) - expected))
    for n in range(2, 7):
        template = _template(n, n)
        for _ in range(3):
            scenario = drop_users_uniform(template, rng)
            pl = pathloss_matrix(scenario)
            base = [int(np.argmin(pl.distances[:, j])) for j in range(n)]
            if len(set(base)) < n:
                continue  # degenerate nearest-user map is exempt from 2^N - N
            got = len(enumerate_min_distance(pl))
            worst = max(worst, abs(got - min_distance_count(n)))
    fixed = (ideal_count(2, 2), ideal_count(4, 4), ideal_count(5, 5),
             min_distance_count(2), min_distance_count(4), min_distance_count(5))
    if fixed != (4, 568, 7625, 2, 12, 27):
        worst = max(worst, 1)
    return CheckResult("candidate counts vs enumeration and brute force",
                       worst == 0, measured=float(worst), tolerance=0.0)


def check_selection_properties(n_drops: int = 5) -> CheckResult:
    """Reduced-set rate never exceeds exhaustive; scaling P and noise
    together never changes the choice."""
    template = _template(3, 3)
    worst = 0.0
    ok = True
    for drop in range(n_drops):
        scenario = drop_users_uniform(template, seed=(404, drop))
        pl = pathloss_matrix(scenario)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", simulate.DegenerateGeometryWarning)
            for snr_db in (0.0, 20.0, 40.0):
                snr = 10.0 ** (snr_db / 10.0)
                ideal, reduced = compare_schemes(scenario, pl, snr)
                worst = max(worst, reduced.chosen_rate - ideal.chosen_rate)
                scaled = dataclasses.replace(scenario,
                                             noise_power=scenario.noise_power * 7.3,
                                             tx_power=scenario.tx_power * 7.3)
                again = select_mode(scaled, pl,
                                    enumerate_min_distance(pl), snr)
                ok = ok and again.chosen_mode == reduced.chosen_mode
    return CheckResult("selection dominance and argmax invariance",
                       ok and worst <= 1e-12, measured=worst, tolerance=1e-12,
                       detail="reduced-minus-exhaustive chosen rate")


def check_mc_determinism() -> CheckResult:
    scenario = drop_users_uniform(_template(2, 2), seed=505).with_tx_power(100.0)
    pl = pathloss_matrix(scenario)
    mode = enumerate_ideal(2, 2).modes[1]
    a = simulate.mc_ergodic_sum_rate(scenario, pl, mode, 5000, seed=7)
    b = simulate.mc_ergodic_sum_rate(scenario, pl, mode, 5000, seed=7)
    identical = a == b
    return CheckResult("Monte Carlo determinism at fixed seed", identical,
                       measured=0.0 if identical else 1.0, tolerance=0.0)


def check_mc_vs_analytic(n_cases: int = 6, n_trials: int = 20000) -> CheckResult:
    rng = np.random.default_rng(606)
    worst = 0.0
    for case in range(n_cases):
        n = int(rng.integers(2, 4))
        scenario = drop_users_uniform(_template(n, n), seed=(607, case))
        scenario = scenario.with_tx_power(10.0 ** rng.uniform(0.0, 3.0))
        pl = pathloss_matrix(scenario)
        candidates = enumerate_ideal(n, n)
        mode = candidates.modes[int(rng.integers(0, len(candidates)))]
        est = simulate.mc_ergodic_sum_rate(scenario, pl, mode, n_trials,
                                           seed=(608, case))
        closed = rate.ergodic_sum_rate(scenario, pl, mode).sum_rate
        worst = max(worst, abs(closed - est.mean) / est.std_error)
    return CheckResult("analytic rate within 3 sigma of Monte Carlo",
                       worst <= 3.0, measured=worst, tolerance=3.0,
                       detail=f"{n_cases} cases at {n_trials} trials")


def check_ks_distributions(n_samples: int = 1_000_000) -> CheckResult:
    """Kolmogorov-Smirnov distance of sampled powers vs closed-form CDFs."""
    rng = np.random.default_rng(707)
    part = UserLinkPartition(signal_gains=(0.05, 0.012, 0.0031),
                             interference_gains=(0.02, 0.004),
                             tx_power=50.0, noise_power=1.0)
    p = part.tx_power
    sig_draws = sum(g * p * rng.exponential(size=n_samples)
                    for g in part.signal_gains)
    intf_draws = part.noise_power + sum(g * p * rng.exponential(size=n_samples)
                                        for g in part.interference_gains)
    sinr_draws = sig_draws / intf_draws
    worst = 0.0
    for draws, cdf in ((sig_draws, rate.cdf_signal(part)),
                       (intf_draws, rate.cdf_interference_plus_noise(part)),
                       (sinr_draws, rate.cdf_sinr(part))):
        ks = stats.ks_1samp(draws, cdf).statistic
        worst = max(worst, float(ks))
    return CheckResult("KS distance of fading draws vs closed-form CDFs",
                       worst < 0.005, measured=worst, tolerance=0.005,
                       detail=f"{n_samples} samples")


def check_worker_invariance() -> CheckResult:
    scenario = drop_users_uniform(_template(2, 2), seed=808).with_tx_power(100.0)
    pl = pathloss_matrix(scenario)
    mode = enumerate_ideal(2, 2).modes[0]
    serial = simulate.mc_ergodic_sum_rate(scenario, pl, mode, 30000, seed=9, n_jobs=1)
    parallel = simulate.mc_ergodic_sum_rate(scenario, pl, mode, 30000, seed=9, n_jobs=2)
    identical = serial == parallel
    return CheckResult("bit-identical Monte Carlo across worker counts",
                       identical, measured=0.0 if identical else 1.0,
                       tolerance=0.0)


def canonical_pathloss(pl):
    """Relabel users and ports so the globally strongest link is (1, 1).

    The closed-form crossover rule is stated for the labeling where user 1
    is the minimum-distance user served by port 1; arbitrary drops must be
    relabeled before the rule applies.
    """
    from .geometry import PathlossMatrix

    gains, dist = pl.gains.copy(), pl.distances.copy()
    i, j = np.unravel_index(np.argmax(gains), gains.shape)
    if i == 1:
        gains, dist = gains[::-1], dist[::-1]
    if j == 1:
        gains, dist = gains[:, ::-1], dist[:, ::-1]
    return PathlossMatrix(distances=dist.copy(), gains=gains.copy())


def sample_crossover_geometries(n_geometries: int = 20, seed: int = 79,
                                min_link_snr: float = 10.0):
    """Random 2x2 geometries whose single- vs two-user crossover is genuinely
    high-SNR: the curves cross (S22 > S12 after canonical relabeling), the
    formula lands above 20 dB, and every link exceeds ``min_link_snr``
    linear SNR at the predicted crossing.

    Yields (pathloss, formula_db, approx_db, exact_db) tuples.
    """
    from .modes import TransmissionMode

    template = _template(2, 2)
    single, paired = TransmissionMode((1, 1)), TransmissionMode((1, 2))
    found = 0
    for attempt in range(4000):
        if found >= n_geometries:
            return
        scenario = drop_users_uniform(template, seed=(seed, attempt))
        pl = canonical_pathloss(pathloss_matrix(scenario))
        gains = pl.gains
        if gains[1, 1] <= gains[0, 1]:
            continue
        formulas = rate.crossover_snr(pl)
        if formulas.single_vs_12_db <= 20.0:
            continue
        if float(gains.min()) * formulas.single_vs_12 < min_link_snr:
            continue

        def approx(mode):
            return lambda snr: rate.approx_sum_rate(
                scenario.with_tx_power(snr), pl, mode)

        def exact(mode):
            return lambda snr: rate.ergodic_sum_rate(
                scenario.with_tx_power(snr), pl, mode).sum_rate

        approx_db = rate.rate_curve_intersection_db(approx(single), approx(paired))
        exact_db = rate.rate_curve_intersection_db(exact(single), exact(paired))
        if approx_db is None or exact_db is None:
            continue
        found += 1
        yield pl, formulas.single_vs_12_db, approx_db, exact_db


def check_crossover_consistency(n_geometries: int = 20) -> CheckResult:
    """Formula crossover vs bisected approximated-curve crossing, <= 1 dB.

    The exact-curve crossing is reported for comparison but carries no
    tolerance here: the E1 approximation loses the Euler-Mascheroni offset
    of the single-user curve, which displaces the exact crossing by a
    structural 1.3-2.5 dB (see the acceptance suite).
    """
    worst_fa = 0.0
    exact_gaps = []
    found = 0
    for _, formula_db, approx_db, exact_db in sample_crossover_geometries(n_geometries):
        found += 1
        worst_fa = max(worst_fa, abs(formula_db - approx_db))
        exact_gaps.append(abs(approx_db - exact_db))
    detail = (f"{found} high-SNR geometries; approx-vs-exact spread "
              f"{min(exact_gaps):.2f}-{max(exact_gaps):.2f} dB" if exact_gaps else
              "no geometries found")
    return CheckResult("crossover formula vs approximated-curve crossing",
                       found >= n_geometries and worst_fa <= 1.0,
                       measured=worst_fa, tolerance=1.0, detail=detail)


def run_checks(level: str = "quick") -> list[CheckResult]:
    if level not in ("quick", "full"):
        raise ValueError(f"level must be 'quick' or 'full', got {level!r}")
    results = [
        check_exp_e1_bounds(),
        check_exp_e1_branch_consistency(),
        check_exp_e1_reference(),
        check_exp_e1_asymptote(),
        check_pdf_normalization(),
        check_rate_vs_quadrature(),
        check_candidate_counts(),
        check_selection_properties(),
        check_mc_determinism(),
        check_mc_vs_analytic(),
    ]
    if level == "full":
        results += [
            check_ks_distributions(),
            check_mc_vs_analytic(n_cases=20, n_trials=100_000),
            check_worker_invariance(),
            check_crossover_consistency(),
        ]
    return results
