"""Analytic and Monte Carlo evaluation of PARA's failure rate and overhead.

A victim under adversarial hammering flips if it accumulates n_th aggressor
closes with no intervening refresh of its own row. Each close refreshes the
victim's side with probability p/2, so the victim survives a stretch of
n_th closes unprotected with probability q^n_th where q = 1 - p/2.

Two analytic figures are reported because a single closed form is not
derivable from the summary statistics alone:
  - a union bound: N_closes * q^n_th, an upper bound over sliding windows;
  - the exact value of the renewal process (the miss counter resets both on
    a protective refresh and on a completed run), via linear-time
    recurrences for the expected run count and the run probability.
Both are computed in log space where needed and bracket the truth honestly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

YEAR_SECONDS = 365.25 * 24 * 3600


class InsufficientTrials(Exception):
    """Monte Carlo CI wider than the requested bound."""


@dataclass(frozen=True)
class ParaAnalysisInput:
    p: float
    n_th: int
    act_rate: float = 1.0 / 55e-9  # closes/second under maximal hammering
    horizon: float = YEAR_SECONDS  # seconds

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must be in (0, 1]")
        if self.n_th < 0:
            raise ValueError("n_th must be >= 0")
        if self.act_rate <= 0 or self.horizon <= 0:
            raise ValueError("act_rate and horizon must be > 0")


def para_failure_rate_analytic(inp: ParaAnalysisInput) -> float:
    """Union-bound expected failures over the horizon: N * (1 - p/2)^n_th.

    N = act_rate * horizon sliding windows of n_th closes. Overflow-safe for
    tiny survival probabilities; monotone decreasing in p and n_th.
    """
    n_windows = inp.act_rate * inp.horizon
    if inp.n_th == 0:
        return n_windows
    log_value = math.log(n_windows) + inp.n_th * math.log1p(-inp.p / 2)
    return math.exp(log_value)


def expected_run_count(p: float, n_th: int, closes: int) -> float:
    """Exact expected number of victim flips over `closes` Bernoulli closes.

    The miss counter resets on each protective refresh (prob p/2 per close)
    and on each completed run of n_th misses (the flip refreshes nothing,
    but a fired victim re-arms only from zero). Linear-time renewal
    recurrence:
        z(0) = 1,  z(k) = (1 - q) + g(k)
        g(k) = z(k - n_th) * q^n_th   for k >= n_th, else 0
        E[count] = sum_k g(k) = q^n_th * sum_{j=0}^{closes - n_th} z(j)
    """
    if n_th == 0:
        return float(closes)
    if closes < n_th:
        return 0.0
    q = 1.0 - p / 2.0
    q_run = math.exp(n_th * math.log(q)) if q > 0 else 0.0
    hit = 1.0 - q
    # z values; g(k) needs z(k - n_th) so keep the full prefix
    z = np.empty(closes - n_th + 1)
    z[0] = 1.0
    total_z = 1.0
    for j in range(1, closes - n_th + 1):
        g = q_run * z[j - n_th] if j >= n_th else 0.0
        z[j] = hit + g
        total_z += z[j]
    return q_run * total_z


def run_probability(p: float, n_th: int, closes: int) -> float:
    """Exact probability of at least one run of n_th misses in `closes`."""
    if n_th == 0:
        return 1.0
    if closes < n_th:
        return 0.0
    q = 1.0 - p / 2.0
    q_run = q ** n_th
    hit = 1.0 - q
    # f(n) = P(no run in n closes)
    f = np.ones(closes + 1)
    f[n_th] = 1.0 - q_run
    for n in range(n_th + 1, closes + 1):
        f[n] = f[n - 1] - hit * q_run * f[n - n_th - 1]
    return 1.0 - float(f[closes])


@dataclass(frozen=True)
class McEstimate:
    mean: float  # failures per trial
    ci_low: float
    ci_high: float
    total_failures: int
    trials: int
    closes: int

    def contains(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


def _trial_failures(rng: np.random.Generator, closes: int, hit_prob: float,
                    n_th: int) -> int:
    """Count completed miss runs in one trial, counter reset on completion.

    Simulated via inter-hit gaps: a maximal run of m consecutive misses
    contributes m // n_th completions, so only the geometric gap positions
    need to be drawn.
    """
    if hit_prob >= 1.0:
        return 0
    failures = 0
    consumed = 0
    mean_hits = closes * hit_prob
    chunk = max(16, int(mean_hits + 10 * math.sqrt(mean_hits + 1) + 16))
    while consumed < closes:
        gaps = rng.geometric(hit_prob, size=chunk)
        positions = consumed + np.cumsum(gaps)
        inside = positions <= closes
        n_inside = int(np.count_nonzero(inside))
        if n_inside:
            failures += int(np.sum((gaps[:n_inside] - 1) // n_th))
            consumed = int(positions[n_inside - 1])
        if n_inside < len(gaps):
            break
    tail = closes - consumed
    if tail > 0:
        failures += tail // n_th
    return failures


def para_failure_rate_montecarlo(p: float, n_th: int, closes: int,
                                 trials: int, seed: int,
                                 max_ci_width: float | None = None
                                 ) -> McEstimate:
    """Monte Carlo estimate of flips per trial with a 95% CI.

    Per-trial RNG streams derive from (seed, trial index) so trials are
    reproducible and order-independent. The CI is normal-approximation when
    enough failures were observed, and an exact Poisson interval on the
    total count otherwise (rare-event regime).
    """
    if n_th < 1:
        raise ValueError("n_th must be >= 1 for the Monte Carlo path")
    counts = np.empty(trials, dtype=np.int64)
    hit_prob = p / 2.0
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        counts[trial] = _trial_failures(rng, closes, hit_prob, n_th)
    total = int(counts.sum())
    mean = total / trials
    if total >= 100:
        half = 1.96 * counts.std(ddof=1) / math.sqrt(trials)
        ci = (mean - half, mean + half)
    else:
        lo = 0.0 if total == 0 else float(chi2.ppf(0.025, 2 * total)) / 2.0
        hi = float(chi2.ppf(0.975, 2 * total + 2)) / 2.0
        ci = (lo / trials, hi / trials)
    est = McEstimate(mean=mean, ci_low=ci[0], ci_high=ci[1],
                     total_failures=total, trials=trials, closes=closes)
    if max_ci_width is not None and est.ci_high - est.ci_low > max_ci_width:
        raise InsufficientTrials(
            f"CI width {est.ci_high - est.ci_low:.3g} exceeds {max_ci_width}")
    return est


def para_stress(p: float, n_th: int, windows: int, closes_per_window: int,
                seed: int) -> int:
    """Flips from maximal-rate hammering of `windows` retention windows.

    The victim is restored at every window boundary, so a window flips iff
    some stretch of n_th consecutive closes inside it draws no p/2 refresh.
    Only the geometric positions of refresh hits need to be sampled: the
    first-hit draw settles most windows and the few windows with enough
    room left after an early hit are walked gap by gap. Exactly equivalent
    to the per-close event simulation, vectorized.
    """
    if closes_per_window < n_th:
        return 0
    rng = np.random.default_rng(seed)
    hit_prob = p / 2.0
    if hit_prob == 0.0:
        return windows
    first_hit = rng.geometric(hit_prob, size=windows)
    flips = int(np.count_nonzero(first_hit > n_th))
    # windows whose first hit landed early can still flip if enough closes
    # remain after it; walk their remaining inter-hit gaps
    candidates = np.flatnonzero((first_hit <= n_th)
                                & (first_hit + n_th <= closes_per_window))
    for w in candidates:
        consumed = int(first_hit[w])
        while consumed + n_th <= closes_per_window:
            gap = int(rng.geometric(hit_prob))
            next_hit = consumed + gap
            run = (gap - 1 if next_hit <= closes_per_window
                   else closes_per_window - consumed)
            if run >= n_th:
                flips += 1
                break
            consumed = next_hit
    return flips


def para_overhead(run_result) -> float:
    """Extra-activation fraction of a mitigated run: mitigation ACTs over
    baseline ACTs. Expectation equals p for PARA on interior rows."""
    return run_result.extra_act_fraction


def para_overhead_counts(n_closes: int, p: float, seed: int) -> tuple[int, int]:
    """Vectorized PARA coin statistics over n_closes interior-row closes.

    Returns (left_refreshes, right_refreshes)."""
    rng = np.random.default_rng(seed)
    u = rng.random(n_closes)
    left = int(np.count_nonzero(u < p / 2))
    right = int(np.count_nonzero((u >= p / 2) & (u < p)))
    return left, right
