"""Completion-time analysis: per-modality descriptive statistics and
Bonferroni-corrected pairwise paired t-tests.

The default unit of analysis is the per-participant mean duration (one value
per participant and modality), matching the within-subject design where every
participant runs all three modalities. Per-trial pooling is available behind
an explicit flag and is labeled as such in reports.

The t-distribution tail is evaluated through a regularized incomplete beta
implemented here (continued fraction, absolute error well under 1e-9); the
test suite checks it against an independent high-precision oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

MODALITY_ORDER = ("haptic", "visual", "audio")


class TooFewSamples(ValueError):
    """Fewer than two observations; no sample std exists."""


class LengthMismatch(ValueError):
    """Paired columns of different lengths."""


@dataclass(frozen=True)
class ModalitySummary:
    modality: str
    n: int
    mean_s: float
    std_s: float


@dataclass(frozen=True)
class PairwiseTest:
    pair: tuple[str, str]
    t_stat: float
    df: int
    p_raw: float
    p_adj: float
    significant: bool
    # "all_zero" (identical columns, p forced to 1) or "zero_variance"
    # (constant nonzero difference, p forced to 0); None for regular tests.
    degenerate: str | None = None


@dataclass
class StatsReport:
    summaries: list[ModalitySummary]
    tests: list[PairwiseTest]
    alpha: float = 0.05
    unit_of_analysis: str = "per-participant mean duration"
    n_participants: int = 0
    summaries_ex_dwell: list[ModalitySummary] = field(default_factory=list)
    difficulty: list[ModalitySummary] = field(default_factory=list)
    excluded_timeouts: int = 0
    notes: list[str] = field(default_factory=list)


def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta (modified Lentz).
    max_iter = 500
    eps = 3e-16
    fpmin = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta failed to converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: int) -> float:
    """Two-sided p-value of a t statistic: P(|T_df| >= |t|)."""
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def mean_std(values: list[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (n-1 denominator)."""
    n = len(values)
    if n < 2:
        raise TooFewSamples(f"need at least 2 values, got {n}")
    m = math.fsum(values) / n
    var = math.fsum((v - m) ** 2 for v in values) / (n - 1)
    return m, math.sqrt(var)


def summarize(modality: str, durations: list[float]) -> ModalitySummary:
    m, sd = mean_std(durations)
    return ModalitySummary(modality=modality, n=len(durations), mean_s=m, std_s=sd)


def paired_t(a: list[float], b: list[float]) -> tuple[float, int, float, str | None]:
    """Two-sided paired t-test; returns (t, df, p_raw, degenerate_flag).

    Degenerate inputs keep the pipeline total: identical columns give p = 1
    ("all_zero"), a constant nonzero difference gives t = +-inf and p = 0
    ("zero_variance"). Both are flagged.
    """
    if len(a) != len(b):
        raise LengthMismatch(f"column lengths differ: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise TooFewSamples(f"need at least 2 pairs, got {n}")
    d = [x - y for x, y in zip(a, b)]
    if all(v == 0.0 for v in d):
        return 0.0, n - 1, 1.0, "all_zero"
    m, sd = mean_std(d)
    if sd == 0.0:
        t = math.inf if m > 0 else -math.inf
        return t, n - 1, 0.0, "zero_variance"
    t = m / (sd / math.sqrt(n))
    return t, n - 1, t_sf_two_sided(t, n - 1), None


def bonferroni(p_raws: list[float]) -> list[float]:
    """p_adj_i = min(1, m * p_raw_i) with m = len(p_raws)."""
    m = len(p_raws)
    for p in p_raws:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value out of range: {p}")
    return [min(1.0, m * p) for p in p_raws]


def compare_all(
    columns: dict[str, list[float]],
    alpha: float = 0.05,
    unit_of_analysis: str = "per-participant mean duration",
) -> StatsReport:
    """Summaries plus all pairwise Bonferroni-adjusted paired t-tests.

    ``columns`` maps each modality to one value per participant, aligned by
    participant across modalities.
    """
    modalities = [m for m in MODALITY_ORDER if m in columns]
    modalities += [m for m in columns if m not in modalities]
    lengths = {len(columns[m]) for m in modalities}
    if len(lengths) > 1:
        raise LengthMismatch(f"columns are not aligned: lengths {sorted(lengths)}")
    n = lengths.pop() if lengths else 0
    if n < 2:
        raise TooFewSamples("need at least 2 participants")

    summaries = [summarize(m, columns[m]) for m in modalities]
    pairs = list(combinations(modalities, 2))
    raw = [paired_t(columns[x], columns[y]) for x, y in pairs]
    adjusted = bonferroni([p for _, _, p, _ in raw])
    tests = [
        PairwiseTest(
            pair=pair,
            t_stat=t,
            df=df,
            p_raw=p,
            p_adj=p_adj,
            significant=p_adj < alpha,
            degenerate=flag,
        )
        for pair, (t, df, p, flag), p_adj in zip(pairs, raw, adjusted)
    ]
    return StatsReport(
        summaries=summaries,
        tests=tests,
        alpha=alpha,
        unit_of_analysis=unit_of_analysis,
        n_participants=n,
    )
