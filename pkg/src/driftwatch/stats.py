"""Robust statistics: path-length normalization, median/MAD thresholds, two-sample KS test."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

EULER_GAMMA = 0.5772156649

# Added to a threshold whose MAD collapsed to zero, so a constant score
# distribution does not flag every single sample.
MAD_EPSILON = 1e-9

DEFAULT_MAD_K = 3.5

# Consistency constant that rescales the MAD to estimate a normal sigma.
# Not applied by default; pass k = 3.5 * NORMAL_CONSISTENCY to opt in.
NORMAL_CONSISTENCY = 1.4826

_KS_SERIES_TOL = 1e-12
_KS_SERIES_MAX_TERMS = 100


def harmonic(i: int) -> float:
    """Approximate i-th harmonic number, ln(i) + Euler-Mascheroni gamma."""
    if i < 1:
        raise ConfigError(f"harmonic number needs i >= 1, got {i}")
    return math.log(i) + EULER_GAMMA


def c_factor(n: int) -> float:
    """Average depth of an unsuccessful binary-search-tree lookup over n instances.

    Exact for n <= 2, where the ln + gamma approximation of the harmonic
    number is badly off; the usual 2H(n-1) - 2(n-1)/n estimate for n >= 3.
    """
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * harmonic(n - 1) - 2.0 * (n - 1) / n


def c_factor_array(n) -> np.ndarray:
    """Vectorized c_factor over an array of instance counts."""
    n = np.asarray(n, dtype=np.float64)
    out = np.zeros(n.shape, dtype=np.float64)
    out[n == 2] = 1.0
    big = n >= 3
    nb = n[big]
    out[big] = 2.0 * (np.log(nb - 1.0) + EULER_GAMMA) - 2.0 * (nb - 1.0) / nb
    return out


def median(xs) -> float:
    """Middle order statistic; mean of the two middle values for even lengths."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size == 0:
        raise ConfigError("median of an empty sample")
    if not np.all(np.isfinite(xs)):
        raise ConfigError("median needs finite values")
    return float(np.median(xs))


@dataclass(frozen=True)
class MadSummary:
    """Median, unscaled MAD, and the one-sided upward threshold median + k * mad."""

    median: float
    mad: float
    k: float
    threshold: float
    degenerate: bool = False


def mad_summary(xs, k: float = DEFAULT_MAD_K) -> MadSummary:
    """Median absolute deviation summary with an upward outlier threshold.

    A zero MAD (constant input) sets the degenerate flag and floors the
    threshold at median + MAD_EPSILON instead of median exactly.
    """
    if k < 0:
        raise ConfigError(f"MAD multiplier k must be >= 0, got {k}")
    xs = np.asarray(xs, dtype=np.float64)
    med = median(xs)
    mad = float(np.median(np.abs(xs - med)))
    if mad == 0.0:
        return MadSummary(median=med, mad=0.0, k=k, threshold=med + MAD_EPSILON, degenerate=True)
    return MadSummary(median=med, mad=mad, k=k, threshold=med + k * mad)


@dataclass(frozen=True)
class KsResult:
    """Two-sample Kolmogorov-Smirnov statistic with its asymptotic p-value."""

    d_statistic: float
    p_value: float
    n1: int
    n2: int


def ks_statistic(a, b) -> float:
    """Exact sup-distance between the two empirical CDFs, ties included.

    Both CDFs are right-continuous step functions, so the supremum is
    attained at one of the sample points; evaluating at every pooled value
    is exact.
    """
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ConfigError("ks_statistic needs two non-empty samples")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_pvalue(d: float, n1: int, n2: int) -> float:
    """Asymptotic two-sample KS p-value via the alternating Kolmogorov series.

    The series is truncated once a term drops below 1e-12 or after 100
    terms, and the result clamped to [0, 1]. d = 0 short-circuits to 1,
    the limit the truncated series cannot reach. Asymptotic only: small
    samples (n < 25) get a rough value, not an exact permutation p.
    """
    if not 0.0 <= d <= 1.0:
        raise ConfigError(f"KS statistic must lie in [0, 1], got {d}")
    if n1 < 1 or n2 < 1:
        raise ConfigError("sample sizes must be >= 1")
    lam = d * math.sqrt(n1 * n2 / (n1 + n2))
    if lam == 0.0:
        return 1.0
    total = 0.0
    for j in range(1, _KS_SERIES_MAX_TERMS + 1):
        term = math.exp(-2.0 * j * j * lam * lam)
        total += term if j % 2 else -term
        if term < _KS_SERIES_TOL:
            break
    return min(1.0, max(0.0, 2.0 * total))


def ks_test(a, b) -> KsResult:
    """Convenience wrapper: statistic plus asymptotic p-value for two samples."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = ks_statistic(a, b)
    return KsResult(d_statistic=d, p_value=ks_pvalue(d, a.size, b.size), n1=int(a.size), n2=int(b.size))
