"""Sample autocorrelation machinery and statistical tests.

Implements the four checks used throughout the pipeline: the augmented
Dickey-Fuller unit-root test (constant + trend), the Ljung-Box portmanteau
test, the Shapiro-Wilk normality test (Royston's approximation), and
ACF/PACF estimation with fixed-level significance bands.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .dftable import df_pvalue
from .errors import DataError, NumericError
from .series import TimeSeries

ADF_NULL = "series has a unit root (not stationary)"
LJUNG_BOX_NULL = "residual autocorrelations up to the tested lag are jointly zero"
SHAPIRO_NULL = "sample is drawn from a normal distribution"


@dataclass(frozen=True)
class AcfResult:
    """Sample (partial) autocorrelations r_1..r_max_lag with their band.

    ``band`` is the fixed-level two-sided significance bound 1.96/sqrt(n);
    a coefficient is significant when its magnitude exceeds the band.
    """

    kind: str                      # "ACF" or "PACF"
    lags: tuple[int, ...]
    coefficients: tuple[float, ...]
    n: int
    band: float

    def significant(self) -> tuple[bool, ...]:
        return tuple(abs(c) > self.band for c in self.coefficients)


@dataclass(frozen=True)
class TestResult:
    """A named test statistic with its reference distribution outcome.

    ``df`` is present only for tests with a chi-square or tabulated
    reference; ``p_clamped`` flags a p-value pinned to a table boundary.
    """

    name: str
    statistic: float
    p_value: float
    null_hypothesis: str
    df: int | None = None
    p_clamped: bool = False


def _acf_values(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased (denominator-n) autocorrelation estimates for lags 1..max_lag."""
    xc = x - x.mean()
    denom = float(np.dot(xc, xc))
    return np.array([np.dot(xc[:-k], xc[k:]) / denom for k in range(1, max_lag + 1)])


def _check_acf_input(series: TimeSeries, max_lag: int) -> np.ndarray:
    x = np.asarray(series.values, dtype=float)
    n = x.size
    if n < 2:
        raise DataError("autocorrelation needs at least two observations")
    if not (1 <= max_lag < n):
        raise DataError(f"max_lag must be in 1..{n - 1}, got {max_lag}")
    if np.ptp(x) == 0.0:
        raise DataError("series is constant: autocorrelation undefined")
    return x


def acf(series: TimeSeries, max_lag: int) -> AcfResult:
    """Sample autocorrelation function with the denominator-n convention.

    r_k = sum_{t<=n-k} (x_t - xbar)(x_{t+k} - xbar) / sum_t (x_t - xbar)^2.
    r_0 = 1 is implied and not returned.
    """
    x = _check_acf_input(series, max_lag)
    r = _acf_values(x, max_lag)
    return AcfResult("ACF", tuple(range(1, max_lag + 1)), tuple(float(v) for v in r),
                     x.size, 1.96 / np.sqrt(x.size))


def pacf(series: TimeSeries, max_lag: int) -> AcfResult:
    """Partial autocorrelations via the Durbin-Levinson recursion on the ACF."""
    x = _check_acf_input(series, max_lag)
    r = _acf_values(x, max_lag)
    out = np.zeros(max_lag)
    out[0] = r[0]
    phi_prev = np.array([r[0]])
    for k in range(2, max_lag + 1):
        den = 1.0 - float(np.dot(phi_prev, r[:k - 1]))
        if den <= 0:
            raise NumericError(f"partial autocorrelation recursion broke down at lag {k}")
        pk = (r[k - 1] - float(np.dot(phi_prev, r[k - 2::-1]))) / den
        if abs(pk) >= 1.0 + 1e-9:
            raise NumericError(f"partial autocorrelation at lag {k} left [-1, 1]")
        out[k - 1] = pk
        phi_prev = np.concatenate([phi_prev - pk * phi_prev[::-1], [pk]])
    return AcfResult("PACF", tuple(range(1, max_lag + 1)), tuple(float(v) for v in out),
                     x.size, 1.96 / np.sqrt(x.size))


def adf_test(series: TimeSeries) -> TestResult:
    """Augmented Dickey-Fuller test with intercept and linear trend.

    Fits, by least squares,

        dy_t = alpha + beta * t + rho * y_{t-1} + sum_i delta_i dy_{t-i} + e_t

    with lag order k = trunc((n - 1)^(1/3)), and reports the t-ratio of rho
    with a p-value interpolated from the tabulated trend-case critical
    values. P-values outside [0.01, 0.99] are clamped and flagged.
    """
    x = np.asarray(series.values, dtype=float)
    m = x.size
    if m < 8:
        raise DataError(f"unit-root test needs at least 8 observations, got {m}")
    k = int(np.trunc((m - 1) ** (1.0 / 3.0)))
    kk = k + 1
    y = np.diff(x)
    n = y.size
    # rows t = kk..n (1-based in y); response dy_t, regressand level x_t
    yt = y[kk - 1:n]
    cols = [np.ones_like(yt), x[kk - 1:n], np.arange(kk, n + 1, dtype=float)]
    for i in range(1, kk):
        cols.append(y[kk - 1 - i:n - i])
    X = np.column_stack(cols)
    if yt.size <= X.shape[1]:
        raise DataError("unit-root test regression has no residual degrees of freedom")
    beta, _, rank, _ = np.linalg.lstsq(X, yt, rcond=None)
    if rank < X.shape[1]:
        raise NumericError("unit-root test regression matrix is singular")
    resid = yt - X @ beta
    s2 = float(resid @ resid) / (yt.size - X.shape[1])
    xtx_inv = np.linalg.inv(X.T @ X)
    se = np.sqrt(s2 * xtx_inv[1, 1])
    stat = float(beta[1] / se)
    p, clamped = df_pvalue(stat, n)
    return TestResult("ADF", stat, p, ADF_NULL, df=None, p_clamped=clamped)


def ljung_box(residuals: TimeSeries | Sequence[float], lag: int, fitdf: int = 0) -> TestResult:
    """Ljung-Box portmanteau statistic Q = n(n+2) sum_k r_k^2 / (n-k).

    ``fitdf`` reduces the chi-square degrees of freedom by the number of
    estimated model coefficients; the default 0 keeps df = lag.
    """
    x = np.asarray(residuals.values if isinstance(residuals, TimeSeries) else residuals,
                   dtype=float)
    n = x.size
    if lag < 1:
        raise DataError("lag must be positive")
    if n <= lag:
        raise DataError(f"need more than lag={lag} residuals, got {n}")
    if fitdf < 0 or (fitdf != 0 and fitdf >= lag):
        raise DataError("fitdf must be 0 or smaller than lag")
    if np.ptp(x) == 0.0:
        raise DataError("residuals are constant: autocorrelation undefined")
    r = _acf_values(x, lag)
    q = float(n * (n + 2) * np.sum(r * r / (n - np.arange(1, lag + 1))))
    df = lag - fitdf
    p = float(stats.chi2.sf(q, df))
    return TestResult("Ljung-Box", q, p, LJUNG_BOX_NULL, df=df)


def shapiro_wilk(sample: Sequence[float]) -> TestResult:
    """Shapiro-Wilk W test via Royston's normal-approximation algorithm.

    Valid for sample sizes 3..5000. The weights combine normal order
    statistic means with small-sample polynomial corrections; the p-value
    uses Royston's normalizing transformations of W.
    """
    x = np.sort(np.asarray(list(sample), dtype=float))
    n = x.size
    if not (3 <= n <= 5000):
        raise DataError(f"sample size must be in 3..5000, got {n}")
    if x[-1] - x[0] == 0.0:
        raise DataError("sample has zero range: W undefined")

    w_stat = _sw_statistic(x)
    p = _sw_pvalue(w_stat, n)
    return TestResult("Shapiro-Wilk", w_stat, p, SHAPIRO_NULL, df=None)


# Polynomial corrections for the two largest-order-statistic weights
# (coefficients in increasing powers of 1/sqrt(n)).
_SW_C1 = np.array([0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056])
_SW_C2 = np.array([0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633])


def _sw_statistic(x: np.ndarray) -> float:
    n = x.size
    nn2 = n // 2
    if n == 3:
        a = np.array([np.sqrt(0.5)])
    else:
        m = stats.norm.ppf((np.arange(1, nn2 + 1) - 0.375) / (n + 0.25))  # lower half, negative
        summ2 = 2.0 * float(np.dot(m, m))
        ssumm2 = np.sqrt(summ2)
        rsn = 1.0 / np.sqrt(n)
        a = np.empty(nn2)
        a1 = float(np.polyval(_SW_C1[::-1], rsn)) - m[0] / ssumm2
        if n > 5:
            a2 = float(np.polyval(_SW_C2[::-1], rsn)) - m[1] / ssumm2
            fac = np.sqrt((summ2 - 2.0 * m[0] ** 2 - 2.0 * m[1] ** 2)
                          / (1.0 - 2.0 * a1 ** 2 - 2.0 * a2 ** 2))
            a[0], a[1] = a1, a2
            a[2:] = -m[2:] / fac
        else:
            fac = np.sqrt((summ2 - 2.0 * m[0] ** 2) / (1.0 - 2.0 * a1 ** 2))
            a[0] = a1
            a[1:] = -m[1:] / fac
    # antisymmetric full weight vector: -a on the lower half, +a reversed on top
    weights = np.zeros(x.size)
    weights[:a.size] = -a
    weights[x.size - a.size:] = a[::-1]
    num = float(np.dot(weights, x)) ** 2
    den = float(np.sum((x - x.mean()) ** 2))
    return num / den


def _sw_pvalue(w: float, n: int) -> float:
    if n == 3:
        p = 6.0 / np.pi * (np.arcsin(np.sqrt(w)) - np.arcsin(np.sqrt(0.75)))
        return float(min(max(p, 0.0), 1.0))
    w1 = np.log1p(-w)
    if n <= 11:
        gamma = -2.273 + 0.459 * n
        if gamma <= w1:
            return 1e-99
        z_in = -np.log(gamma - w1)
        mu = 0.5440 - 0.39978 * n + 0.025054 * n ** 2 - 0.0006714 * n ** 3
        sigma = np.exp(1.3822 - 0.77857 * n + 0.062767 * n ** 2 - 0.0020322 * n ** 3)
    else:
        ln_n = np.log(n)
        z_in = w1
        mu = -1.5861 - 0.31082 * ln_n - 0.083751 * ln_n ** 2 + 0.0038915 * ln_n ** 3
        sigma = np.exp(-0.4803 - 0.082676 * ln_n + 0.0030302 * ln_n ** 2)
    return float(stats.norm.sf((z_in - mu) / sigma))
