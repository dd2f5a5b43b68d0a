"""Dickey-Fuller critical values for the constant-plus-trend regression.

Static numeric asset, versioned bit-exactly: empirical critical values of the
studentized unit-root statistic when the test regression includes an
intercept and a linear trend (Fuller's tabulation). Rows are finite sample
sizes of the differenced series; the last row is the asymptotic case.
Columns are the tail probabilities in ``DF_PROBS``.

P-values are obtained by interpolating first along the sample-size axis and
then along the probability axis, clamping outside the tabulated range.
"""
import numpy as np

DF_TABLE_VERSION = 1

# Tail probabilities (left tail of the distribution of the t-ratio).
DF_PROBS = np.array([0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99])

# Sample sizes of the differenced series; 1e5 stands in for the asymptote.
DF_SIZES = np.array([25.0, 50.0, 100.0, 250.0, 500.0, 100000.0])

# DF_CRIT[i, j]: critical value at sample size DF_SIZES[i], tail prob DF_PROBS[j].
DF_CRIT = np.array([
    [-4.38, -3.95, -3.60, -3.24, -1.14, -0.80, -0.50, -0.15],
    [-4.15, -3.80, -3.50, -3.18, -1.19, -0.87, -0.58, -0.24],
    [-4.04, -3.73, -3.45, -3.15, -1.22, -0.90, -0.62, -0.28],
    [-3.99, -3.69, -3.43, -3.13, -1.23, -0.92, -0.64, -0.31],
    [-3.98, -3.68, -3.42, -3.13, -1.24, -0.93, -0.65, -0.32],
    [-3.96, -3.66, -3.41, -3.12, -1.25, -0.94, -0.66, -0.33],
])

DF_CRIT.flags.writeable = False
DF_PROBS.flags.writeable = False
DF_SIZES.flags.writeable = False


def df_pvalue(stat: float, n_diff: int) -> tuple[float, bool]:
    """Interpolated left-tail p-value for the trend-case unit-root t-ratio.

    ``n_diff`` is the length of the differenced series entering the test
    regression. Returns ``(p, clamped)`` where ``clamped`` flags a statistic
    outside the tabulated range, in which case p is pinned to the nearest
    table boundary (0.01 or 0.99).
    """
    n = float(np.clip(n_diff, DF_SIZES[0], DF_SIZES[-1]))
    crit = np.array([np.interp(n, DF_SIZES, DF_CRIT[:, j]) for j in range(DF_CRIT.shape[1])])
    clamped = bool(stat < crit[0] or stat > crit[-1])
    p = float(np.interp(stat, crit, DF_PROBS))
    return p, clamped
