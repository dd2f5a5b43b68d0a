"""Multi-step interval forecasts and fixed-parameter holdout evaluation.

Forecast uncertainty on the transformed scale follows the moving-average
representation of the model: the k-step-ahead variance is
sigma2 * (psi_0^2 + ... + psi_{k-1}^2). Point forecasts are back-transformed
without bias adjustment, so under a log transform they are median forecasts;
the mean forecast is available as an option.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .arima import ArimaFit, ArimaParams, ArimaOrder, _filter, _state_matrices, fingerprint
from .diagnostics import AcfResult, TestResult, acf, shapiro_wilk
from .errors import ConfigError, DataError
from .series import TimeSeries, box_cox, index_month, inv_box_cox_values, month_index


@dataclass(frozen=True)
class PsiWeights:
    """Leading coefficients psi_0..psi_{h-1} of the MA(infinity) form."""

    weights: tuple[float, ...]

    def __post_init__(self):
        if not self.weights or self.weights[0] != 1.0:
            raise ConfigError("psi_0 must be 1")


@dataclass(frozen=True)
class ForecastResult:
    """h-step point forecasts with interval bounds on the original scale.

    ``mean_transformed`` and ``var_transformed`` expose the conditional
    means and variances on the transformed scale that the bounds are built
    from.
    """

    origin: tuple[int, int]
    horizon: int
    level: float
    point: tuple[float, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    mean_transformed: tuple[float, ...]
    var_transformed: tuple[float, ...]

    def periods(self) -> list[tuple[int, int]]:
        base = month_index(*self.origin)
        return [index_month(base + k) for k in range(1, self.horizon + 1)]


@dataclass(frozen=True)
class EvaluationResult:
    """One-step-ahead holdout comparison with summary and error diagnostics.

    Errors are actual minus forecast on the count scale, at full precision.
    The diagnostics are None when the errors are too few or degenerate for
    the corresponding test.
    """

    periods: tuple[tuple[int, int], ...]
    actual: tuple[float, ...]
    forecast: tuple[float, ...]
    error: tuple[float, ...]
    mae: float
    rmse: float
    error_acf: AcfResult | None
    error_shapiro: TestResult | None


def psi_weights(params: ArimaParams, order: ArimaOrder, h: int) -> PsiWeights:
    """MA(infinity) weights from dividing the MA polynomial by the AR and
    differencing polynomials, truncated at ``h`` terms."""
    if h < 1:
        raise ConfigError("horizon must be positive")
    phi = np.asarray(params.phi, dtype=float)
    theta = np.asarray(params.theta, dtype=float)
    # generalized AR polynomial (1 - sum phi_i B^i) (1 - B)^d
    arpoly = np.concatenate([[1.0], -phi])
    for _ in range(order.d):
        arpoly = np.convolve(arpoly, [1.0, -1.0])
    phistar = -arpoly[1:]
    psi = np.zeros(h)
    psi[0] = 1.0
    for j in range(1, h):
        acc = theta[j - 1] if j - 1 < theta.size else 0.0
        m = min(j, phistar.size)
        if m:
            acc += float(np.dot(phistar[:m], psi[j - m:j][::-1]))
        psi[j] = acc
    return PsiWeights(tuple(float(v) for v in psi))


def _filtered_state(fitted: ArimaFit, history: TimeSeries):
    """Run the fixed-parameter filter over the transformed history.

    Returns the transformed values, the final predicted state with the
    transition matrix, the differenced-series mean, and the filter
    innovations/variances.
    """
    transformed = box_cox(history, fitted.lam)
    y = np.asarray(transformed.values, dtype=float)
    d = fitted.order.d
    if y.size <= d:
        raise DataError("history too short for the model's differencing order")
    w = np.diff(y, n=d) if d else y.copy()
    mu = fitted.params.mean
    phi = np.asarray(fitted.params.phi)
    theta = np.asarray(fitted.params.theta)
    v, F, a = _filter(w - mu, phi, theta)
    T, _ = _state_matrices(phi, theta)
    return y, a, T, mu, v, F


def forecast(fitted: ArimaFit, history: TimeSeries, h: int, level: float = 0.95,
             bias_adjust: bool = False, small_sample_sigma2: bool = False) -> ForecastResult:
    """Forecast ``h`` steps past the end of ``history`` with fixed parameters.

    ``history`` is on the original scale; the fit's transform is applied
    internally. ``bias_adjust`` back-transforms the conditional mean instead
    of the median. ``small_sample_sigma2`` widens intervals by the factor
    n/(n - k) on the variance (k = number of estimated coefficients), the
    degrees-of-freedom convention some reference implementations apply to
    the innovation variance.
    """
    if not (0.0 < level < 1.0):
        raise ConfigError(f"level must be in (0, 1), got {level}")
    if h < 1:
        raise ConfigError("horizon must be positive")
    y, a, T, mu, _, _ = _filtered_state(fitted, history)
    d = fitted.order.d

    # conditional means of future differenced values
    wf = np.empty(h)
    state = a
    for k in range(h):
        wf[k] = state[0] + mu
        state = T @ state
    # integrate back to the level of the transformed series
    seq = wf
    for j in range(d, 0, -1):
        seed = float(np.diff(y, n=j - 1)[-1])
        seq = seed + np.cumsum(seq)
    mean_t = seq

    psi = np.asarray(psi_weights(fitted.params, fitted.order, h).weights)
    sigma2 = fitted.params.sigma2
    if small_sample_sigma2:
        k_coef = fitted.order.n_coefficients + (1 if fitted.with_constant else 0)
        sigma2 = sigma2 * fitted.n_used / (fitted.n_used - k_coef)
    var_t = sigma2 * np.cumsum(psi * psi)
    z = float(stats.norm.ppf(0.5 + level / 2.0))
    half = z * np.sqrt(var_t)

    point = _back_transform(mean_t, fitted.lam, var_t if bias_adjust else None)
    lower = _back_transform(mean_t - half, fitted.lam, None)
    upper = _back_transform(mean_t + half, fitted.lam, None)
    return ForecastResult(
        origin=history.end, horizon=h, level=level,
        point=tuple(point), lower=tuple(lower), upper=tuple(upper),
        mean_transformed=tuple(float(v) for v in mean_t),
        var_transformed=tuple(float(v) for v in var_t),
    )


def _back_transform(values: np.ndarray, lam: float, fvar: np.ndarray | None) -> np.ndarray:
    out = inv_box_cox_values(np.asarray(values, dtype=float), lam)
    if fvar is not None:
        # mean adjustment for the power transform; log case: exp(m) (1 + v/2)
        out = out * (1.0 + fvar * (1.0 - lam) / (2.0 * np.power(out, 2.0 * lam)))
    return out


def one_step_eval(fitted: ArimaFit, train: TimeSeries,
                  validation: TimeSeries) -> EvaluationResult:
    """Evaluate fixed-parameter one-step-ahead forecasts over a holdout.

    The trained filter is re-run over the concatenated series without
    re-estimation; each validation point is predicted from all observations
    before it, back-transformed, and compared against the actual count.
    """
    if month_index(*validation.start) != month_index(*train.end) + 1:
        raise DataError("validation must start one month after the training series ends")
    if fitted.data_fingerprint != fingerprint(train):
        raise DataError("fit was not estimated on the supplied training series")
    merged = TimeSeries(train.start,
                        np.concatenate([train.values, validation.values]),
                        train.frequency)
    y, _, _, _, v, F = _filtered_state(fitted, merged)
    resid = v / np.sqrt(F)
    d = fitted.order.d
    n_train = len(train)
    m = len(validation)
    pred_t = np.array([y[n_train + j] - resid[n_train + j - d] for j in range(m)])
    fc = _back_transform(pred_t, fitted.lam, None)
    err = np.asarray(validation.values) - fc

    err_series = TimeSeries(validation.start, err, validation.frequency)
    error_acf = None
    error_shapiro = None
    if m >= 3 and np.ptp(err) > 0:
        error_acf = acf(err_series, min(10, m - 1))
        error_shapiro = shapiro_wilk(err)
    return EvaluationResult(
        periods=tuple(validation.periods()),
        actual=tuple(float(x) for x in validation.values),
        forecast=tuple(float(x) for x in fc),
        error=tuple(float(x) for x in err),
        mae=float(np.mean(np.abs(err))),
        rmse=float(np.sqrt(np.mean(err * err))),
        error_acf=error_acf,
        error_shapiro=error_shapiro,
    )
