"""ARIMA(p,d,q) estimation by exact Gaussian maximum likelihood.

The model for the d-th differenced series w_t is

    w_t = delta + phi_1 w_{t-1} + ... + phi_p w_{t-p}
              + eps_t + theta_1 eps_{t-1} + ... + theta_q eps_{t-q}

with iid N(0, sigma2) innovations. Note the plus sign on the moving-average
coefficients: a fitted theta_1 of -0.85 means the lag polynomial
1 - 0.85 B. The likelihood is evaluated exactly with a state-space
innovations filter started from the stationary state covariance;
optimization is derivative-free (Nelder-Mead) from conditional
sum-of-squares starting values, with sigma2 profiled out analytically.
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import optimize, stats

from .errors import ConfigError, DataError, NumericError
from .series import TimeSeries, box_cox, difference, index_month, month_index

MAX_ORDER = 10
_BIG = 1e300


@dataclass(frozen=True)
class ArimaOrder:
    """Model order (p, d, q): AR terms, differences, MA terms."""

    p: int
    d: int
    q: int

    def __post_init__(self):
        for name in ("p", "d", "q"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise ConfigError(f"order component {name} must be a non-negative integer")
        if self.p > MAX_ORDER or self.q > MAX_ORDER:
            raise ConfigError(f"p and q are limited to {MAX_ORDER}")

    @property
    def n_coefficients(self) -> int:
        return self.p + self.q

    def __str__(self) -> str:
        return f"({self.p},{self.d},{self.q})"


def _poly_min_root(coefs: np.ndarray) -> float:
    """Smallest root magnitude of 1 + c_1 z + ... + c_k z^k (inf if degree 0)."""
    c = np.trim_zeros(np.asarray(coefs, dtype=float), "b")
    if c.size == 0:
        return np.inf
    roots = np.roots(np.concatenate([[1.0], c])[::-1])
    return float(np.min(np.abs(roots))) if roots.size else np.inf


def ar_stationary(phi: Sequence[float], tol: float = 1e-8) -> bool:
    """True when 1 - sum(phi_i z^i) has all roots strictly outside the unit circle."""
    return _poly_min_root(-np.asarray(list(phi), dtype=float)) > 1.0 + tol


def ma_invertible(theta: Sequence[float], tol: float = 1e-8) -> bool:
    """True when 1 + sum(theta_j z^j) has no root strictly inside the unit circle."""
    return _poly_min_root(np.asarray(list(theta), dtype=float)) > 1.0 - tol


@dataclass(frozen=True)
class ArimaParams:
    """Fitted or hypothesized coefficients of an ARIMA model.

    Construction enforces a stationary AR polynomial and a positive
    innovation variance; a moving-average root on the unit circle is
    tolerated with a warning (the model is then on the invertibility
    boundary).
    """

    phi: tuple[float, ...]
    theta: tuple[float, ...]
    delta: float
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(float(v) for v in self.phi))
        object.__setattr__(self, "theta", tuple(float(v) for v in self.theta))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        if not np.all(np.isfinite(self.phi + self.theta + (self.delta, self.sigma2))):
            raise ConfigError("parameters must be finite")
        if self.sigma2 <= 0:
            raise ConfigError(f"sigma2 must be positive, got {self.sigma2}")
        if not ar_stationary(self.phi):
            raise ConfigError(f"AR polynomial is not stationary: phi={self.phi}")
        min_root = _poly_min_root(np.asarray(self.theta))
        if min_root < 1.0 - 1e-8:
            raise ConfigError(f"MA polynomial is not invertible: theta={self.theta}")
        if min_root < 1.0 + 1e-8 and np.isfinite(min_root):
            warnings.warn("MA polynomial has a root on the unit circle; "
                          "the model is on the invertibility boundary", stacklevel=2)

    @property
    def mean(self) -> float:
        """Process mean of the differenced series, delta / (1 - sum(phi))."""
        return self.delta / (1.0 - sum(self.phi)) if self.delta != 0.0 else 0.0


@dataclass(frozen=True)
class ArimaFit:
    """A fitted model: parameters plus likelihood, AIC, covariance, residuals.

    ``cov`` is the estimated covariance of the stacked coefficient vector
    (phi, theta, and the constant when one is estimated), or None when the
    numerical Hessian could not be inverted. ``residuals`` are the filter's
    standardized one-step innovations on the transformed scale, one per
    differenced observation.
    """

    order: ArimaOrder
    params: ArimaParams
    lam: float
    loglik: float
    aic: float
    cov: np.ndarray | None
    residuals: TimeSeries | None
    n_used: int
    with_constant: bool
    data_fingerprint: str

    @property
    def coef_names(self) -> tuple[str, ...]:
        names = [f"ar{i + 1}" for i in range(self.order.p)]
        names += [f"ma{j + 1}" for j in range(self.order.q)]
        if self.with_constant:
            names.append("constant")
        return tuple(names)

    @property
    def coefficients(self) -> np.ndarray:
        vec = list(self.params.phi) + list(self.params.theta)
        if self.with_constant:
            vec.append(self.params.delta)
        return np.asarray(vec)


def _state_matrices(phi: np.ndarray, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Transition matrix and innovation loading of the ARMA state form.

    State dimension r = max(p, q+1); the observed value is the first state
    component.
    """
    p, q = phi.size, theta.size
    r = max(p, q + 1)
    T = np.zeros((r, r))
    T[:p, 0] = phi
    idx = np.arange(r - 1)
    T[idx, idx + 1] = 1.0
    R = np.zeros(r)
    R[0] = 1.0
    R[1:q + 1] = theta
    return T, R


def _stationary_state_cov(T: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Solve P = T P T' + R R' (unit innovation variance)."""
    r = T.shape[0]
    A = np.eye(r * r) - np.kron(T, T)
    try:
        vec = np.linalg.solve(A, np.outer(R, R).ravel())
    except np.linalg.LinAlgError as exc:
        raise NumericError("stationary state covariance is singular") from exc
    P = vec.reshape(r, r)
    return 0.5 * (P + P.T)


def _filter(w: np.ndarray, phi: np.ndarray,
            theta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Innovations filter with unit innovation variance.

    Returns the one-step innovations v_t, their scaled prediction variances
    F_t (multiply by sigma2 for actual variances), and the final one-step
    state prediction, i.e. the state forecast for the period after the last
    observation.
    """
    T, R = _state_matrices(phi, theta)
    RR = np.outer(R, R)
    P = _stationary_state_cov(T, R)
    a = np.zeros(T.shape[0])
    n = w.size
    v = np.empty(n)
    F = np.empty(n)
    for t in range(n):
        f = P[0, 0]
        if not np.isfinite(f) or f <= 0:
            raise NumericError(f"prediction variance diverged at step {t}")
        v[t] = w[t] - a[0]
        F[t] = f
        gain = P[:, 0] / f
        a = T @ (a + gain * v[t])
        P = T @ (P - np.outer(gain, P[0, :])) @ T.T + RR
        P = 0.5 * (P + P.T)
    return v, F, a


def _prepare_w(series: TimeSeries, order: ArimaOrder) -> np.ndarray:
    if len(series) <= order.d:
        raise DataError("series too short for the requested differencing")
    return np.asarray(difference(series, order.d).values, dtype=float)


def exact_loglik(params: ArimaParams, order: ArimaOrder, series: TimeSeries) -> float:
    """Exact Gaussian log-likelihood on the transformed scale.

    The series is differenced ``order.d`` times and the ARMA likelihood of
    the result is evaluated by the innovations filter with the stationary
    initial state covariance. sigma2 enters explicitly; nothing is profiled.
    """
    _check_shapes(params, order)
    w = _prepare_w(series, order) - params.mean
    v, F, _ = _filter(w, np.asarray(params.phi), np.asarray(params.theta))
    n = w.size
    return float(-0.5 * (n * np.log(2.0 * np.pi) + n * np.log(params.sigma2)
                         + np.sum(np.log(F)) + np.sum(v * v / F) / params.sigma2))


def css_objective(params: ArimaParams, order: ArimaOrder, series: TimeSeries) -> float:
    """Conditional sum of squared one-step errors.

    Conditions on the first p differenced observations and zero pre-sample
    errors; used to produce starting values for the likelihood optimizer.
    """
    _check_shapes(params, order)
    w = _prepare_w(series, order) - params.mean
    return _css(w, np.asarray(params.phi), np.asarray(params.theta))


def _check_shapes(params: ArimaParams, order: ArimaOrder) -> None:
    if len(params.phi) != order.p or len(params.theta) != order.q:
        raise ConfigError(f"parameter shapes {len(params.phi)}/{len(params.theta)} "
                          f"do not match order {order}")


def _css(w: np.ndarray, phi: np.ndarray, theta: np.ndarray) -> float:
    p, q = phi.size, theta.size
    n = w.size
    e = np.zeros(n)
    ssq = 0.0
    for t in range(p, n):
        acc = w[t]
        for i in range(p):
            acc -= phi[i] * w[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= 0:
                acc -= theta[j] * e[t - 1 - j]
        e[t] = acc
        ssq += acc * acc
    return float(ssq)


def _unpack(coef: np.ndarray, p: int, q: int, with_constant: bool):
    phi = coef[:p]
    theta = coef[p:p + q]
    delta = coef[p + q] if with_constant else 0.0
    return phi, theta, delta


def _coef_valid(phi: np.ndarray, theta: np.ndarray) -> bool:
    return (np.all(np.isfinite(phi)) and np.all(np.isfinite(theta))
            and ar_stationary(phi) and ma_invertible(theta))


def _css_value(coef: np.ndarray, p: int, q: int, w: np.ndarray, with_constant: bool) -> float:
    phi, theta, delta = _unpack(coef, p, q, with_constant)
    if not _coef_valid(phi, theta):
        return _BIG
    mu = delta / (1.0 - phi.sum()) if with_constant else 0.0
    return _css(w - mu, phi, theta)


def _profile_negloglik(coef: np.ndarray, p: int, q: int, w: np.ndarray,
                       with_constant: bool) -> float:
    """Negative log-likelihood with sigma2 at its analytic optimum.

    Up to the constant n/2 (1 + log 2pi), equals
    0.5 (n log(ssq/n) + sum log F_t). Returns a large finite penalty outside
    the stationarity/invertibility region so the simplex can recover.
    """
    phi, theta, delta = _unpack(coef, p, q, with_constant)
    if not _coef_valid(phi, theta):
        return _BIG
    mu = delta / (1.0 - phi.sum()) if with_constant else 0.0
    try:
        v, F, _ = _filter(w - mu, phi, theta)
    except NumericError:
        return _BIG
    ssq = float(np.sum(v * v / F))
    if not np.isfinite(ssq) or ssq <= 0:
        return _BIG
    n = w.size
    return 0.5 * (n * np.log(ssq / n) + float(np.sum(np.log(F))))


_NM_OPTIONS = dict(xatol=1e-8, fatol=1e-10, maxfev=5000)


def _minimize(fun, x0: np.ndarray, args) -> optimize.OptimizeResult:
    return optimize.minimize(fun, x0, args=args, method="Nelder-Mead", options=_NM_OPTIONS)


def fingerprint(series: TimeSeries) -> str:
    """Stable identifier of a series: SHA-256 over start period and values."""
    payload = f"{series.start[0]:04d}-{series.start[1]:02d}:" + ",".join(
        repr(float(v)) for v in series.values)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def fit(series: TimeSeries, order: ArimaOrder, lam: float = 0.0,
        with_constant: bool | None = None) -> ArimaFit:
    """Estimate an ARIMA model on an original-scale series.

    The series is power-transformed with ``lam``, differenced ``order.d``
    times, and the ARMA coefficients are estimated by maximizing the exact
    likelihood (Nelder-Mead started from conditional-least-squares values,
    with a zero start as a fallback; the better optimum wins). A constant
    term is estimated only for d = 0 models; pass ``with_constant=False`` to
    drop it. The coefficient covariance comes from the inverted
    central-difference Hessian of the profile negative log-likelihood.
    """
    p, d, q = order.p, order.d, order.q
    if p + d + q < 1:
        raise ConfigError("order (0,0,0) has nothing to fit")
    if with_constant is None:
        with_constant = (d == 0)
    elif with_constant and d > 0:
        raise ConfigError("a constant term is only supported for d = 0")
    if len(series) - d <= p + q + 5:
        raise DataError(f"need more than {p + q + 5 + d} observations to fit {order}")

    transformed = box_cox(series, lam)
    w = np.asarray(difference(transformed, d).values, dtype=float)
    n = w.size
    k = p + q + (1 if with_constant else 0)

    if k == 0:
        coef = np.empty(0)
    else:
        x0 = np.zeros(k)
        if with_constant:
            x0[p + q] = float(w.mean())
        css_fit = _minimize(_css_value, x0, (p, q, w, with_constant))
        candidates = [css_fit.x, x0]
        results = [_minimize(_profile_negloglik, start, (p, q, w, with_constant))
                   for start in candidates]
        finals = [r.fun for r in results]
        if not np.isfinite(min(finals)) or min(finals) >= _BIG:
            raise NumericError(f"likelihood optimization failed for order {order}")
        best = results[int(np.argmin(finals))]
        if best.fun >= _BIG or not np.all(np.isfinite(best.x)):
            raise NumericError(f"likelihood optimization failed for order {order}")
        coef = best.x

    phi, theta, delta = _unpack(coef, p, q, with_constant)
    if not _coef_valid(phi, theta):
        raise NumericError(f"optimum for order {order} violates stationarity/invertibility")
    mu = delta / (1.0 - phi.sum()) if with_constant else 0.0
    v, F, _ = _filter(w - mu, phi, theta)
    sigma2 = float(np.sum(v * v / F)) / n
    loglik = float(-0.5 * (n * np.log(2.0 * np.pi) + n * np.log(sigma2)
                           + np.sum(np.log(F)) + n))
    aic = -2.0 * loglik + 2.0 * (k + 1)

    cov = _hessian_cov(coef, p, q, w, with_constant) if k > 0 else np.empty((0, 0))

    params = ArimaParams(tuple(phi), tuple(theta), float(delta), sigma2)
    resid_start = index_month(month_index(*series.start) + d)
    residuals = TimeSeries(resid_start, v / np.sqrt(F), series.frequency)
    return ArimaFit(order=order, params=params, lam=lam, loglik=loglik, aic=aic,
                    cov=cov, residuals=residuals, n_used=n,
                    with_constant=with_constant, data_fingerprint=fingerprint(series))


def _hessian_cov(coef: np.ndarray, p: int, q: int, w: np.ndarray,
                 with_constant: bool) -> np.ndarray | None:
    """Inverse central-difference Hessian of the profile negative loglik."""
    k = coef.size
    h = 1e-4 * np.maximum(1.0, np.abs(coef))
    H = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = h[i]
            ej[j] = h[j]
            fpp = _profile_negloglik(coef + ei + ej, p, q, w, with_constant)
            fpm = _profile_negloglik(coef + ei - ej, p, q, w, with_constant)
            fmp = _profile_negloglik(coef - ei + ej, p, q, w, with_constant)
            fmm = _profile_negloglik(coef - ei - ej, p, q, w, with_constant)
            if max(fpp, fpm, fmp, fmm) >= _BIG:
                return None
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j])
    try:
        cov = np.linalg.inv(H)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(cov)) or np.any(np.diag(cov) <= 0):
        return None
    return 0.5 * (cov + cov.T)


def coef_test(fitted: ArimaFit) -> list[dict]:
    """Coefficient table: estimate, standard error, z-value, two-sided p.

    Requires the fit to carry an invertible-Hessian covariance.
    """
    if fitted.cov is None:
        raise NumericError("coefficient covariance unavailable (Hessian not invertible)")
    rows = []
    se = np.sqrt(np.diag(fitted.cov)) if fitted.cov.size else np.empty(0)
    for name, est, s in zip(fitted.coef_names, fitted.coefficients, se):
        z = float(est / s)
        pv = 2.0 * float(stats.norm.sf(abs(z)))
        rows.append({"name": name, "estimate": float(est), "std_error": float(s),
                     "z": z, "p": pv})
    return rows


FIT_SCHEMA_VERSION = 1


def fit_to_dict(fitted: ArimaFit) -> dict:
    """JSON-ready form of a fit (documented persistence schema)."""
    return {
        "schema_version": FIT_SCHEMA_VERSION,
        "order": {"p": fitted.order.p, "d": fitted.order.d, "q": fitted.order.q},
        "lambda": fitted.lam,
        "coefficients": {
            "phi": list(fitted.params.phi),
            "theta": list(fitted.params.theta),
            "delta": fitted.params.delta,
        },
        "with_constant": fitted.with_constant,
        "sigma2": fitted.params.sigma2,
        "loglik": fitted.loglik,
        "aic": fitted.aic,
        "n_used": fitted.n_used,
        "covariance": None if fitted.cov is None else [float(x) for x in fitted.cov.ravel()],
        "data_fingerprint": fitted.data_fingerprint,
    }


def fit_from_dict(payload: dict, series: TimeSeries | None = None) -> ArimaFit:
    """Rebuild a fit from its persisted form.

    When the original series is supplied, residuals are recomputed by
    re-running the filter; otherwise a fit suitable for forecasting is
    returned with a single placeholder residual.
    """
    if payload.get("schema_version") != FIT_SCHEMA_VERSION:
        raise DataError(f"unsupported fit schema version {payload.get('schema_version')}")
    order = ArimaOrder(**payload["order"])
    coefs = payload["coefficients"]
    params = ArimaParams(tuple(coefs["phi"]), tuple(coefs["theta"]),
                         float(coefs["delta"]), float(payload["sigma2"]))
    k = order.n_coefficients + (1 if payload["with_constant"] else 0)
    cov = payload["covariance"]
    cov_arr = None if cov is None else np.asarray(cov, dtype=float).reshape(k, k)
    if series is not None:
        if fingerprint(series) != payload["data_fingerprint"]:
            raise DataError("series does not match the fit's data fingerprint")
        transformed = box_cox(series, float(payload["lambda"]))
        w = np.asarray(difference(transformed, order.d).values, dtype=float)
        v, F, _ = _filter(w - params.mean, np.asarray(params.phi), np.asarray(params.theta))
        resid_start = index_month(month_index(*series.start) + order.d)
        residuals = TimeSeries(resid_start, v / np.sqrt(F), series.frequency)
    else:
        residuals = None
    return ArimaFit(order=order, params=params, lam=float(payload["lambda"]),
                    loglik=float(payload["loglik"]), aic=float(payload["aic"]),
                    cov=cov_arr, residuals=residuals, n_used=int(payload["n_used"]),
                    with_constant=bool(payload["with_constant"]),
                    data_fingerprint=payload["data_fingerprint"])


def save_fit(fitted: ArimaFit, path: str | Path) -> None:
    Path(path).write_text(json.dumps(fit_to_dict(fitted), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_fit(path: str | Path, series: TimeSeries | None = None) -> ArimaFit:
    return fit_from_dict(json.loads(Path(path).read_text(encoding="utf-8")), series)
