"""End-to-end pipeline: load, transform, difference, identify, select,
diagnose, evaluate, forecast, and render the combined report.

The report is a plain data object; rendering to text mirrors the tabular
layout of the reference analysis (counts as integers, coefficients to six
decimals, p-values to four), while the JSON rendering carries full precision
and is byte-deterministic for a fixed config and input.
"""
from __future__ import annotations

import json
import math
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from ._version import __version__
from .arima import ArimaFit, ArimaOrder, coef_test
from .diagnostics import AcfResult, TestResult, acf, adf_test, ljung_box, pacf, shapiro_wilk
from .errors import ConfigError, DataError, ToolkitError
from .forecasting import EvaluationResult, ForecastResult, forecast, one_step_eval
from .selection import CandidateSet, SelectionTrace, explicit_grid, select, suggest_candidates
from .series import (TimeSeries, box_cox, difference, format_period, load_csv,
                     inv_box_cox_values, split, write_csv)

FORMATS = ("text", "json", "plotdata")
ADF_ALPHA = 0.05
MAX_AUTO_D = 2
LJUNG_BOX_LAG = 10

PLOT_FILES = (
    "series_raw.csv",
    "series_transformed.csv",
    "series_differenced.csv",
    "acf_pacf.csv",
    "residuals_vs_time.csv",
    "residuals_vs_fitted.csv",
    "qq_residuals.csv",
    "qq_forecast_errors.csv",
    "forecast_fan.csv",
)


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for one pipeline run; the defaults reproduce the bundled
    fire-incidence analysis when pointed at the packaged dataset."""

    input: str | Path | TimeSeries
    lam: float | None = 0.0
    d: int | None = None                      # None: choose by unit-root testing
    grid: str | tuple = "auto"
    train_length: int | None = None           # None: everything minus the holdout
    validation_length: int = 12
    horizon: int = 12
    level: float = 0.95
    alpha: float = 0.05
    run_evaluation: bool = True
    acf_lags: int = 20
    output_dir: str | Path | None = None
    formats: tuple[str, ...] = ("text",)

    def validate(self) -> None:
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if not (0.0 < self.level < 1.0):
            raise ConfigError(f"level must be in (0, 1), got {self.level}")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.validation_length < 0:
            raise ConfigError("validation length must be non-negative")
        if self.d is not None and not (0 <= self.d <= MAX_AUTO_D):
            raise ConfigError(f"d must be in 0..{MAX_AUTO_D}")
        if self.acf_lags < 6:
            raise ConfigError("need at least 6 autocorrelation lags")
        for f in self.formats:
            if f not in FORMATS:
                raise ConfigError(f"unknown output format {f!r}; expected one of {FORMATS}")
        if self.grid != "auto" and not self.grid:
            raise ConfigError("explicit grid must not be empty")


@dataclass(frozen=True)
class Report:
    """Everything one pipeline run produced, ready for rendering."""

    version: str
    config_echo: dict
    series: TimeSeries
    train: TimeSeries
    validation: TimeSeries | None
    transformed: TimeSeries
    differenced: TimeSeries
    d: int
    stationarity: tuple[tuple[int, TestResult], ...]
    acf_diff: AcfResult
    pacf_diff: AcfResult
    candidates: CandidateSet
    trace: SelectionTrace
    fit: ArimaFit
    coef_rows: tuple[dict, ...]
    ljung_box: TestResult
    residual_shapiro: TestResult
    residual_acf: AcfResult
    fitted_counts: tuple[float, ...]
    evaluation: EvaluationResult | None
    forecast: ForecastResult

    def to_dict(self) -> dict:
        """JSON-ready view; schema version 1, full precision, stable keys."""
        ev = None
        if self.evaluation is not None:
            e = self.evaluation
            ev = {
                "rows": [
                    {"period": format_period(p), "actual": a, "forecast": f, "error": err}
                    for p, a, f, err in zip(e.periods, e.actual, e.forecast, e.error)
                ],
                "mae": e.mae,
                "rmse": e.rmse,
                "error_acf": _acf_dict(e.error_acf),
                "error_shapiro": _test_dict(e.error_shapiro),
            }
        fc = self.forecast
        return {
            "schema_version": 1,
            "toolkit_version": self.version,
            "config": self.config_echo,
            "data_summary": {
                "n": len(self.series),
                "start": format_period(self.series.start),
                "end": format_period(self.series.end),
                "min": float(self.series.values.min()),
                "max": float(self.series.values.max()),
                "mean": float(self.series.values.mean()),
                "train_length": len(self.train),
                "validation_length": 0 if self.validation is None else len(self.validation),
            },
            "transformation": {"lambda": self.config_echo["lam"]},
            "stationarity": [
                {"d": d, "test": _test_dict(t)} for d, t in self.stationarity
            ],
            "differencing": {"d": self.d},
            "acf": _acf_dict(self.acf_diff),
            "pacf": _acf_dict(self.pacf_diff),
            "candidates": {
                "source": self.candidates.source,
                "orders": [_order_dict(o) for o in self.candidates.orders],
            },
            "selection": {
                "alpha": self.trace.alpha,
                "entries": [
                    {"order": _order_dict(e.order), "aic": e.aic,
                     "status": e.status, "detail": e.detail}
                    for e in self.trace.entries
                ],
            },
            "model": {
                "order": _order_dict(self.fit.order),
                "coefficients": list(self.coef_rows),
                "sigma2": self.fit.params.sigma2,
                "loglik": self.fit.loglik,
                "aic": self.fit.aic,
                "n_used": self.fit.n_used,
            },
            "residual_diagnostics": {
                "ljung_box": _test_dict(self.ljung_box),
                "shapiro_wilk": _test_dict(self.residual_shapiro),
                "acf": _acf_dict(self.residual_acf),
            },
            "evaluation": ev,
            "forecast": {
                "origin": format_period(fc.origin),
                "horizon": fc.horizon,
                "level": fc.level,
                "rows": [
                    {"period": format_period(p), "point": pt, "lower": lo, "upper": hi}
                    for p, pt, lo, hi in zip(fc.periods(), fc.point, fc.lower, fc.upper)
                ],
            },
        }


def _acf_dict(res: AcfResult | None) -> dict | None:
    if res is None:
        return None
    return {"kind": res.kind, "lags": list(res.lags),
            "coefficients": list(res.coefficients), "n": res.n, "band": res.band}


def _test_dict(t: TestResult | None) -> dict | None:
    if t is None:
        return None
    return {"name": t.name, "statistic": t.statistic, "df": t.df,
            "p_value": t.p_value, "p_clamped": t.p_clamped,
            "null_hypothesis": t.null_hypothesis}


def _order_dict(o: ArimaOrder) -> dict:
    return {"p": o.p, "d": o.d, "q": o.q}


@contextmanager
def _stage(name: str, hint: str):
    try:
        yield
    except ToolkitError as exc:
        raise type(exc)(f"[{name}] {exc} (hint: {hint})") from exc


def _config_echo(config: PipelineConfig, series: TimeSeries, train_length: int) -> dict:
    grid = config.grid
    if grid != "auto":
        grid = [_order_dict(o if isinstance(o, ArimaOrder) else ArimaOrder(*o)) for o in grid]
    return {
        "input": str(config.input) if not isinstance(config.input, TimeSeries)
        else f"<series {format_period(series.start)}..{format_period(series.end)}>",
        "lam": config.lam,
        "d": config.d,
        "grid": grid,
        "train_length": train_length,
        "validation_length": config.validation_length,
        "horizon": config.horizon,
        "level": config.level,
        "alpha": config.alpha,
        "run_evaluation": config.run_evaluation,
        "acf_lags": config.acf_lags,
        "output_dir": None if config.output_dir is None else str(config.output_dir),
        "formats": list(config.formats),
    }


def run_pipeline(config: PipelineConfig) -> Report:
    """Execute every stage and return the assembled report.

    Stage errors propagate with the stage name and a remediation hint; no
    partial report is ever produced.
    """
    config.validate()

    with _stage("load", "check the CSV against the documented date,value format"):
        series = config.input if isinstance(config.input, TimeSeries) else load_csv(config.input)

    n = len(series)
    if config.validation_length >= n:
        raise ConfigError(f"validation length {config.validation_length} "
                          f"must be smaller than the series length {n}")
    train_length = config.train_length
    if train_length is None:
        train_length = n - config.validation_length
    if train_length + config.validation_length != n:
        raise ConfigError(f"train ({train_length}) plus validation "
                          f"({config.validation_length}) must cover the series ({n})")

    with _stage("split", "adjust --train/--validation to the series length"):
        if config.validation_length > 0:
            train, validation = split(series, train_length)
        else:
            train, validation = series, None

    with _stage("transform", "the power transform needs strictly positive values"):
        lam = config.lam
        transformed = train if lam is None else box_cox(train, lam)

    with _stage("differencing", "series too short for unit-root testing"):
        stationarity: list[tuple[int, TestResult]] = []
        if config.grid != "auto":
            candidates = explicit_grid(config.grid)
            d = candidates.d
            stationarity.append((d, adf_test(difference(transformed, d))))
        elif config.d is not None:
            d = config.d
            stationarity.append((d, adf_test(difference(transformed, d))))
            candidates = None
        else:
            d = 0
            while True:
                test = adf_test(difference(transformed, d))
                stationarity.append((d, test))
                if test.p_value < ADF_ALPHA or d == MAX_AUTO_D:
                    break
                d += 1
            candidates = None
        differenced = difference(transformed, d)

    with _stage("identification", "increase the series length or lower acf_lags"):
        max_lag = min(config.acf_lags, len(differenced) - 1)
        acf_diff = acf(differenced, max_lag)
        pacf_diff = pacf(differenced, max_lag)
        if candidates is None:
            candidates = suggest_candidates(acf_diff, pacf_diff, d)

    with _stage("selection", "try an explicit --grid or a larger alpha"):
        fit, trace = select(train, candidates, 0.0 if lam is None else lam, config.alpha)
        coef_rows = tuple(coef_test(fit)) if fit.cov is not None else ()

    with _stage("diagnostics", "residual diagnostics need a longer series"):
        lb = ljung_box(fit.residuals, LJUNG_BOX_LAG, fitdf=0)
        sw = shapiro_wilk(fit.residuals.values)
        racf = acf(fit.residuals, min(max_lag, len(fit.residuals) - 1))
        fitted_counts = _in_sample_fitted(fit, transformed)

    evaluation = None
    if validation is not None and config.run_evaluation:
        with _stage("evaluation", "validation must directly follow the training window"):
            evaluation = one_step_eval(fit, train, validation)

    with _stage("forecast", "check horizon and confidence level"):
        fcast = forecast(fit, series, config.horizon, config.level)

    return Report(
        version=__version__,
        config_echo=_config_echo(config, series, train_length),
        series=series, train=train, validation=validation,
        transformed=transformed, differenced=differenced, d=d,
        stationarity=tuple(stationarity),
        acf_diff=acf_diff, pacf_diff=pacf_diff,
        candidates=candidates, trace=trace, fit=fit, coef_rows=coef_rows,
        ljung_box=lb, residual_shapiro=sw, residual_acf=racf,
        fitted_counts=fitted_counts,
        evaluation=evaluation, forecast=fcast,
    )


def _in_sample_fitted(fit: ArimaFit, transformed: TimeSeries) -> tuple[float, ...]:
    """One-step in-sample predictions on the original scale, one per residual."""
    y = np.asarray(transformed.values)
    d = fit.order.d
    resid = np.asarray(fit.residuals.values)
    pred = y[d:] - resid
    return tuple(float(x) for x in inv_box_cox_values(pred, fit.lam))


def round_half_away(x: float) -> int:
    """Round to the nearest integer, halves away from zero."""
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def round_up(x: float) -> int:
    """Round a count up to the next integer (holdout-table convention)."""
    return int(math.ceil(x))


def render(report: Report, fmt: str = "text") -> str:
    """Render the report as human-readable text or as versioned JSON."""
    if fmt == "json":
        return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    if fmt != "text":
        raise ConfigError(f"unknown render format {fmt!r}; expected 'text' or 'json'")
    return _render_text(report)


def _table(header: list[str], rows: list[list[str]], indent: str = "  ") -> list[str]:
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i])
              for i in range(len(header))]
    out = [indent + "  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    for r in rows:
        out.append(indent + "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return out


def _fmt_p(p: float) -> str:
    return f"{p:.4f}"


def _render_text(report: Report) -> str:
    lines: list[str] = []
    add = lines.append
    ds = report.to_dict()["data_summary"]

    add(f"Box-Jenkins pipeline report (toolkit {report.version})")
    add("")
    add("Data")
    add(f"  {ds['n']} monthly observations, {ds['start']} .. {ds['end']}")
    add(f"  min {ds['min']:g}  max {ds['max']:g}  mean {ds['mean']:.4f}")
    add(f"  training {ds['train_length']}  validation {ds['validation_length']}")
    add("")

    lam = report.config_echo["lam"]
    add("Transformation")
    add("  none" if lam is None else f"  power transform, lambda = {lam:g}"
        + (" (natural log)" if lam == 0 else ""))
    add("")

    add("Stationarity (unit-root tests, constant + trend)")
    rows = []
    for d, t in report.stationarity:
        p = _fmt_p(t.p_value) + ("*" if t.p_clamped else "")
        rows.append([str(d), f"{t.statistic:.4f}", p])
    lines += _table(["d", "statistic", "p-value"], rows)
    add(f"  chosen differencing order: d = {report.d}")
    if any(t.p_clamped for _, t in report.stationarity):
        add("  (* p-value clamped at the tabulated boundary)")
    add("")

    add(f"ACF / PACF of the differenced series (band +/-{report.acf_diff.band:.4f})")
    rows = [[str(lag), f"{a:+.4f}", f"{p:+.4f}"]
            for lag, a, p in zip(report.acf_diff.lags, report.acf_diff.coefficients,
                                 report.pacf_diff.coefficients)]
    lines += _table(["lag", "acf", "pacf"], rows)
    add("")

    add(f"Tentative models ({report.candidates.source}), ranked by AIC")
    rows = []
    for e in report.trace.entries:
        aic = "-" if e.aic is None else f"{e.aic:.2f}"
        detail = f"  ({e.detail})" if e.detail else ""
        rows.append([f"ARIMA {e.order}", aic, e.status + detail])
    lines += _table(["model", "AIC", "status"], rows)
    add("")

    add(f"Coefficient estimates of ARIMA {report.fit.order}")
    if report.coef_rows:
        rows = [[r["name"], f"{r['estimate']:.6f}", f"{r['std_error']:.6f}",
                 f"{r['z']:.4f}", _fmt_p(r["p"])] for r in report.coef_rows]
        lines += _table(["term", "estimate", "std. error", "z-value", "p-value"], rows)
    else:
        add("  (no estimated coefficients)")
    add(f"  sigma2 = {report.fit.params.sigma2:.6f}   log-likelihood = "
        f"{report.fit.loglik:.4f}   AIC = {report.fit.aic:.2f}")
    add("")

    add("Residual diagnostics")
    lb = report.ljung_box
    add(f"  Ljung-Box: Q = {lb.statistic:.4f}  df = {lb.df}  p-value = {_fmt_p(lb.p_value)}")
    swt = report.residual_shapiro
    add(f"  Shapiro-Wilk: W = {swt.statistic:.4f}  p-value = {_fmt_p(swt.p_value)}")
    sig = [lag for lag, s in zip(report.residual_acf.lags, report.residual_acf.significant())
           if s]
    add("  residual ACF beyond the band at lags: "
        + (", ".join(map(str, sig)) if sig else "none"))
    add("")

    if report.evaluation is not None:
        ev = report.evaluation
        add("One-step-ahead holdout evaluation")
        rows = []
        for p, a, f in zip(ev.periods, ev.actual, ev.forecast):
            fc = round_up(f)
            rows.append([format_period(p, "name"), str(round_half_away(a)),
                         str(fc), str(round_half_away(a) - fc)])
        lines += _table(["period", "actual", "forecast", "error"], rows)
        add(f"  MAE = {ev.mae:.4f}   RMSE = {ev.rmse:.4f}")
        if ev.error_shapiro is not None:
            add(f"  forecast-error Shapiro-Wilk: W = {ev.error_shapiro.statistic:.4f}"
                f"  p-value = {_fmt_p(ev.error_shapiro.p_value)}")
        if ev.error_acf is not None:
            sig = [lag for lag, s in zip(ev.error_acf.lags, ev.error_acf.significant()) if s]
            add("  forecast-error ACF beyond the band at lags: "
                + (", ".join(map(str, sig)) if sig else "none"))
        add("")

    fc = report.forecast
    add(f"Forecasts with {fc.level:.0%} intervals")
    rows = [[format_period(p, "name"), str(round_half_away(pt)),
             str(round_half_away(lo)), str(round_half_away(hi))]
            for p, pt, lo, hi in zip(fc.periods(), fc.point, fc.lower, fc.upper)]
    lines += _table(["period", "forecast", "lower", "upper"], rows)
    add("")
    return "\n".join(lines)


def emit_plot_data(report: Report, directory: str | Path) -> list[Path]:
    """Write the plottable CSV files behind the report's figures.

    Returns the paths written; the manifest is ``PLOT_FILES`` (the forecast
    error file is skipped when the run had no holdout evaluation).
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        probe = directory / ".write-probe"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        raise DataError(f"plot-data directory is not writable: {directory}") from exc

    written: list[Path] = []

    def emit(name: str, header: list[str], rows: list[list]) -> None:
        path = directory / name
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_csv_cell(c) for c in row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        written.append(path)

    emit("series_raw.csv", ["date", "value"],
         [[format_period(p), v] for p, v in zip(report.series.periods(),
                                                report.series.values)])
    emit("series_transformed.csv", ["date", "value"],
         [[format_period(p), v] for p, v in zip(report.transformed.periods(),
                                                report.transformed.values)])
    emit("series_differenced.csv", ["date", "value"],
         [[format_period(p), v] for p, v in zip(report.differenced.periods(),
                                                report.differenced.values)])
    emit("acf_pacf.csv", ["lag", "acf", "pacf", "band"],
         [[lag, a, p, report.acf_diff.band]
          for lag, a, p in zip(report.acf_diff.lags, report.acf_diff.coefficients,
                               report.pacf_diff.coefficients)])
    resid = report.fit.residuals
    emit("residuals_vs_time.csv", ["date", "residual"],
         [[format_period(p), v] for p, v in zip(resid.periods(), resid.values)])
    emit("residuals_vs_fitted.csv", ["fitted", "residual"],
         [[f, v] for f, v in zip(report.fitted_counts, resid.values)])
    emit("qq_residuals.csv", ["theoretical_quantile", "sorted_residual"],
         _qq_rows(np.asarray(resid.values)))
    if report.evaluation is not None:
        emit("qq_forecast_errors.csv", ["theoretical_quantile", "sorted_error"],
             _qq_rows(np.asarray(report.evaluation.error)))
    fc = report.forecast
    emit("forecast_fan.csv", ["date", "point", "lower", "upper"],
         [[format_period(p), pt, lo, hi]
          for p, pt, lo, hi in zip(fc.periods(), fc.point, fc.lower, fc.upper)])
    return written


def _qq_rows(sample: np.ndarray) -> list[list]:
    n = sample.size
    a = 0.375 if n <= 10 else 0.5
    probs = (np.arange(1, n + 1) - a) / (n + 1.0 - 2.0 * a)
    theo = stats.norm.ppf(probs)
    return [[t, s] for t, s in zip(theo, np.sort(sample))]


def _csv_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_outputs(report: Report, config: PipelineConfig) -> list[Path]:
    """Materialize the requested formats under the configured output dir."""
    if config.output_dir is None:
        raise ConfigError("no output directory configured")
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "text" in config.formats:
        path = out / "report.txt"
        path.write_text(render(report, "text"), encoding="utf-8", newline="\n")
        written.append(path)
    if "json" in config.formats:
        path = out / "report.json"
        path.write_text(render(report, "json"), encoding="utf-8", newline="\n")
        written.append(path)
    if "plotdata" in config.formats:
        written.extend(emit_plot_data(report, out / "plotdata"))
    return written
