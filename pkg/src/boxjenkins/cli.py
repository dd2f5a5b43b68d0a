"""Command-line interface.

Verbs map onto the pipeline stages: ``identify`` (transform, difference,
read the correlograms), ``fit`` (estimate one order), ``diagnose`` (residual
checks), ``evaluate`` (one-step holdout), ``forecast`` (interval forecasts),
and ``run`` (the full pipeline with report output).

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from ._version import __version__
from .arima import ArimaOrder, coef_test, fit, fit_to_dict
from .diagnostics import acf, adf_test, ljung_box, pacf, shapiro_wilk
from .errors import ConfigError, DataError, NumericError, ToolkitError
from .forecasting import forecast, one_step_eval
from .pipeline import (PipelineConfig, render, round_half_away, round_up,
                       run_pipeline, write_outputs, _acf_dict, _test_dict)
from .selection import explicit_grid, suggest_candidates
from .series import box_cox, difference, format_period, load_csv, split


def _parse_order(text: str) -> ArimaOrder:
    try:
        p, d, q = (int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"--order expects 'p,d,q', got {text!r}") from None
    return ArimaOrder(p, d, q)


def _parse_grid(text: str):
    if text == "auto":
        return "auto"
    return tuple(_parse_order(chunk) for chunk in text.split(";") if chunk)


def _parse_d(text: str) -> int | None:
    if text == "auto":
        return None
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"--d expects an integer or 'auto', got {text!r}") from None


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="input CSV (date,value)")
    parser.add_argument("--lambda", dest="lam", type=float, default=0.0,
                        help="power-transform parameter (0 = natural log)")
    parser.add_argument("--json", action="store_true",
                        help="print machine-readable JSON instead of text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boxjenkins",
        description="Box-Jenkins ARIMA toolkit for monthly count series")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identify", help="transform, difference, and propose orders")
    _add_common(p)
    p.add_argument("--d", default="auto", help="differencing order or 'auto'")
    p.add_argument("--max-lag", type=int, default=20)

    p = sub.add_parser("fit", help="estimate one ARIMA order")
    _add_common(p)
    p.add_argument("--order", required=True, type=_parse_order, help="p,d,q")
    p.add_argument("--save", help="write the fit as JSON to this path")

    p = sub.add_parser("diagnose", help="fit and run residual diagnostics")
    _add_common(p)
    p.add_argument("--order", required=True, type=_parse_order)
    p.add_argument("--lag", type=int, default=10, help="portmanteau lag")

    p = sub.add_parser("evaluate", help="one-step-ahead holdout evaluation")
    _add_common(p)
    p.add_argument("--order", required=True, type=_parse_order)
    p.add_argument("--train", type=int, default=None,
                   help="training length (default: all but 12)")

    p = sub.add_parser("forecast", help="interval forecasts past the series end")
    _add_common(p)
    p.add_argument("--order", required=True, type=_parse_order)
    p.add_argument("--train", type=int, default=None,
                   help="estimate on this many leading points (default: all)")
    p.add_argument("--horizon", type=int, default=12)
    p.add_argument("--level", type=float, default=0.95)

    p = sub.add_parser("run", help="full pipeline with report output")
    _add_common(p)
    p.add_argument("--d", default="auto", help="differencing order or 'auto'")
    p.add_argument("--grid", default="auto", type=_parse_grid,
                   help="'auto' or explicit 'p,d,q;p,d,q;...'")
    p.add_argument("--train", type=int, default=None)
    p.add_argument("--validation", type=int, default=12)
    p.add_argument("--horizon", type=int, default=12)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--output-dir", default=None)
    p.add_argument("--formats", default="text",
                   help="comma-separated subset of text,json,plotdata")
    return parser


def _emit(payload: dict, as_json: bool, text_lines: list[str]) -> None:
    if as_json:
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print("\n".join(text_lines))


def _cmd_identify(args) -> int:
    series = load_csv(args.input)
    transformed = box_cox(series, args.lam)
    tests = []
    d_arg = _parse_d(args.d)
    if d_arg is None:
        d = 0
        while True:
            t = adf_test(difference(transformed, d))
            tests.append((d, t))
            if t.p_value < 0.05 or d == 2:
                break
            d += 1
    else:
        d = d_arg
        tests.append((d, adf_test(difference(transformed, d))))
    differenced = difference(transformed, d)
    max_lag = min(args.max_lag, len(differenced) - 1)
    a = acf(differenced, max_lag)
    pa = pacf(differenced, max_lag)
    cands = suggest_candidates(a, pa, d)
    payload = {
        "d": d,
        "stationarity": [{"d": dd, "test": _test_dict(t)} for dd, t in tests],
        "acf": _acf_dict(a),
        "pacf": _acf_dict(pa),
        "candidates": [{"p": o.p, "d": o.d, "q": o.q} for o in cands.orders],
    }
    lines = [f"differencing order d = {d}"]
    for dd, t in tests:
        flag = " (clamped)" if t.p_clamped else ""
        lines.append(f"  ADF at d={dd}: statistic {t.statistic:.4f}, p {t.p_value:.4f}{flag}")
    lines.append("tentative orders: " + ", ".join(str(o) for o in cands.orders))
    _emit(payload, args.json, lines)
    return 0


def _fit_from_args(args):
    series = load_csv(args.input)
    return series, fit(series, args.order, args.lam)


def _cmd_fit(args) -> int:
    _, fitted = _fit_from_args(args)
    rows = coef_test(fitted) if fitted.cov is not None else []
    payload = fit_to_dict(fitted)
    payload["coefficient_tests"] = rows
    lines = [f"ARIMA {fitted.order}  loglik {fitted.loglik:.4f}  AIC {fitted.aic:.2f}",
             f"sigma2 {fitted.params.sigma2:.6f}"]
    for r in rows:
        lines.append(f"  {r['name']}: {r['estimate']:.6f}  se {r['std_error']:.6f}  "
                     f"z {r['z']:.4f}  p {r['p']:.4f}")
    if args.save:
        from .arima import save_fit
        save_fit(fitted, args.save)
        lines.append(f"saved fit to {args.save}")
    _emit(payload, args.json, lines)
    return 0


def _cmd_diagnose(args) -> int:
    _, fitted = _fit_from_args(args)
    lb = ljung_box(fitted.residuals, args.lag, fitdf=0)
    sw = shapiro_wilk(fitted.residuals.values)
    racf = acf(fitted.residuals, min(20, len(fitted.residuals) - 1))
    payload = {"ljung_box": _test_dict(lb), "shapiro_wilk": _test_dict(sw),
               "residual_acf": _acf_dict(racf)}
    sig = [lag for lag, s in zip(racf.lags, racf.significant()) if s]
    lines = [
        f"Ljung-Box: Q {lb.statistic:.4f}  df {lb.df}  p {lb.p_value:.4f}",
        f"Shapiro-Wilk: W {sw.statistic:.4f}  p {sw.p_value:.4f}",
        "residual ACF beyond the band at lags: "
        + (", ".join(map(str, sig)) if sig else "none"),
    ]
    _emit(payload, args.json, lines)
    return 0


def _cmd_evaluate(args) -> int:
    series = load_csv(args.input)
    n_train = args.train if args.train is not None else len(series) - 12
    train, validation = split(series, n_train)
    fitted = fit(train, args.order, args.lam)
    ev = one_step_eval(fitted, train, validation)
    payload = {
        "rows": [{"period": format_period(p), "actual": a, "forecast": f, "error": e}
                 for p, a, f, e in zip(ev.periods, ev.actual, ev.forecast, ev.error)],
        "mae": ev.mae, "rmse": ev.rmse,
        "error_acf": _acf_dict(ev.error_acf),
        "error_shapiro": _test_dict(ev.error_shapiro),
    }
    lines = ["period    actual  forecast  error"]
    for p, a, f in zip(ev.periods, ev.actual, ev.forecast):
        fc = round_up(f)
        lines.append(f"{format_period(p, 'name')}  {round_half_away(a):6d}  "
                     f"{fc:8d}  {round_half_away(a) - fc:5d}")
    lines.append(f"MAE {ev.mae:.4f}  RMSE {ev.rmse:.4f}")
    if ev.error_shapiro is not None:
        lines.append(f"error Shapiro-Wilk: W {ev.error_shapiro.statistic:.4f}  "
                     f"p {ev.error_shapiro.p_value:.4f}")
    _emit(payload, args.json, lines)
    return 0


def _cmd_forecast(args) -> int:
    series = load_csv(args.input)
    fit_series = series
    if args.train is not None:
        fit_series, _ = split(series, args.train)
    fitted = fit(fit_series, args.order, args.lam)
    fc = forecast(fitted, series, args.horizon, args.level)
    payload = {
        "origin": format_period(fc.origin), "level": fc.level,
        "rows": [{"period": format_period(p), "point": pt, "lower": lo, "upper": hi}
                 for p, pt, lo, hi in zip(fc.periods(), fc.point, fc.lower, fc.upper)],
    }
    lines = [f"forecasts from {format_period(fc.origin, 'name')} "
             f"at level {fc.level:.0%}"]
    for p, pt, lo, hi in zip(fc.periods(), fc.point, fc.lower, fc.upper):
        lines.append(f"{format_period(p, 'name')}  {round_half_away(pt):4d}  "
                     f"{round_half_away(lo):4d}  {round_half_away(hi):4d}")
    _emit(payload, args.json, lines)
    return 0


def _cmd_run(args) -> int:
    formats = tuple(f for f in args.formats.split(",") if f)
    config = PipelineConfig(
        input=args.input, lam=args.lam,
        d=_parse_d(args.d),
        grid=args.grid, train_length=args.train,
        validation_length=args.validation, horizon=args.horizon,
        level=args.level, alpha=args.alpha,
        output_dir=args.output_dir, formats=formats,
    )
    report = run_pipeline(config)
    if args.output_dir is not None:
        for path in write_outputs(report, config):
            print(f"wrote {path}", file=sys.stderr)
    print(render(report, "json" if args.json else "text"), end="")
    return 0


_COMMANDS = {
    "identify": _cmd_identify,
    "fit": _cmd_fit,
    "diagnose": _cmd_diagnose,
    "evaluate": _cmd_evaluate,
    "forecast": _cmd_forecast,
    "run": _cmd_run,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (NumericError, ToolkitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
