"""Candidate generation, AIC ranking, and the significance-rejection walk.

Candidates come from reading the ACF/PACF of the differenced series: a plot
that cuts off at lag k proposes a pure MA(k) or AR(k) model, and when the
pattern could be read either way the full mixed grid with small AR and MA
orders is added. Candidates are then fitted, ranked by AIC, and the first
model whose coefficients are all individually significant is selected.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arima import ArimaFit, ArimaOrder, coef_test, fit
from .diagnostics import AcfResult
from .errors import ConfigError, ToolkitError
from .series import TimeSeries

# a cut-off at lag k requires the next CUTOFF_WINDOW lags to be inside the band
CUTOFF_WINDOW = 3
MIXED_GRID_MAX = 3


@dataclass(frozen=True)
class CandidateSet:
    """Ordered, duplicate-free collection of model orders sharing one d."""

    orders: tuple[ArimaOrder, ...]
    d: int
    source: str  # "heuristic" or "explicit-grid"

    def __post_init__(self):
        if not self.orders:
            raise ConfigError("candidate set must not be empty")
        if len(set(self.orders)) != len(self.orders):
            raise ConfigError("candidate set contains duplicate orders")
        if any(o.d != self.d for o in self.orders):
            raise ConfigError("all candidates must share the common differencing order")


@dataclass(frozen=True)
class TraceEntry:
    order: ArimaOrder
    aic: float | None
    status: str            # "selected" | "rejected-insignificant" | "not-examined" | "failed"
    detail: str | None = None


@dataclass(frozen=True)
class SelectionTrace:
    """AIC-ranked candidates with the outcome of the significance walk."""

    entries: tuple[TraceEntry, ...]
    alpha: float | None = None


class SelectionError(ToolkitError):
    """Raised when every candidate is rejected or fails to fit."""


def _cutoff_lag(result: AcfResult) -> int | None:
    """Lag where the plot cuts off, or None when it tails off.

    Cut-off at k: lags 1..k all significant and the following CUTOFF_WINDOW
    lags all inside the band. k = 0 (nothing significant at the start) counts
    as a cut-off.
    """
    sig = result.significant()
    n_lags = len(sig)
    for k in range(n_lags, -1, -1):
        if k + CUTOFF_WINDOW > n_lags:
            continue
        head_ok = all(sig[:k])
        tail_ok = not any(sig[k:k + CUTOFF_WINDOW])
        if head_ok and tail_ok:
            return k
    return None


def suggest_candidates(acf_result: AcfResult, pacf_result: AcfResult, d: int) -> CandidateSet:
    """Propose tentative orders from the ACF/PACF of the differenced series.

    An ACF cut-off at k proposes (0,d,k); a PACF cut-off at k proposes
    (k,d,0). When both plots tail off, or both cut off at a positive lag so
    that either could be the tailing one, the mixed grid with p and q from 1
    to MIXED_GRID_MAX is added as well.
    """
    for res, kind in ((acf_result, "ACF"), (pacf_result, "PACF")):
        if res.kind != kind:
            raise ConfigError(f"expected an {kind} result, got {res.kind}")
        if len(res.lags) < CUTOFF_WINDOW + 3:
            raise ConfigError(f"need at least {CUTOFF_WINDOW + 3} lags to classify, "
                              f"got {len(res.lags)}")
    q_cut = _cutoff_lag(acf_result)
    p_cut = _cutoff_lag(pacf_result)

    orders: list[ArimaOrder] = []

    def add(order: ArimaOrder):
        if order not in orders:
            orders.append(order)

    if q_cut is not None:
        add(ArimaOrder(0, d, q_cut))
    if p_cut is not None:
        add(ArimaOrder(p_cut, d, 0))
    both_tail = q_cut is None and p_cut is None
    ambiguous = (q_cut is not None and p_cut is not None
                 and q_cut >= 1 and p_cut >= 1)
    if both_tail or ambiguous:
        for p in range(1, MIXED_GRID_MAX + 1):
            for q in range(1, MIXED_GRID_MAX + 1):
                add(ArimaOrder(p, d, q))
    return CandidateSet(tuple(orders), d, "heuristic")


def explicit_grid(orders, d: int | None = None) -> CandidateSet:
    """Wrap caller-chosen orders as a candidate set."""
    orders = tuple(o if isinstance(o, ArimaOrder) else ArimaOrder(*o) for o in orders)
    if d is None:
        d = orders[0].d if orders else 0
    return CandidateSet(orders, d, "explicit-grid")


def _rank(series: TimeSeries, candidates: CandidateSet,
          lam: float) -> tuple[list[tuple[ArimaOrder, ArimaFit]], list[TraceEntry]]:
    fits: list[tuple[ArimaOrder, ArimaFit]] = []
    failures: list[TraceEntry] = []
    for order in candidates.orders:
        try:
            fits.append((order, fit(series, order, lam)))
        except ToolkitError as exc:
            failures.append(TraceEntry(order, None, "failed", str(exc)))
    # AIC ascending; ties prefer fewer coefficients, then lower q
    fits.sort(key=lambda item: (item[1].aic, item[0].p + item[0].q, item[0].q))
    return fits, failures


def rank_by_aic(series: TimeSeries, candidates: CandidateSet,
                lam: float = 0.0) -> SelectionTrace:
    """Fit every candidate and rank by AIC (ascending).

    Candidates that fail to fit are retained in the trace with the failure
    reason but excluded from the ranking; the call only raises when no
    candidate fits at all.
    """
    fits, failures = _rank(series, candidates, lam)
    if not fits:
        raise SelectionError("no candidate could be fitted: "
                             + "; ".join(f"{e.order}: {e.detail}" for e in failures))
    entries = [TraceEntry(order, fitted.aic, "not-examined") for order, fitted in fits]
    return SelectionTrace(tuple(entries + failures), alpha=None)


def select(series: TimeSeries, candidates: CandidateSet, lam: float = 0.0,
           alpha: float = 0.05) -> tuple[ArimaFit, SelectionTrace]:
    """Pick the best-AIC candidate whose coefficients are all significant.

    Walks the AIC ranking; a candidate is accepted when every coefficient's
    two-sided p-value is below ``alpha``, and is otherwise marked
    rejected-insignificant. Raises :class:`SelectionError` naming every
    rejection when no candidate survives.
    """
    if not (0.0 < alpha < 1.0):
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    fits, failures = _rank(series, candidates, lam)
    if not fits:
        raise SelectionError("no candidate could be fitted: "
                             + "; ".join(f"{e.order}: {e.detail}" for e in failures))
    entries: list[TraceEntry] = []
    chosen: ArimaFit | None = None
    for order, fitted in fits:
        if chosen is not None:
            entries.append(TraceEntry(order, fitted.aic, "not-examined"))
            continue
        if fitted.cov is None:
            entries.append(TraceEntry(order, fitted.aic, "rejected-insignificant",
                                      "coefficient covariance unavailable"))
            continue
        rows = coef_test(fitted)
        insignificant = [r["name"] for r in rows if r["p"] >= alpha]
        if insignificant:
            entries.append(TraceEntry(order, fitted.aic, "rejected-insignificant",
                                      "p >= alpha for " + ", ".join(insignificant)))
        else:
            entries.append(TraceEntry(order, fitted.aic, "selected"))
            chosen = fitted
    if chosen is None:
        rejected = [f"{e.order}: {e.detail}" for e in entries + failures]
        raise SelectionError("every candidate was rejected: " + "; ".join(rejected))
    return chosen, SelectionTrace(tuple(entries + failures), alpha=alpha)
