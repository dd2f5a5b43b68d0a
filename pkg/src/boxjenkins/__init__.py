"""Box-Jenkins forecasting toolkit for monthly count series.

Library layout:

- :mod:`boxjenkins.series` -- the :class:`TimeSeries` container, CSV I/O,
  power transforms, differencing, splits
- :mod:`boxjenkins.diagnostics` -- ACF/PACF and the unit-root, portmanteau,
  and normality tests
- :mod:`boxjenkins.arima` -- exact maximum-likelihood ARIMA estimation
- :mod:`boxjenkins.forecasting` -- interval forecasts and holdout evaluation
- :mod:`boxjenkins.selection` -- candidate generation and AIC selection
- :mod:`boxjenkins.pipeline` -- end-to-end runs, reports, plot data
- :mod:`boxjenkins.cli` -- the ``boxjenkins`` command
"""
from importlib import resources

from ._version import __version__
from .arima import (ArimaFit, ArimaOrder, ArimaParams, coef_test, css_objective,
                    exact_loglik, fit, load_fit, save_fit)
from .diagnostics import (AcfResult, TestResult, acf, adf_test, ljung_box,
                          pacf, shapiro_wilk)
from .errors import ConfigError, DataError, NumericError, ToolkitError
from .forecasting import (EvaluationResult, ForecastResult, PsiWeights,
                          forecast, one_step_eval, psi_weights)
from .pipeline import (PipelineConfig, Report, emit_plot_data, render,
                       run_pipeline)
from .selection import (CandidateSet, SelectionError, SelectionTrace,
                        explicit_grid, rank_by_aic, select, suggest_candidates)
from .series import (TimeSeries, box_cox, difference, integrate, inv_box_cox,
                     load_csv, split, write_csv)

FIRE_DATASET = "fire_davao_2012_2018.csv"


def bundled_dataset_path() -> str:
    """Filesystem path of the packaged monthly fire-incidence dataset."""
    return str(resources.files("boxjenkins").joinpath("data", FIRE_DATASET))
