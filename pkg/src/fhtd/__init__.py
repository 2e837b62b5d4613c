"""Model selection and forecasting for high-dimensional unit-root ARX series."""

from .baselines import (LassoConfig, LassoFit, adaptive_lasso, kkt_violation,
                        lasso_path, lasso_select, oga3_select, oga_path)
from .csvio import CsvDataset, load_csv
from .dgp import (CovariateProcessSpec, Dataset, DgpSpec, ErrorProcessSpec,
                  UnitRootSpec, builtin_spec, expand_characteristic, simulate)
from .evaluation import (SelectionTally, dm_test, example21_stats,
                         example22_selection_curve, example31_mspe,
                         rolling_forecast, tally)
from .harness import (ExperimentConfig, ExperimentReport, emit_tables,
                      run_experiment)
from .presets import PRESETS, preset_config
from .projection import ActiveFit, LagDesign, min_eig_diag, new_fit, ols_solve
from .selection import (FhtdConfig, SelectedModel, SelectionPath, ddt,
                        default_q, fhtd_select, fhtd_select_with_intercept,
                        forecast_next, fsr_path, hdic, hdic_stop, trim)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
