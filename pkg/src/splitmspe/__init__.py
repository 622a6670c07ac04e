"""Split regression estimators, shrinkage competitors, exact empirical
covariance data generation and minimum-MSPE curves."""

from .core import CorrelationSpec, Dataset, GramBlocks, Partition, RngStream, derive_stream, gram_blocks, standardize
from .elastic_net import EnetConfig, enet_path, fit_elastic_net, fit_lasso
from .errors import (
    ConfigError,
    ConvergenceError,
    NumericalError,
    ParameterError,
    SplitMspeError,
    TooManySplitsError,
)
from .estimators import (
    FitResult,
    cov_garrote,
    cov_ls,
    cov_ridge,
    cov_split,
    fit_garrote,
    fit_ls,
    fit_ridge,
    fit_split,
    generalized_variance,
    total_variance,
)
from .mspe import MspeRecord, Scenario, TuningGrid, estimate_g, min_g, min_g_many, minimize_closed, sweep_curve
from .partitions import adaptive_split_set, count_splits, count_splits_with_leftout, enumerate_splits
from .splitreg import SplitRegConfig, SplitRegFit, fit_splitreg, fit_stacked, stacking_weights
from .targetcov import TargetCovRequest, generate, triangular_factor

__version__ = "0.1.0"
