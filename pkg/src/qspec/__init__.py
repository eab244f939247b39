"""Quantile spectral density estimation and comparison-based tests of serial dependence."""

__version__ = "0.1.0"

from .bootstrap import bootstrap_pvalue, draw_bootstrap_periodograms, hermitian_sqrt, spectral_matrix_set
from .estimator import (
    QsdEstimate,
    QuantileSpectralDensity,
    confidence_band,
    estimate_copula_qsd,
    estimate_qsd,
)
from .gof import QuantileGOFTest, TestReport, deviation_measure, gof_test, null_moments, q_statistic
from .indicators import QuantileGrid, build_panel, empirical_cdf, quantile_cov_all, rank_panel
from .lag_window import LagWindow, bartlett, truncated, tukey
from .null_models import (
    AR1,
    ARCH1,
    GARCH11,
    IID,
    MCConfig,
    NullModelTables,
    SquaredARCH1,
    matched_ar1_for_squared_arch,
    null_tables,
    simulate,
)
from .simulation import ExperimentPlan, RejectionTable, reproduce_table, run_experiment
from .two_sample import p_statistic, r_statistic, reversibility_test, two_sample_test
from .validation import DataError, NumericalIntegrityError

__all__ = [
    "AR1", "ARCH1", "GARCH11", "IID", "SquaredARCH1", "MCConfig", "NullModelTables",
    "LagWindow", "bartlett", "truncated", "tukey",
    "QuantileGrid", "build_panel", "rank_panel", "empirical_cdf", "quantile_cov_all",
    "QsdEstimate", "QuantileSpectralDensity", "estimate_qsd", "estimate_copula_qsd", "confidence_band",
    "TestReport", "QuantileGOFTest", "gof_test", "q_statistic", "null_moments", "deviation_measure",
    "hermitian_sqrt", "spectral_matrix_set", "draw_bootstrap_periodograms", "bootstrap_pvalue",
    "p_statistic", "two_sample_test", "r_statistic", "reversibility_test",
    "ExperimentPlan", "RejectionTable", "run_experiment", "reproduce_table",
    "matched_ar1_for_squared_arch", "null_tables", "simulate",
    "DataError", "NumericalIntegrityError",
]
