"""Twin-experiment harness: configuration, cycling driver, sweeps and the
single-step convergence study."""
from .config import (ConfigError, ExperimentConfig, LONG_RUN_CYCLES, default_config, format_config,
                     parse_config)
from .convergence import BimodalPrior, ConvergenceTable, StudySetup, posterior_mean, run_convergence_study
from .experiment import (CSV_COLUMNS, ExperimentResult, emit_results, generate_truth_and_obs, results_csv,
                         run_twin_experiment, summary_line)
from .sweep import run_sweep, sweep_configs, sweep_csv

__all__ = [
    "BimodalPrior", "CSV_COLUMNS", "ConfigError", "ConvergenceTable", "ExperimentConfig",
    "ExperimentResult", "LONG_RUN_CYCLES", "StudySetup", "default_config", "emit_results",
    "format_config", "generate_truth_and_obs", "parse_config", "posterior_mean", "results_csv",
    "run_convergence_study", "run_sweep", "run_twin_experiment", "summary_line", "sweep_configs",
    "sweep_csv",
]
