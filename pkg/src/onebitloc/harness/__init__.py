"""Scenario generation, Monte Carlo experiment drivers, and the CLI."""

from .scenario import (
    DEFAULT_CIRCLE_RADIUS,
    ESTIMATOR_NAMES,
    GEOMETRY_KINDS,
    NBIOT_BANDWIDTH,
    RANGE_SOURCES,
    ScenarioSpec,
    generate_geometry,
    load_scenario,
    snr_profile,
)
from .experiments import (
    CSV_COLUMNS,
    LASSERRE_NODE_CAP,
    MetricsRow,
    RANGE_SIGMA_AT_UNIT_SNR,
    TrialResult,
    delay_error_samples,
    range_noise_sigmas,
    rho_sweep,
    rows_to_records,
    run_delay_experiment,
    run_localization_experiment,
    run_single_scenario,
    write_rows,
)

__all__ = [
    "CSV_COLUMNS",
    "DEFAULT_CIRCLE_RADIUS",
    "ESTIMATOR_NAMES",
    "GEOMETRY_KINDS",
    "LASSERRE_NODE_CAP",
    "MetricsRow",
    "NBIOT_BANDWIDTH",
    "RANGE_SIGMA_AT_UNIT_SNR",
    "RANGE_SOURCES",
    "ScenarioSpec",
    "TrialResult",
    "delay_error_samples",
    "generate_geometry",
    "load_scenario",
    "range_noise_sigmas",
    "rho_sweep",
    "rows_to_records",
    "run_delay_experiment",
    "run_localization_experiment",
    "run_single_scenario",
    "snr_profile",
    "write_rows",
]
