"""Data-driven sensor fault detection and isolation.

Null-space fault detection, optimized directional residuals, belief-mass
evidence, and a reliability-weighted recursive combination filter, with a
synthetic flight-like data generator and an end-to-end evaluation pipeline.
"""

from .calibration import empirical_threshold
from .data import (
    Dataset,
    FaultSpec,
    LsModel,
    NormStats,
    SyntheticConfig,
    apply_normalization,
    calibrate_fault_amplitude,
    compute_normalization,
    fit_ls_model,
    generate_synthetic_flight,
    inject_fault,
    load_dataset,
)
from .detection import (
    DetectionModel,
    calibrate_threshold,
    detect,
    detection_residual,
    fit_detection_versor,
)
from .directions import (
    IsolationModel,
    SolverOptions,
    angular_distances,
    directional_residual,
    optimize_fault_directions,
)
from .evidence import (
    BbaParams,
    DEFAULT_ANGLE_DECAY,
    ReliabilityParams,
    assign_bbm,
    calibrate_reliability_threshold,
    no_fault_weight,
    reliability,
)
from .fusion import (
    COMBINATION_RULES,
    MASS_FLOOR,
    FusionState,
    IsolationDecision,
    TotalConflictError,
    classic_update,
    desaturate,
    ds_combine,
    init_state,
    isolate,
    mass_agreement,
    rb_update,
    register_rule,
    reliability_weighted_masses,
    uniform_masses,
    validate_masses,
)
from .pipeline import (
    DesignBundle,
    DiagnosisReport,
    PipelineConfig,
    PipelineError,
    ScenarioResult,
    compute_tdr,
    compute_tir,
    emit_series,
    load_validation,
    report_to_dict,
    run_offline_design,
    run_online,
    run_pipeline,
    write_report,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "FaultSpec",
    "LsModel",
    "NormStats",
    "SyntheticConfig",
    "apply_normalization",
    "calibrate_fault_amplitude",
    "compute_normalization",
    "fit_ls_model",
    "generate_synthetic_flight",
    "inject_fault",
    "load_dataset",
    "empirical_threshold",
    "DetectionModel",
    "calibrate_threshold",
    "detect",
    "detection_residual",
    "fit_detection_versor",
    "IsolationModel",
    "SolverOptions",
    "angular_distances",
    "directional_residual",
    "optimize_fault_directions",
    "BbaParams",
    "DEFAULT_ANGLE_DECAY",
    "ReliabilityParams",
    "assign_bbm",
    "calibrate_reliability_threshold",
    "no_fault_weight",
    "reliability",
    "COMBINATION_RULES",
    "MASS_FLOOR",
    "FusionState",
    "IsolationDecision",
    "TotalConflictError",
    "classic_update",
    "desaturate",
    "ds_combine",
    "init_state",
    "isolate",
    "mass_agreement",
    "rb_update",
    "register_rule",
    "reliability_weighted_masses",
    "uniform_masses",
    "validate_masses",
    "DesignBundle",
    "DiagnosisReport",
    "PipelineConfig",
    "PipelineError",
    "ScenarioResult",
    "compute_tdr",
    "compute_tir",
    "emit_series",
    "load_validation",
    "report_to_dict",
    "run_offline_design",
    "run_online",
    "run_pipeline",
    "write_report",
]
