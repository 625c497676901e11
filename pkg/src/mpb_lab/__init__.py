"""Matrix-pair beamforming on a synthetic multi-user CDMA array channel.

The library splits into six layers:

- linalg: generalized eigensolver, rank-one inverse updates, angles
- scenario: Gold codes, array geometry, synthetic chip-rate streams
- core: projection bases (PAPC / Maximin / MIC), covariance pairs,
  batch weight solving
- adaptive: the per-symbol recursive solver (shared by MIC and
  PAPC-RLS)
- analysis: leakage / threshold theory, SINR metrics, beam patterns,
  applicability checks
- harness + cli: experiment presets, config files, CSV emission
"""

from .adaptive import AdaptiveOutput, AdaptiveState, init, run, update_symbol
from .analysis import (
    ConditionReport,
    PatternSample,
    ThresholdReport,
    array_pattern,
    condition_check,
    estimate_gamma1,
    gamma0,
    lambda_max_prediction,
    measure_threshold,
    mvdr_optimum_sinr,
    normalized_sinr,
    normalized_sinr_from_covariances,
    output_sinr,
    plr_beta,
    predicted_threshold,
)
from .core import (
    CovariancePair,
    DataBlock,
    ProjectionBasis,
    SnapshotPair,
    basis_maximin,
    basis_mic,
    basis_papc,
    beamform_components,
    beamform_output,
    covariances_from_arrays,
    estimate_covariances,
    make_basis,
    project,
    project_fft,
    project_stream,
    rake_combine,
    segment,
    solve_batch,
)
from .harness import (
    ConfigError,
    ExperimentResult,
    ExperimentSpec,
    default_spec,
    load_config,
    run_preset,
    scenario_hash,
    write_result,
)
from .linalg import (
    GevdResult,
    SingularMatrixError,
    hermitian_gevd,
    normalize_phase,
    power_iteration_step,
    rank_one_inverse_update,
    subspace_angle,
)
from .scenario import (
    ArrayGeometry,
    ChipStream,
    JammerSpec,
    PathSpec,
    ScenarioConfig,
    SpreadingCode,
    compound_steering,
    desired_path_power,
    generate_gold_codes,
    group_identical_delays,
    steering_vector,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveOutput",
    "AdaptiveState",
    "ArrayGeometry",
    "ChipStream",
    "ConditionReport",
    "ConfigError",
    "CovariancePair",
    "DataBlock",
    "ExperimentResult",
    "ExperimentSpec",
    "GevdResult",
    "JammerSpec",
    "PathSpec",
    "PatternSample",
    "ProjectionBasis",
    "ScenarioConfig",
    "SingularMatrixError",
    "SnapshotPair",
    "SpreadingCode",
    "ThresholdReport",
    "array_pattern",
    "basis_maximin",
    "basis_mic",
    "basis_papc",
    "beamform_components",
    "beamform_output",
    "compound_steering",
    "condition_check",
    "covariances_from_arrays",
    "default_spec",
    "desired_path_power",
    "estimate_covariances",
    "estimate_gamma1",
    "gamma0",
    "generate_gold_codes",
    "group_identical_delays",
    "hermitian_gevd",
    "init",
    "lambda_max_prediction",
    "load_config",
    "make_basis",
    "measure_threshold",
    "mvdr_optimum_sinr",
    "normalize_phase",
    "normalized_sinr",
    "normalized_sinr_from_covariances",
    "output_sinr",
    "plr_beta",
    "power_iteration_step",
    "predicted_threshold",
    "project",
    "project_fft",
    "project_stream",
    "rake_combine",
    "run",
    "run_preset",
    "scenario_hash",
    "segment",
    "solve_batch",
    "steering_vector",
    "subspace_angle",
    "synthesize",
    "update_symbol",
    "write_result",
]
