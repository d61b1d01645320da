"""CRLB analysis and Doppler-aware phase design for multi-IRS-aided pulse-Doppler radar."""

from .errors import (
    ConfigError,
    DegenerateChannelError,
    InvalidArgumentError,
    InvalidStateError,
    NonConvergenceError,
    SingularFimError,
)
from .experiment import (
    PRESETS,
    ScenarioConfig,
    build_scene,
    emit_csv,
    load_scenario,
    preset,
    read_csv,
    run_gamma_sweep,
    run_sigma_sweep,
)
from .fisher import CrlbResult, FimBlocks, assemble_full_fim, crlb, fim_blocks, fim_from_h, fim_oracle, no_irs_fim
from .geometry import (
    ChannelSet,
    IrsPanel,
    Position2D,
    angles_from_positions,
    coupling_matrix,
    lsr,
    path_loss,
    scale_reflectivities,
    steering_vector,
)
from .optimizer import (
    DesignProblem,
    DesignResult,
    OptimizerConfig,
    alternating_optimize,
    design_objective,
    surrogate_objective,
)
from .signal_model import NoiseModel, RadarParams, TargetParams, sensing_matrix, synthesize_received

__version__ = "0.1.0"
