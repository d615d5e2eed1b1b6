"""Dual-solver engine for molecular diffusion in a bounded 2D biofilm.

An analytical eigenfunction-series solver and a particle-based Monte Carlo
simulator for the channel impulse response of anisotropic diffusion inside a
reflective disk, plus tooling that cross-validates the two.
"""

__version__ = "0.1.0"

from .bessel import RootBracketingError, bessel_j, bessel_j_prime, find_robin_roots
from .compare import (
    AnisotropyRow,
    ComparisonReport,
    MassCheckRow,
    anisotropy_effect,
    compare_series,
    mass_check_gfc,
)
from .config import ConfigError, RunConfig, parse_config, parse_config_text, serialize_config
from .gfc import (
    ConcentrationSeries,
    GridField,
    gfc_eval,
    gfc_field,
    gfc_time_series,
    rx_disc_average,
    rx_disc_average_series,
    truncation_converged,
)
from .modes import (
    ChannelParams,
    Mode,
    ModeTable,
    NormConsistencyError,
    build_mode_table,
    mode_norm,
)
from .pbs import (
    ParticleEnsemble,
    PbsConfig,
    ReceiverSpec,
    apply_degradation,
    pbs_field,
    receiver_area,
    run_ensemble,
    run_realization,
    step_particle,
    surviving_fraction,
)

__all__ = [
    "__version__",
    "RootBracketingError",
    "bessel_j",
    "bessel_j_prime",
    "find_robin_roots",
    "ChannelParams",
    "Mode",
    "ModeTable",
    "NormConsistencyError",
    "build_mode_table",
    "mode_norm",
    "ConcentrationSeries",
    "GridField",
    "gfc_eval",
    "gfc_field",
    "gfc_time_series",
    "rx_disc_average",
    "rx_disc_average_series",
    "truncation_converged",
    "ParticleEnsemble",
    "PbsConfig",
    "ReceiverSpec",
    "apply_degradation",
    "pbs_field",
    "receiver_area",
    "run_ensemble",
    "run_realization",
    "step_particle",
    "surviving_fraction",
    "ComparisonReport",
    "MassCheckRow",
    "AnisotropyRow",
    "compare_series",
    "mass_check_gfc",
    "anisotropy_effect",
    "ConfigError",
    "RunConfig",
    "parse_config",
    "parse_config_text",
    "serialize_config",
]
