"""v2ipower - two-loop utility-maximizing uplink power control for V2I networks.

Inner loops track objective SINRs per link with an LQG controller under a
random round-trip delay; an outer loop recomputes the objectives every window
so that the network energy-efficiency utility (bit/J) is maximized.

Usage:
    from v2ipower import SimConfig, run_monte_carlo

    summary = run_monte_carlo(SimConfig())
    print(summary.time_average())
"""

__version__ = "0.1.0"

from .config import (
    ConfigError,
    ExperimentSpec,
    SimConfig,
    config_to_toml,
    get_default_config,
    load_config,
    parse_config,
)
from .estimation import AbgFilterState, filter_step
from .inner_loop import DelayLine, LqgControllerState, delay_step, lqg_update, qos_error
from .outputs import emit_outputs, read_summary, read_trace
from .phy import (
    AciCoefficients,
    ChannelPlan,
    SpectralMask,
    aci_vector,
    compute_sinr,
    derive_aci_coefficients,
    raw_sinr,
    solve_powers_for_targets,
)
from .propagation import (
    FadingParams,
    LinkChannel,
    ObuKinematics,
    RoadGeometry,
    ShadowingParams,
    advance_positions,
    doppler_frequency,
    link_gain,
    sample_fast_fading,
    sample_shadowing,
)
from .sim import MonteCarloSummary, RealizationTrace, run_monte_carlo, run_realization
from .utility_opt import (
    EfficiencyParams,
    ObjectiveSinrVector,
    UtilityWeights,
    WindowAverages,
    WindowError,
    compute_mhat,
    efficiency,
    efficiency_prime,
    network_utility,
    obu_utility,
    solve_objective_sinr,
)

__all__ = [
    "__version__",
    "AbgFilterState",
    "AciCoefficients",
    "ChannelPlan",
    "ConfigError",
    "DelayLine",
    "EfficiencyParams",
    "ExperimentSpec",
    "FadingParams",
    "LinkChannel",
    "LqgControllerState",
    "MonteCarloSummary",
    "ObjectiveSinrVector",
    "ObuKinematics",
    "RealizationTrace",
    "RoadGeometry",
    "ShadowingParams",
    "SimConfig",
    "SpectralMask",
    "UtilityWeights",
    "WindowAverages",
    "WindowError",
    "aci_vector",
    "advance_positions",
    "compute_mhat",
    "compute_sinr",
    "config_to_toml",
    "delay_step",
    "derive_aci_coefficients",
    "doppler_frequency",
    "efficiency",
    "efficiency_prime",
    "emit_outputs",
    "filter_step",
    "get_default_config",
    "link_gain",
    "load_config",
    "lqg_update",
    "network_utility",
    "obu_utility",
    "parse_config",
    "qos_error",
    "raw_sinr",
    "read_summary",
    "read_trace",
    "run_monte_carlo",
    "run_realization",
    "sample_fast_fading",
    "sample_shadowing",
    "solve_objective_sinr",
    "solve_powers_for_targets",
]
