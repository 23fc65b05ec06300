"""Reference constants for the DSRC uplink model.

NOTE: These are DEFAULT values only. Runs take their parameters from
SimConfig (see config.py), which is seeded from the values below.
"""

from __future__ import annotations

from typing import Dict, Tuple

# =============================================================================
# PHYSICS
# =============================================================================

SPEED_OF_LIGHT = 2.998e8  # m/s

# Path loss is referenced to 100 m: (0.1 / d_km) ** epsilon
PATH_LOSS_REFERENCE_KM = 0.1
DEFAULT_PATH_LOSS_EXPONENT = 3.0

# =============================================================================
# DSRC CHANNEL PLAN (5.855 - 5.925 GHz, seven 10 MHz channels)
# (channel number, type, max transmit power in dBm, low edge GHz, high edge GHz)
# =============================================================================

DSRC_CHANNELS: Tuple[Tuple[int, str, float, float, float], ...] = (
    (172, "service", 33.0, 5.855, 5.865),
    (174, "service", 33.0, 5.865, 5.875),
    (176, "service", 33.0, 5.875, 5.885),
    (178, "control", 44.8, 5.885, 5.895),
    (180, "service", 23.0, 5.895, 5.905),
    (182, "service", 23.0, 5.905, 5.915),
    (184, "service", 40.0, 5.915, 5.925),
)

CHANNEL_WIDTH_GHZ = 0.010

# Leakage of each channel into its neighbours, c_1 .. c_7
ACI_COEFFICIENTS: Tuple[float, ...] = (
    2.847e-4,
    2.847e-4,
    2.847e-4,
    1.830e-5,
    6.081e-3,
    6.050e-3,
    1.821e-5,
)

# =============================================================================
# SPECTRAL MASKS: (offset from centre in MHz, limit in dBr) per device class
# =============================================================================

MASK_OFFSETS_MHZ: Tuple[float, ...] = (4.5, 5.0, 5.5, 10.0, 15.0)

MASK_LIMITS_DBR: Dict[str, Tuple[float, ...]] = {
    "A": (0.0, -10.0, -20.0, -28.0, -40.0),
    "B": (0.0, -16.0, -20.0, -28.0, -40.0),
    "C": (0.0, -26.0, -32.0, -40.0, -50.0),
    "D": (0.0, -35.0, -45.0, -55.0, -65.0),
}

# =============================================================================
# SIMULATION DEFAULTS (network parameter table)
# =============================================================================

DEFAULT_RSU_COUNT = 3
DEFAULT_OBUS_PER_RSU = 7
DEFAULT_NOISE_DBM = -90.0
DEFAULT_BANDWIDTH_HZ = 10e6
DEFAULT_DATA_RATE_BPS = 3e6
DEFAULT_BITS_PER_SYMBOL = 64
DEFAULT_INFO_BITS_PER_SYMBOL = 48
DEFAULT_OMEGA = 0.10
DEFAULT_SAMPLE_RATE_HZ = 20.0
DEFAULT_OBJECTIVE_RATE_HZ = 0.4
DEFAULT_WINDOW = 50
DEFAULT_CELL_RADIUS_M = 1000.0
DEFAULT_DURATION_S = 25.0
DEFAULT_P_MAX_W = 30.2
DEFAULT_P_MIN_W = 1e-12
DEFAULT_MIN_SAFETY_DISTANCE_M = 10.0
DEFAULT_HIGHWAY_OFFSET_M = 150.0
DEFAULT_DELAY_MIN = 0
DEFAULT_DELAY_MAX = 10
DEFAULT_DELAY_PERIOD = 20
DEFAULT_N_RT = 5
DEFAULT_LATENCY_CAP_S = 0.5
DEFAULT_FILTER_GAINS = (0.4, 0.001, 2e-5)  # alpha, beta, gamma
DEFAULT_SIGMA_L_DB = 6.0
DEFAULT_M_L_DB = 0.0
DEFAULT_INITIAL_OBJECTIVE_DB = 5.0
DEFAULT_BASELINES_DB = (5.0, 7.0, 9.0, 11.0)
DEFAULT_INITIAL_POWER_W = 1e-12
DEFAULT_SINR_MIN = 1.0  # 0 dB
DEFAULT_SINR_MAX = 15.85  # 12 dB
DEFAULT_N_PATHS = 20
DEFAULT_SHADOW_DOPPLER_SCALE = 5e-5
DEFAULT_RSU_SPACING_M = 2000.0
DEFAULT_SPEED_KMH = 72.0
DEFAULT_REALIZATIONS = 100
DEFAULT_BASE_SEED = 0
DEFAULT_SOLVER_TOL = 1e-9
DEFAULT_SOLVER_MAX_ITER = 200

# Bounds of the per-link scale that removes the steady SINR tracking bias
TRACKING_OFFSET_LIMITS = (0.5, 2.0)

# Longest run accepted, in samples
MAX_SAMPLES = 10_000_000
