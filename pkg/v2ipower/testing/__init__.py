"""Test helpers for v2ipower.

Provides independent reference computations (oracles) that the test-suite
compares the library against:
- root and peak of the stationarity equation by bisection / golden section
- SINR, power solve and interference aggregate by explicit loops
- brute-force maximization of the network utility
"""

from .oracles import (
    bisect,
    branch_peak,
    brute_force_utility_max,
    central_difference,
    golden_section_max,
    interference_plus_noise,
    iterate_powers_for_targets,
    mhat_by_loops,
    network_utility_by_loops,
    no_interference_sinr,
    sinr_by_loops,
    stationarity_root,
)

__all__ = [
    "bisect",
    "branch_peak",
    "brute_force_utility_max",
    "central_difference",
    "golden_section_max",
    "interference_plus_noise",
    "iterate_powers_for_targets",
    "mhat_by_loops",
    "network_utility_by_loops",
    "no_interference_sinr",
    "sinr_by_loops",
    "stationarity_root",
]
