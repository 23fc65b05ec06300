"""Shared fixtures: small, fast configurations of the simulator."""

import numpy as np
import pytest

from v2ipower.config import SimConfig


def make_config(
    duration_s: float = 5.0,
    kind: str = "A",
    speed_kmh: float = 72.0,
    fading: bool = True,
    shadowing: bool = True,
    static: bool = False,
    realizations: int = 1,
    baseline_db=None,
) -> SimConfig:
    """A SimConfig with the common test knobs exposed."""
    cfg = SimConfig()
    cfg.network.duration_s = duration_s
    cfg.channel.fast_fading = fading
    cfg.channel.shadowing = shadowing
    cfg.channel.static = static
    cfg.scenario.kind = kind
    cfg.scenario.speed_kmh = speed_kmh
    cfg.scenario.realizations = realizations
    cfg.scenario.baseline_db = baseline_db
    return cfg


@pytest.fixture
def quick_config() -> SimConfig:
    """Default network, 100 samples (two outer-loop windows), one realization."""
    return make_config()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def toy_network():
    """2 cells x 2 channels with hand-picked gains, unit noise and G = 10/3."""
    gains = np.empty((2, 2, 2))
    gains[0, 0, :] = 1.0
    gains[1, 1, :] = 1.0
    gains[0, 1, :] = 0.1
    gains[1, 0, :] = 0.15
    return {
        "gains": gains,
        "noise_var": 1.0,
        "processing_gain": 10.0 / 3.0,
        "coeffs": (0.05, 0.08),
    }


@pytest.fixture
def config_factory():
    """``make_config`` as a fixture, for tests that need several variants."""
    return make_config
