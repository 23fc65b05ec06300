"""Alpha-beta-gamma smoothing of raw SINR measurements.

One filter runs per link; the state fields may be scalars or arrays, in which
case every element is an independent filter.

Per sample ``k`` with measurement ``z`` and residual ``r = z - x[k]``:

    gamma[k]  = x[k] + alpha * r
    v_s[k]    = v_p[k] + (beta / T_s) * r
    a_s[k]    = a_s[k-1] + (gamma_f / (2 T_s^2)) * r
    x[k+1]    = gamma[k] + T_s v_s[k] + T_s^2 a_s[k] / 2
    v_p[k+1]  = v_s[k] + T_s a_s[k]
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from .constants import DEFAULT_FILTER_GAINS, DEFAULT_SAMPLE_RATE_HZ


@dataclass(frozen=True)
class AbgFilterState:
    """Predicted level/rate, smoothed rate/acceleration and the fixed gains."""

    x: np.ndarray
    v_p: np.ndarray
    v_s: np.ndarray
    a_s: np.ndarray
    alpha: float = DEFAULT_FILTER_GAINS[0]
    beta: float = DEFAULT_FILTER_GAINS[1]
    gamma_f: float = DEFAULT_FILTER_GAINS[2]
    t_s: float = 1.0 / DEFAULT_SAMPLE_RATE_HZ

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.beta < 0 or self.gamma_f < 0:
            raise ValueError("beta and gamma_f must be non-negative")
        if not self.t_s > 0:
            raise ValueError("t_s must be positive")

    @classmethod
    def initial(
        cls,
        first_measurement,
        alpha: float = DEFAULT_FILTER_GAINS[0],
        beta: float = DEFAULT_FILTER_GAINS[1],
        gamma_f: float = DEFAULT_FILTER_GAINS[2],
        t_s: float = 1.0 / DEFAULT_SAMPLE_RATE_HZ,
    ) -> "AbgFilterState":
        """Start on the first raw measurement with zero rate and acceleration."""
        x = np.array(first_measurement, dtype=float)
        zero = np.zeros_like(x)
        return cls(x, zero, zero.copy(), zero.copy(), alpha, beta, gamma_f, t_s)


def filter_step(
    state: AbgFilterState, measurement
) -> Tuple[np.ndarray, AbgFilterState]:
    """Smooth one measurement, then predict the next sample.

    Returns:
        ``(filtered SINR, next state)``
    """
    z = np.asarray(measurement, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("SINR measurement must be finite")

    t = state.t_s
    residual = z - state.x
    smoothed = state.x + state.alpha * residual
    v_s = state.v_p + (state.beta / t) * residual
    a_s = state.a_s + (state.gamma_f / (2.0 * t * t)) * residual

    x_next = smoothed + t * v_s + 0.5 * t * t * a_s
    v_p_next = v_s + t * a_s
    return smoothed, replace(state, x=x_next, v_p=v_p_next, v_s=v_s, a_s=a_s)
