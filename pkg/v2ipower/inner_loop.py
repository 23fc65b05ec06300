"""Per-link LQG power control with a randomised round-trip delay.

The RSU turns the filtered SINR into a QoS error, the error reaches the OBU
through a delay line, and the OBU updates its power:

    e[k]   = (gamma_obj / gamma[k] - 1) * p[k]
    a[k]   = e[k - d(k)]
    p[k+1] = clamp((1 - Omega) p[k] + Omega p[k - n_RT] + Omega a[k])

``e`` is the power still missing to reach the objective, so it enters the
update with a positive sign; the ``p[k - n_RT]`` tap uses the controller's
fixed delay estimate while ``d(k)`` is the true, randomly drawn delay.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Optional, Tuple

import numpy as np

from .constants import (
    DEFAULT_DELAY_MAX,
    DEFAULT_DELAY_MIN,
    DEFAULT_DELAY_PERIOD,
    DEFAULT_N_RT,
    DEFAULT_OMEGA,
    TRACKING_OFFSET_LIMITS,
)

SINR_FLOOR = 1e-9


def power_bounds(
    channel_caps, p_min: float, p_max: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-channel ``[max(p_min, 0), min(p_max, cap)]``."""
    caps = np.asarray(channel_caps, dtype=float)
    low = np.full_like(caps, max(p_min, 0.0))
    high = np.minimum(caps, p_max)
    if np.any(high < low):
        raise ValueError("power bounds are empty for at least one channel")
    return low, high


def qos_error(gamma_obj, gamma_filtered, power, floor: float = SINR_FLOOR):
    """``(gamma_obj / gamma_filtered - 1) * p``, positive while below target."""
    gamma = np.maximum(np.asarray(gamma_filtered, dtype=float), floor)
    out = (np.asarray(gamma_obj, dtype=float) / gamma - 1.0) * np.asarray(power)
    return out if np.ndim(out) else float(out)


@dataclass
class LqgControllerState:
    """Gain, delay estimate, power history and clamping bounds of the OBU loops.

    ``power_history[0]`` is ``p[k - n_RT]`` and ``power_history[-1]`` is ``p[k]``.
    """

    omega: float
    n_rt_estimate: int
    power_history: Deque[np.ndarray]
    p_low: np.ndarray
    p_high: np.ndarray

    def __post_init__(self) -> None:
        if not 0.0 < self.omega < 1.0:
            raise ValueError(f"omega must lie in (0, 1), got {self.omega}")
        if self.n_rt_estimate < 0:
            raise ValueError("n_rt_estimate must be non-negative")
        if len(self.power_history) != self.n_rt_estimate + 1:
            raise ValueError("power history must hold n_rt_estimate + 1 samples")

    @classmethod
    def initial(
        cls,
        initial_power,
        p_low,
        p_high,
        omega: float = DEFAULT_OMEGA,
        n_rt_estimate: int = DEFAULT_N_RT,
    ) -> "LqgControllerState":
        """Zero-order hold of ``initial_power`` over the whole prehistory."""
        low = np.asarray(p_low, dtype=float)
        high = np.asarray(p_high, dtype=float)
        start = np.broadcast_to(np.asarray(initial_power, dtype=float), low.shape)
        p0 = np.clip(start, low, high)
        history = deque(
            (p0.copy() for _ in range(n_rt_estimate + 1)), maxlen=n_rt_estimate + 1
        )
        return cls(omega, n_rt_estimate, history, low, high)

    @property
    def current(self) -> np.ndarray:
        return self.power_history[-1]

    @property
    def delayed(self) -> np.ndarray:
        return self.power_history[0]


def lqg_update(state: LqgControllerState, delayed_error) -> np.ndarray:
    """Compute ``p[k+1]``, push it into the history and return it."""
    omega = state.omega
    proposed = (
        (1.0 - omega) * state.current
        + omega * state.delayed
        + omega * np.asarray(delayed_error, dtype=float)
    )
    p_next = np.clip(proposed, state.p_low, state.p_high)
    state.power_history.append(p_next)
    return p_next


@dataclass
class DelayLine:
    """Round-trip delay of the QoS error path.

    Each link draws its delay uniformly on ``{delay_min, ..., delay_max}``; the
    draw is repeated every ``period`` samples. Errors before ``k = 0`` are zero.
    """

    shape: Tuple[int, ...]
    rng: Optional[np.random.Generator] = None
    delay_min: int = DEFAULT_DELAY_MIN
    delay_max: int = DEFAULT_DELAY_MAX
    period: int = DEFAULT_DELAY_PERIOD
    delays: np.ndarray = field(init=False)
    _buffer: Deque[np.ndarray] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not 0 <= self.delay_min <= self.delay_max:
            raise ValueError("delay bounds must satisfy 0 <= min <= max")
        if self.period < 1:
            raise ValueError("period must be at least 1 sample")
        if self.rng is None and self.delay_min != self.delay_max:
            raise ValueError("a random generator is required for random delays")
        self.delays = np.full(self.shape, self.delay_min, dtype=int)
        depth = self.delay_max + 1
        self._buffer = deque(
            (np.zeros(self.shape) for _ in range(depth)), maxlen=depth
        )

    def _redraw(self) -> None:
        if self.delay_min == self.delay_max:
            self.delays = np.full(self.shape, self.delay_min, dtype=int)
        else:
            self.delays = self.rng.integers(
                self.delay_min, self.delay_max + 1, size=self.shape
            )


def delay_step(line: DelayLine, error, k: int) -> np.ndarray:
    """Store ``e[k]`` and return ``a[k] = e[k - d(k)]``."""
    if k % line.period == 0:
        line._redraw()
    line._buffer.append(np.broadcast_to(np.asarray(error, dtype=float), line.shape))
    stacked = np.stack(line._buffer)  # oldest first, newest last
    newest = stacked.shape[0] - 1
    index = (newest - line.delays)[None, ...]
    return np.take_along_axis(stacked, index, axis=0)[0]


@dataclass
class TrackingOffset:
    """Per-link scale on the objective SINR that cancels the tracking bias.

    On a moving channel the loop lags the gain, so the filtered SINR settles a
    slowly drifting factor away from its reference. The RSU logs the filtered
    SINR over the last ``span`` samples of every window and at the window
    boundary measures the log bias

        b = mean(log gamma_filtered) - log(scale * gamma_obj)

    It extrapolates ``b`` linearly from the previous measurement to the middle of
    the next window and sets ``scale = clip(exp(-b_next), *limits)``. The QoS
    error is then taken against ``scale * gamma_obj``.
    """

    shape: Tuple[int, ...]
    window: int
    span: int
    limits: Tuple[float, float] = TRACKING_OFFSET_LIMITS
    scale: np.ndarray = field(init=False)
    _log_sum: np.ndarray = field(init=False, repr=False)
    _count: int = field(init=False, default=0, repr=False)
    _last_bias: Optional[np.ndarray] = field(init=False, default=None, repr=False)

    def __post_init__(self) -> None:
        if not 1 <= self.span <= self.window:
            raise ValueError("span must lie in [1, window]")
        if not 0 < self.limits[0] <= 1.0 <= self.limits[1]:
            raise ValueError("limits must satisfy 0 < low <= 1 <= high")
        self.scale = np.ones(self.shape)
        self._log_sum = np.zeros(self.shape)

    @property
    def lead(self) -> float:
        """Logged span's middle to the next window's middle, in windows."""
        return (self.window + self.span) / (2.0 * self.window)

    def reference(self, gamma_obj) -> np.ndarray:
        return np.asarray(gamma_obj, dtype=float) * self.scale

    def observe(self, gamma_filtered, floor: float = SINR_FLOOR) -> None:
        gamma = np.maximum(np.asarray(gamma_filtered, dtype=float), floor)
        self._log_sum = self._log_sum + np.log(gamma)
        self._count += 1

    def update(self, gamma_obj) -> np.ndarray:
        """Rescale from the logged samples, clear the log and return the scale."""
        if self._count == 0:
            raise ValueError("no filtered SINR samples logged since the last update")
        bias = self._log_sum / self._count - np.log(self.reference(gamma_obj))
        predicted = bias
        if self._last_bias is not None:
            predicted = bias + self.lead * (bias - self._last_bias)
        self._last_bias = bias
        self.scale = np.clip(np.exp(-predicted), *self.limits)
        self.discard()
        return self.scale

    def discard(self) -> None:
        """Drop the logged samples; the bias history is kept."""
        self._log_sum = np.zeros(self.shape)
        self._count = 0
