"""Energy-efficiency utility and the outer-loop objective SINR optimizer.

Per link ``u = w f(gamma) / p`` bit/J, with the efficiency function
``f(gamma) = (1 - exp(-gamma)) ** N`` and ``w = L r / N``. Setting the gradient
of the network utility to zero gives one decoupled equation per link,

    f'(gamma) gamma - f(gamma) = M_hat,

where ``M_hat >= 0`` collects the interference the link causes to others. The
left side rises from 0 to a peak and then falls back to 0 at the
no-interference optimum (``N gamma = exp(gamma) - 1``); the optimizer solves
on that falling branch.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import optimize

from .constants import (
    DEFAULT_BITS_PER_SYMBOL,
    DEFAULT_DATA_RATE_BPS,
    DEFAULT_INFO_BITS_PER_SYMBOL,
    DEFAULT_SINR_MAX,
    DEFAULT_SINR_MIN,
    DEFAULT_SOLVER_MAX_ITER,
    DEFAULT_SOLVER_TOL,
    DEFAULT_WINDOW,
)
from .phy import AciCoefficients, compute_sinr, solve_powers_for_targets

logger = logging.getLogger(__name__)


class WindowError(ValueError):
    """An outer-loop window cannot be used (wrong length, zero mean power)."""


# =============================================================================
# EFFICIENCY AND UTILITY
# =============================================================================


@dataclass(frozen=True)
class EfficiencyParams:
    """OFDM symbol size ``N`` and information bits ``L`` per symbol."""

    n_bits: int = DEFAULT_BITS_PER_SYMBOL
    info_bits: int = DEFAULT_INFO_BITS_PER_SYMBOL

    def __post_init__(self) -> None:
        if not 0 < self.info_bits < self.n_bits:
            raise ValueError(
                f"need 0 < L < N, got L={self.info_bits}, N={self.n_bits}"
            )

    @property
    def code_rate(self) -> float:
        return self.info_bits / self.n_bits


@dataclass(frozen=True)
class UtilityWeights:
    """Per-link weights ``w = L r / N`` in bit/s."""

    values: np.ndarray

    def __post_init__(self) -> None:
        if np.any(np.asarray(self.values) <= 0):
            raise ValueError("utility weights must be positive")

    @classmethod
    def from_rates(
        cls, rates, params: EfficiencyParams = EfficiencyParams()
    ) -> "UtilityWeights":
        return cls(np.asarray(rates, dtype=float) * params.code_rate)

    @classmethod
    def uniform(
        cls,
        shape: Tuple[int, ...],
        rate: float = DEFAULT_DATA_RATE_BPS,
        params: EfficiencyParams = EfficiencyParams(),
    ) -> "UtilityWeights":
        return cls.from_rates(np.full(shape, float(rate)), params)


def _scalar_or_array(out):
    return out if np.ndim(out) else float(out)


def efficiency(gamma, n_bits: int = DEFAULT_BITS_PER_SYMBOL):
    """``f(gamma) = (1 - exp(-gamma)) ** N``; non-positive SINR maps to 0."""
    g = np.maximum(np.asarray(gamma, dtype=float), 0.0)
    return _scalar_or_array((-np.expm1(-g)) ** n_bits)


def efficiency_prime(gamma, n_bits: int = DEFAULT_BITS_PER_SYMBOL):
    """``f'(gamma) = N (1 - exp(-gamma)) ** (N - 1) exp(-gamma)``."""
    g = np.maximum(np.asarray(gamma, dtype=float), 0.0)
    return _scalar_or_array(n_bits * (-np.expm1(-g)) ** (n_bits - 1) * np.exp(-g))


def obu_utility(gamma, power, weight, n_bits: int = DEFAULT_BITS_PER_SYMBOL):
    """Bits delivered per Joule, ``w f(gamma) / p``.

    Raises:
        ValueError: if any power is not strictly positive
    """
    p = np.asarray(power, dtype=float)
    if np.any(~(p > 0)):
        raise ValueError("utility is undefined for non-positive power")
    return _scalar_or_array(np.asarray(weight) * efficiency(gamma, n_bits) / p)


def network_utility(gammas, powers, weights, n_bits: int = DEFAULT_BITS_PER_SYMBOL):
    """Sum of :func:`obu_utility` over every link."""
    w = weights.values if isinstance(weights, UtilityWeights) else weights
    return float(np.sum(obu_utility(gammas, powers, w, n_bits)))


def stationarity_residual(gamma, n_bits: int = DEFAULT_BITS_PER_SYMBOL):
    """Left side of the optimality condition, ``f'(gamma) gamma - f(gamma)``."""
    g = np.maximum(np.asarray(gamma, dtype=float), 0.0)
    return _scalar_or_array(
        efficiency_prime(g, n_bits) * g - efficiency(g, n_bits)
    )


# =============================================================================
# OUTER-LOOP WINDOW
# =============================================================================


@dataclass(frozen=True)
class ObjectiveSinrVector:
    """Objective SINRs (linear) broadcast to the inner loops for window ``window``.

    ``solved`` keeps the stationarity roots before clamping when the vector came
    out of the solver; clamped ``values`` are what the inner loops track.
    """

    values: np.ndarray
    window: int = 0
    gamma_min: float = DEFAULT_SINR_MIN
    gamma_max: float = DEFAULT_SINR_MAX
    solved: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if np.any(v < self.gamma_min) or np.any(v > self.gamma_max):
            raise ValueError(
                f"objective SINRs must lie in [{self.gamma_min}, {self.gamma_max}]"
            )

    @classmethod
    def constant(
        cls,
        shape: Tuple[int, ...],
        value: float,
        window: int = 0,
        gamma_min: float = DEFAULT_SINR_MIN,
        gamma_max: float = DEFAULT_SINR_MAX,
    ) -> "ObjectiveSinrVector":
        return cls(np.full(shape, float(value)), window, gamma_min, gamma_max)

    @property
    def db(self) -> np.ndarray:
        return 10.0 * np.log10(self.values)


@dataclass(frozen=True)
class WindowAverages:
    """Means over one window of ``Q`` samples.

    ``power`` and ``sinr`` are ``(M, U)``; ``gains`` is ``(M, M, U)`` in the
    layout of :mod:`v2ipower.phy`; ``denominator`` is the mean
    interference-plus-noise of each link.
    """

    power: np.ndarray
    sinr: np.ndarray
    gains: np.ndarray
    denominator: np.ndarray
    n_samples: int

    def __post_init__(self) -> None:
        for name in ("power", "sinr", "gains", "denominator"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise WindowError(f"window mean '{name}' must be non-negative")


@dataclass
class WindowAccumulator:
    """Running sums of the quantities the central unit averages per window."""

    window_size: int = DEFAULT_WINDOW
    count: int = 0
    _sums: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.window_size < 1:
            raise ValueError("window_size must be at least 1")

    def add(self, power, sinr, gains, denominator) -> None:
        sample = {
            "power": power,
            "sinr": np.maximum(sinr, 0.0),
            "gains": gains,
            "denominator": denominator,
        }
        for key, value in sample.items():
            value = np.asarray(value, dtype=float)
            if key in self._sums:
                self._sums[key] = self._sums[key] + value
            else:
                self._sums[key] = value.copy()
        self.count += 1

    @property
    def is_full(self) -> bool:
        return self.count >= self.window_size

    def averages(self) -> WindowAverages:
        if self.count != self.window_size:
            raise WindowError(
                f"window holds {self.count} samples, expected {self.window_size}"
            )
        means = {key: total / self.count for key, total in self._sums.items()}
        return WindowAverages(n_samples=self.count, **means)

    def reset(self) -> None:
        self.count = 0
        self._sums.clear()


def average_power_window(trace, window_size: Optional[int] = None):
    """Arithmetic mean over the leading (sample) axis of ``trace``.

    Raises:
        WindowError: if the trace is empty or not ``window_size`` samples long
    """
    arr = np.asarray(trace, dtype=float)
    if arr.ndim == 0 or arr.shape[0] == 0:
        raise WindowError("cannot average an empty window")
    if window_size is not None and arr.shape[0] != window_size:
        raise WindowError(
            f"window holds {arr.shape[0]} samples, expected {window_size}"
        )
    return _scalar_or_array(arr.mean(axis=0))


# =============================================================================
# INTERFERENCE AGGREGATE M_hat
# =============================================================================


def compute_mhat(
    window: WindowAverages,
    coeffs: AciCoefficients = AciCoefficients(),
    weights: Optional[UtilityWeights] = None,
    n_bits: int = DEFAULT_BITS_PER_SYMBOL,
    link: Optional[Tuple[int, int]] = None,
):
    """Interference aggregate of every link (or of ``link`` only).

    For link ``(l, i)`` with ``t_x = (w_x / p_x) f'(gamma_x) gamma_x``:

        M_hat = p_li^2 / w_li * ( sum_{m != l} t_mi H^l_mi
                                  + sum_{j in J_i} t_lj H^i_lj )

    ``H^l_mi = |h(l,i) -> RSU m|^2 / D_mi`` is the sensitivity of link ``(m, i)``
    to the power of ``(l, i)`` and ``H^i_lj = c_i |h_li|^2 / D_lj`` the same
    through adjacent-channel leakage; ``D`` is the mean interference-plus-noise.
    ``J_i`` holds the neighbouring channels of ``i``.
    """
    p = np.asarray(window.power, dtype=float)
    if np.any(p <= 0):
        raise WindowError("window mean power must be positive for every link")
    denom = np.asarray(window.denominator, dtype=float)
    if np.any(denom <= 0):
        raise WindowError("interference-plus-noise must be positive for every link")
    m_cells, n_ch = p.shape
    w = (
        weights.values
        if weights is not None
        else UtilityWeights.uniform(p.shape).values
    )
    w = np.broadcast_to(w, p.shape)
    gamma = window.sinr
    g = np.asarray(window.gains, dtype=float)

    t = w / p * efficiency_prime(gamma, n_bits) * gamma

    cross = g / denom[:, None, :]
    idx = np.arange(m_cells)
    cross[idx, idx, :] = 0.0
    first = np.einsum("mli,mi->li", cross, t)

    s = t / denom
    neighbours = np.zeros_like(s)
    neighbours[:, 1:] += s[:, :-1]
    neighbours[:, :-1] += s[:, 1:]
    own = np.einsum("lli->li", g)
    second = coeffs.for_channels(n_ch) * own * neighbours

    mhat = np.maximum(p**2 / w * (first + second), 0.0)
    if link is not None:
        return float(mhat[link])
    return mhat


# =============================================================================
# STATIONARITY SOLVER
# =============================================================================


@lru_cache(maxsize=32)
def branch_bracket(
    n_bits: int = DEFAULT_BITS_PER_SYMBOL,
) -> Tuple[float, float, float]:
    """``(gamma_peak, gamma_no_interference, residual_peak)`` for ``N = n_bits``.

    ``gamma_no_interference`` solves ``N gamma = exp(gamma) - 1``; ``gamma_peak``
    maximizes :func:`stationarity_residual` below it.
    """
    if n_bits < 2:
        raise ValueError("n_bits must be at least 2")
    upper = 2.0 * math.log(n_bits) + 2.0
    gamma_ni = optimize.brentq(
        lambda x: n_bits * x - math.expm1(x), 1e-6, upper, xtol=1e-15
    )

    grid = np.linspace(0.0, gamma_ni, 513)
    k = int(np.argmax(stationarity_residual(grid, n_bits)))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = optimize.minimize_scalar(
        lambda x: -stationarity_residual(x, n_bits),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    gamma_peak = float(res.x)
    peak = float(stationarity_residual(gamma_peak, n_bits))
    return gamma_peak, float(gamma_ni), peak


def solve_objective_sinr(
    mhat,
    n_bits: int = DEFAULT_BITS_PER_SYMBOL,
    tol: float = DEFAULT_SOLVER_TOL,
    max_iter: int = DEFAULT_SOLVER_MAX_ITER,
):
    """Objective SINR solving ``f'(gamma) gamma - f(gamma) = mhat`` by bisection.

    Works element-wise on arrays. ``mhat = 0`` returns the no-interference
    optimum; ``mhat`` above the branch maximum returns ``gamma_peak``.
    """
    m = np.asarray(mhat, dtype=float)
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise ValueError("mhat must be finite and non-negative")
    gamma_peak, gamma_ni, peak = branch_bracket(n_bits)

    m_eff = np.minimum(m, peak)
    lo = np.full(m.shape, gamma_peak)
    hi = np.full(m.shape, gamma_ni)
    mid = 0.5 * (lo + hi)
    interior = (m > 0) & (m < peak)
    for _ in range(max_iter if np.any(interior) else 0):
        mid = 0.5 * (lo + hi)
        resid = stationarity_residual(mid, n_bits) - m_eff
        # residual decreases along the branch
        above = resid > 0
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(np.abs(resid) < tol):
            break

    out = np.where(m >= peak, gamma_peak, np.where(m == 0, gamma_ni, mid))
    return _scalar_or_array(out)


def clamp_sinr(
    gamma, gamma_min: float = DEFAULT_SINR_MIN, gamma_max: float = DEFAULT_SINR_MAX
):
    """``max(gamma_min, min(gamma, gamma_max))``."""
    if gamma_min > gamma_max:
        raise ValueError("gamma_min must not exceed gamma_max")
    out = np.clip(np.asarray(gamma, dtype=float), gamma_min, gamma_max)
    return _scalar_or_array(out)


def outer_loop_update(
    window: WindowAverages,
    window_index: int,
    coeffs: AciCoefficients = AciCoefficients(),
    weights: Optional[UtilityWeights] = None,
    n_bits: int = DEFAULT_BITS_PER_SYMBOL,
    gamma_min: float = DEFAULT_SINR_MIN,
    gamma_max: float = DEFAULT_SINR_MAX,
    tol: float = DEFAULT_SOLVER_TOL,
    max_iter: int = DEFAULT_SOLVER_MAX_ITER,
) -> Tuple[ObjectiveSinrVector, np.ndarray]:
    """One central-unit step: ``M_hat`` -> root solve -> clamp."""
    mhat = compute_mhat(window, coeffs, weights, n_bits)
    solved = solve_objective_sinr(mhat, n_bits, tol, max_iter)
    clamped = clamp_sinr(solved, gamma_min, gamma_max)
    logger.debug(
        "window %d: mhat max %.3e, objectives %.2f..%.2f dB",
        window_index,
        float(np.max(mhat)),
        float(10 * np.log10(np.min(clamped))),
        float(10 * np.log10(np.max(clamped))),
    )
    objectives = ObjectiveSinrVector(
        np.asarray(clamped, dtype=float),
        window_index,
        gamma_min,
        gamma_max,
        solved=np.asarray(solved, dtype=float),
    )
    return objectives, mhat


def static_fixed_point(
    gains,
    noise_var: float,
    processing_gain: float,
    coeffs: AciCoefficients = AciCoefficients(),
    weights: Optional[UtilityWeights] = None,
    n_bits: int = DEFAULT_BITS_PER_SYMBOL,
    gamma_min: float = DEFAULT_SINR_MIN,
    gamma_max: float = DEFAULT_SINR_MAX,
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 1000,
) -> Tuple[np.ndarray, np.ndarray]:
    """Outer-loop fixed point on a frozen channel with exact power tracking.

    Each iteration puts the powers exactly on the current objectives (what the
    inner loops converge to), recomputes ``M_hat`` and moves the objectives a
    ``damping`` fraction toward the new solution.

    Returns:
        ``(objective SINRs, powers)``, both ``(M, U)``
    """
    g = np.asarray(gains, dtype=float)
    shape = (g.shape[0], g.shape[-1])
    gamma = np.full(shape, branch_bracket(n_bits)[1])
    gamma = np.asarray(clamp_sinr(gamma, gamma_min, gamma_max))
    bandwidth, rate = processing_gain, 1.0

    for it in range(max_iter):
        p = solve_powers_for_targets(gamma, g, noise_var, processing_gain, coeffs)
        sample = compute_sinr(p, g, noise_var, bandwidth, rate, coeffs)
        window = WindowAverages(p, sample.raw_sinr, g, sample.denominator, 1)
        mhat = compute_mhat(window, coeffs, weights, n_bits)
        target = np.asarray(
            clamp_sinr(solve_objective_sinr(mhat, n_bits), gamma_min, gamma_max)
        )
        step = damping * (target - gamma)
        gamma = gamma + step
        if np.max(np.abs(step)) < tol:
            logger.debug("static fixed point converged after %d iterations", it + 1)
            break
    else:
        logger.warning(
            "static fixed point did not converge in %d iterations", max_iter
        )

    p = solve_powers_for_targets(gamma, g, noise_var, processing_gain, coeffs)
    return gamma, p
