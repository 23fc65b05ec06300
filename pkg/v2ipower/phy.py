"""Spectrum plan, adjacent-channel interference and raw SINR.

Every array in this module is laid out as:
- powers, per-link quantities: ``(M, U)`` indexed ``[cell, channel]``
- gains ``|h|^2``: ``(M, M, U)`` indexed ``[receiving RSU, transmitting cell, channel]``

so ``gains[l, l, i]`` is the desired link of OBU ``i`` in cell ``l`` and
``gains[l, m, i]`` (``m != l``) is the cross-RSU path from OBU ``(m, i)`` to RSU ``l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .constants import (
    ACI_COEFFICIENTS,
    CHANNEL_WIDTH_GHZ,
    DSRC_CHANNELS,
    MASK_LIMITS_DBR,
    MASK_OFFSETS_MHZ,
)

# Floor used in place of -inf dBr when linearising a mask
_MASK_FLOOR_DBR = -400.0


# =============================================================================
# UNIT CONVERSION
# =============================================================================


def dbm_to_watt(x):
    """Convert dBm to W."""
    out = 10.0 ** ((np.asarray(x, dtype=float) - 30.0) / 10.0)
    return out if np.ndim(x) else float(out)


def watt_to_dbm(p):
    """Convert W to dBm. Non-positive powers map to -inf."""
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(np.asarray(p, dtype=float)) + 30.0
    return out if np.ndim(p) else float(out)


def db_to_linear(x):
    """Convert a dB ratio to linear."""
    out = 10.0 ** (np.asarray(x, dtype=float) / 10.0)
    return out if np.ndim(x) else float(out)


def linear_to_db(x):
    """Convert a linear ratio to dB."""
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(np.asarray(x, dtype=float))
    return out if np.ndim(x) else float(out)


def kmh_to_ms(v: float) -> float:
    return v / 3.6


# =============================================================================
# CHANNEL PLAN
# =============================================================================


@dataclass(frozen=True)
class ChannelSpec:
    """One 10 MHz DSRC channel."""

    number: int
    kind: str  # "service" or "control"
    max_tx_power_dbm: float
    freq_low_ghz: float
    freq_high_ghz: float

    @property
    def center_ghz(self) -> float:
        return 0.5 * (self.freq_low_ghz + self.freq_high_ghz)

    @property
    def center_hz(self) -> float:
        return self.center_ghz * 1e9

    @property
    def max_tx_power_w(self) -> float:
        return dbm_to_watt(self.max_tx_power_dbm)


@dataclass(frozen=True)
class ChannelPlan:
    """Ordered list of contiguous channels; index ``i`` is OBU ``i`` of every cell."""

    channels: Tuple[ChannelSpec, ...]

    def __post_init__(self) -> None:
        if not self.channels:
            raise ValueError("Channel plan must contain at least one channel")
        for spec in self.channels:
            if spec.kind not in ("service", "control"):
                raise ValueError(f"Unknown channel type: {spec.kind}")
            if not math.isclose(
                spec.freq_high_ghz - spec.freq_low_ghz, CHANNEL_WIDTH_GHZ, abs_tol=1e-9
            ):
                raise ValueError(f"Channel {spec.number} is not 10 MHz wide")
        for lower, upper in zip(self.channels, self.channels[1:]):
            if not math.isclose(lower.freq_high_ghz, upper.freq_low_ghz, abs_tol=1e-9):
                raise ValueError(
                    f"Channels {lower.number} and {upper.number} are not contiguous"
                )

    @classmethod
    def dsrc(cls, n_channels: Optional[int] = None) -> "ChannelPlan":
        """The 5.9 GHz DSRC plan, optionally truncated to the first channels."""
        rows = DSRC_CHANNELS if n_channels is None else DSRC_CHANNELS[:n_channels]
        if n_channels is not None and not 1 <= n_channels <= len(DSRC_CHANNELS):
            raise ValueError(f"n_channels must be in [1, {len(DSRC_CHANNELS)}]")
        return cls(tuple(ChannelSpec(*row) for row in rows))

    def __len__(self) -> int:
        return len(self.channels)

    @property
    def centers_hz(self) -> np.ndarray:
        return np.array([c.center_hz for c in self.channels])

    @property
    def max_powers_w(self) -> np.ndarray:
        return np.array([c.max_tx_power_w for c in self.channels])


@dataclass(frozen=True)
class AciCoefficients:
    """Leakage fraction of each channel into its adjacent channels."""

    values: Tuple[float, ...] = ACI_COEFFICIENTS

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("ACI coefficients must not be empty")
        for n, c in enumerate(self.values, start=1):
            if not (math.isfinite(c) and 0.0 <= c <= 1.0):
                raise ValueError(f"ACI coefficient c_{n}={c} outside [0, 1]")

    def for_channels(self, n_channels: int) -> np.ndarray:
        if n_channels > len(self.values):
            raise ValueError(
                f"{n_channels} channels but only {len(self.values)} ACI coefficients"
            )
        return np.asarray(self.values[:n_channels], dtype=float)


# =============================================================================
# INTERFERENCE AND SINR
# =============================================================================


def aci_vector(powers, gains, coeffs) -> np.ndarray:
    """Adjacent-channel interference seen on every channel of one (or each) RSU.

    Channel ``i`` collects ``c_j |h_j|^2 p_j`` from ``j = i-1`` and ``j = i+1``;
    the band-edge channels have a single neighbour.

    Args:
        powers: transmit powers, last axis = channel
        gains: desired-link ``|h|^2``, same shape as ``powers``
        coeffs: AciCoefficients or array with one value per channel

    Returns:
        Interference in W, same shape as ``powers``
    """
    p = np.asarray(powers, dtype=float)
    g = np.asarray(gains, dtype=float)
    if p.shape != g.shape:
        raise ValueError(f"powers {p.shape} and gains {g.shape} differ in shape")
    if p.ndim == 0:
        raise ValueError("aci_vector needs at least one channel axis")
    n = p.shape[-1]
    if isinstance(coeffs, AciCoefficients):
        c = coeffs.for_channels(n)
    else:
        c = np.asarray(coeffs, dtype=float)
    if c.shape != (n,):
        raise ValueError(f"expected {n} ACI coefficients, got shape {c.shape}")

    leak = c * g * p
    out = np.zeros_like(leak)
    out[..., 1:] += leak[..., :-1]
    out[..., :-1] += leak[..., 1:]
    return out


@dataclass(frozen=True)
class SinrSample:
    """Raw SINR of every link with its power breakdown (all in W)."""

    raw_sinr: np.ndarray
    desired: np.ndarray
    aci: np.ndarray
    cross: np.ndarray
    noise: float
    processing_gain: float

    @property
    def denominator(self) -> np.ndarray:
        return self.aci + self.cross + self.noise

    def recompose(self) -> np.ndarray:
        """Rebuild the SINR from its breakdown."""
        return self.processing_gain * self.desired / self.denominator


def _own_gains(gains: np.ndarray) -> np.ndarray:
    return np.einsum("lli->li", gains)


def compute_sinr(
    powers,
    gains,
    noise_var: float,
    bandwidth: float,
    rate: float,
    coeffs: AciCoefficients = AciCoefficients(),
) -> SinrSample:
    """Raw uplink SINR of all ``M x U`` links at one sample.

    ``(W/r) p_li |h_li|^2 / (I_li + sum_{m != l} p_mi |h^(l)_mi|^2 + sigma^2)``
    """
    if not (noise_var > 0 and bandwidth > 0 and rate > 0):
        raise ValueError("noise_var, bandwidth and rate must be positive")
    p = np.asarray(powers, dtype=float)
    g = np.asarray(gains, dtype=float)
    if p.ndim != 2 or g.shape != (p.shape[0],) + p.shape:
        raise ValueError(f"gains must have shape (M, M, U) = {(p.shape[0],) + p.shape}")

    own = _own_gains(g)
    desired = p * own
    aci = aci_vector(p, own, coeffs)
    others = g.copy()
    idx = np.arange(p.shape[0])
    others[idx, idx, :] = 0.0
    cross = np.einsum("lmi,mi->li", others, p)

    gain = bandwidth / rate
    raw = gain * desired / (aci + cross + noise_var)
    return SinrSample(
        raw_sinr=raw,
        desired=desired,
        aci=aci,
        cross=cross,
        noise=float(noise_var),
        processing_gain=gain,
    )


def raw_sinr(
    link: Tuple[int, int],
    powers,
    gains,
    noise_var: float,
    bandwidth: float,
    rate: float,
    coeffs: AciCoefficients = AciCoefficients(),
) -> float:
    """Raw SINR of a single link ``(l, i)``."""
    sample = compute_sinr(powers, gains, noise_var, bandwidth, rate, coeffs)
    return float(sample.raw_sinr[link])


def solve_powers_for_targets(
    targets,
    gains,
    noise_var: float,
    processing_gain: float,
    coeffs: AciCoefficients = AciCoefficients(),
) -> np.ndarray:
    """Powers that put every link exactly on its target SINR (frozen channel).

    Solves the ``M*U`` linear system obtained by writing the SINR equation of each
    link as ``(W/r) |h_li|^2 p_li / gamma_li - interference(p) = sigma^2``.

    Raises:
        ValueError: if the targets are infeasible (no positive solution)
    """
    gamma = np.asarray(targets, dtype=float)
    g = np.asarray(gains, dtype=float)
    m_cells, n_ch = gamma.shape
    c = coeffs.for_channels(n_ch)
    own = _own_gains(g)
    size = m_cells * n_ch

    a = np.zeros((size, size))
    for cell in range(m_cells):
        for i in range(n_ch):
            row = cell * n_ch + i
            a[row, row] = processing_gain * own[cell, i] / gamma[cell, i]
            for j in (i - 1, i + 1):
                if 0 <= j < n_ch:
                    a[row, cell * n_ch + j] -= c[j] * own[cell, j]
            for m in range(m_cells):
                if m != cell:
                    a[row, m * n_ch + i] -= g[cell, m, i]

    p = np.linalg.solve(a, np.full(size, noise_var))
    if np.any(p <= 0):
        raise ValueError("SINR targets are infeasible for this channel")
    return p.reshape(m_cells, n_ch)


# =============================================================================
# SPECTRAL MASKS
# =============================================================================


@dataclass(frozen=True)
class SpectralMask:
    """Piecewise-linear (in dB) PSD limit, symmetric about the channel centre."""

    device_class: str
    breakpoints: Tuple[Tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.breakpoints) < 2:
            raise ValueError("mask needs at least two breakpoints")
        offsets = [b[0] for b in self.breakpoints]
        levels = [b[1] for b in self.breakpoints]
        if offsets[0] != 4.5 or levels[0] != 0.0:
            raise ValueError("mask must start at (4.5 MHz, 0 dBr)")
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise ValueError("mask offsets must be strictly increasing")
        if any(b > a for a, b in zip(levels, levels[1:])):
            raise ValueError("mask levels must be non-increasing with offset")
        if any(math.isnan(v) for v in levels):
            raise ValueError("mask levels must not be NaN")

    @classmethod
    def for_class(cls, device_class: str) -> "SpectralMask":
        if device_class not in MASK_LIMITS_DBR:
            raise ValueError(f"Unknown device class: {device_class}")
        return cls(
            device_class,
            tuple(zip(MASK_OFFSETS_MHZ, MASK_LIMITS_DBR[device_class])),
        )

    def level_dbr(self, offset_mhz):
        """Mask level at a (signed) offset; flat at 0 dBr inside +-4.5 MHz."""
        offsets = np.array([b[0] for b in self.breakpoints])
        levels = np.maximum(
            np.array([b[1] for b in self.breakpoints]), _MASK_FLOOR_DBR
        )
        return np.interp(np.abs(offset_mhz), offsets, levels, left=0.0)

    def psd(self, offset_mhz):
        """Linear relative PSD."""
        return 10.0 ** (self.level_dbr(offset_mhz) / 10.0)


def mask_leakage(mask: SpectralMask) -> float:
    """Power in the adjacent 10 MHz band relative to the power in the own band."""
    points: Sequence[float] = [b[0] for b in mask.breakpoints]
    own, _ = integrate.quad(
        mask.psd, -5.0, 5.0, points=[-4.5, 4.5], limit=200
    )
    adjacent_points = [x for x in points if 5.0 < x < 15.0]
    adjacent, _ = integrate.quad(
        mask.psd, 5.0, 15.0, points=adjacent_points or None, limit=200
    )
    return adjacent / own


def derive_aci_coefficients(
    mask: SpectralMask, n_channels: int = len(ACI_COEFFICIENTS)
) -> AciCoefficients:
    """Leakage coefficients implied by a mask, identical for every channel.

    This is a cross-check of the tabulated constants, not the runtime path.
    """
    leak = mask_leakage(mask)
    return AciCoefficients(tuple([leak] * n_channels))
