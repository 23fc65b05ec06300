"""Mobile radio channel and OBU kinematics on a straight two-lane highway.

The composite gain of each link is ``h = g * lambda * (0.1 / d_km) ** epsilon``:
- ``g``: fast fading, a sum of ``N_c`` Doppler-shifted plane waves
- ``lambda``: log-normal shadowing driven by its own sinusoid set
- path loss referenced to 100 m

Time arguments are continuous seconds (``t = k * T_s``) and Doppler
frequencies are in Hz.

RSUs sit at ``(x_l, D)``; an OBU at road coordinate ``x`` in lane ``n`` sits at
``(x, -lane_offsets[n])``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .constants import (
    DEFAULT_CELL_RADIUS_M,
    DEFAULT_HIGHWAY_OFFSET_M,
    DEFAULT_MIN_SAFETY_DISTANCE_M,
    DEFAULT_PATH_LOSS_EXPONENT,
    PATH_LOSS_REFERENCE_KM,
    SPEED_OF_LIGHT,
)

SCENARIO_KINDS = ("A", "B", "C")


# =============================================================================
# GEOMETRY AND KINEMATICS
# =============================================================================


@dataclass(frozen=True)
class RoadGeometry:
    """RSU layout along the highway."""

    rsu_positions: Tuple[Tuple[float, float], ...]
    highway_offset: float = DEFAULT_HIGHWAY_OFFSET_M
    cell_radius: float = DEFAULT_CELL_RADIUS_M
    min_safety_distance: float = DEFAULT_MIN_SAFETY_DISTANCE_M
    lane_offsets: Tuple[float, float] = (0.0, 4.0)
    distance_floor: float = 1.0

    def __post_init__(self) -> None:
        if not self.rsu_positions:
            raise ValueError("at least one RSU is required")
        if self.cell_radius <= 0:
            raise ValueError("cell_radius must be positive")
        if self.highway_offset < 0:
            raise ValueError("highway_offset must be non-negative")
        if self.min_safety_distance <= 0:
            raise ValueError("min_safety_distance must be positive")
        if self.distance_floor <= 0:
            raise ValueError("distance_floor must be positive")
        xs = [p[0] for p in self.rsu_positions]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("RSU positions must be strictly increasing along the road")

    @classmethod
    def evenly_spaced(
        cls,
        n_rsu: int,
        spacing: float = 2 * DEFAULT_CELL_RADIUS_M,
        highway_offset: float = DEFAULT_HIGHWAY_OFFSET_M,
        **kwargs,
    ) -> "RoadGeometry":
        """``n_rsu`` RSUs centred on the origin, ``spacing`` metres apart."""
        centre = 0.5 * (n_rsu - 1)
        positions = tuple(
            (spacing * (k - centre), highway_offset) for k in range(n_rsu)
        )
        return cls(positions, highway_offset=highway_offset, **kwargs)

    @property
    def rsu_x(self) -> np.ndarray:
        return np.array([p[0] for p in self.rsu_positions])

    @property
    def rsu_y(self) -> np.ndarray:
        return np.array([p[1] for p in self.rsu_positions])


@dataclass(frozen=True)
class ObuKinematics:
    """Position and motion of one OBU, or of a whole fleet when fields are arrays.

    ``road_coordinate`` is absolute (metres along the road axis).
    """

    road_coordinate: np.ndarray
    lane_index: np.ndarray
    speed: np.ndarray
    direction: np.ndarray

    def __post_init__(self) -> None:
        if np.any(np.asarray(self.speed) < 0):
            raise ValueError("speed must be non-negative")
        if not np.all(np.isin(self.direction, (-1, 1))):
            raise ValueError("direction must be +1 or -1")
        if not np.all(np.isin(self.lane_index, (0, 1))):
            raise ValueError("lane_index must be 0 or 1")


def advance_positions(obus: ObuKinematics, dt: float) -> ObuKinematics:
    """Move every OBU at constant speed for ``dt`` seconds."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return replace(
        obus,
        road_coordinate=obus.road_coordinate + obus.direction * obus.speed * dt,
    )


def distances(geometry: RoadGeometry, obus: ObuKinematics) -> np.ndarray:
    """Floored 2-D distance from every RSU to every OBU.

    Returns:
        Array of shape ``(n_rsu,) + shape(obus)``
    """
    x = np.asarray(obus.road_coordinate, dtype=float)
    lane = np.asarray(obus.lane_index)
    y_obu = -np.asarray(geometry.lane_offsets, dtype=float)[lane]
    expand = (slice(None),) + (None,) * x.ndim
    dx = x[None, ...] - geometry.rsu_x[expand]
    dy = y_obu[None, ...] - geometry.rsu_y[expand]
    return np.maximum(np.hypot(dx, dy), geometry.distance_floor)


def scenario_kinematics(
    kind: str,
    geometry: RoadGeometry,
    obus_per_rsu: int,
    speed: float,
    approach_distance: float = 200.0,
    spacing: float = 25.0,
) -> ObuKinematics:
    """Initial placement of ``obus_per_rsu`` OBUs around every RSU foot point.

    A: even indices drive +1 in lane 0, odd indices drive -1 in lane 1; each starts
       ``approach_distance + spacing * rank`` before the foot point, so all of them
       approach and then drive away.
    B: all start near ``-R`` and drive +1 (approaching).
    C: all start at the foot point and drive +1 (departing).

    ``rank = i // 2``; OBUs sharing a lane are ``spacing`` metres apart.
    """
    if kind not in SCENARIO_KINDS:
        raise ValueError(f"Unknown scenario: {kind}")
    if spacing < geometry.min_safety_distance:
        raise ValueError(
            f"spacing {spacing} m is below the minimum safety distance "
            f"{geometry.min_safety_distance} m"
        )
    if speed < 0:
        raise ValueError("speed must be non-negative")

    index = np.arange(obus_per_rsu)
    rank = index // 2
    lane = index % 2

    if kind == "A":
        direction = np.where(lane == 0, 1, -1)
        offset = -direction * (approach_distance + spacing * rank)
    elif kind == "B":
        direction = np.ones_like(index)
        offset = -geometry.cell_radius + spacing * rank
    else:
        direction = np.ones_like(index)
        offset = spacing * rank

    n_rsu = len(geometry.rsu_positions)
    road = geometry.rsu_x[:, None] + offset[None, :].astype(float)
    shape = (n_rsu, obus_per_rsu)
    return ObuKinematics(
        road_coordinate=road,
        lane_index=np.broadcast_to(lane, shape).copy(),
        speed=np.full(shape, float(speed)),
        direction=np.broadcast_to(direction, shape).copy(),
    )


# =============================================================================
# FADING AND SHADOWING
# =============================================================================


def doppler_frequency(speed, carrier_freq, aoa):
    """Doppler shift ``(v / lambda_c) * cos(aoa)`` in Hz."""
    checks = (("speed", speed), ("carrier_freq", carrier_freq), ("aoa", aoa))
    for name, value in checks:
        if not np.all(np.isfinite(value)):
            raise ValueError(f"{name} must be finite")
    if np.any(np.asarray(speed) < 0):
        raise ValueError("speed must be non-negative")
    if np.any(np.asarray(carrier_freq) <= 0):
        raise ValueError("carrier_freq must be positive")
    wavelength = SPEED_OF_LIGHT / np.asarray(carrier_freq, dtype=float)
    out = (np.asarray(speed, dtype=float) / wavelength) * np.cos(aoa)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class FadingParams:
    """Sum-of-sinusoids parameters; the last axis indexes the ``N_c`` paths."""

    amplitudes: np.ndarray
    doppler_freqs: np.ndarray
    phases: np.ndarray

    def __post_init__(self) -> None:
        shapes = {
            np.shape(self.amplitudes),
            np.shape(self.doppler_freqs),
            np.shape(self.phases),
        }
        if len(shapes) != 1:
            raise ValueError(f"fading arrays differ in shape: {shapes}")
        if np.any(np.asarray(self.amplitudes) < 0):
            raise ValueError("amplitudes must be non-negative")
        phases = np.asarray(self.phases)
        if np.any(phases < -math.pi) or np.any(phases >= math.pi):
            raise ValueError("phases must lie in [-pi, pi)")

    @property
    def n_paths(self) -> int:
        return int(np.shape(self.amplitudes)[-1])

    @classmethod
    def draw(
        cls,
        aoa_rng: np.random.Generator,
        phase_rng: np.random.Generator,
        max_doppler,
        n_paths: int = 20,
        power: float = 1.0,
    ) -> "FadingParams":
        """Random paths for every link in ``max_doppler`` (array of ``f_max``).

        AOAs are uniform on ``[0, pi)``, phases uniform on ``[-pi, pi)`` and the
        amplitudes are ``sqrt(power / N_c)``, so ``sum c_n^2 == power``.
        """
        if n_paths < 1:
            raise ValueError("n_paths must be at least 1")
        f_max = np.asarray(max_doppler, dtype=float)
        shape = f_max.shape + (n_paths,)
        aoa = aoa_rng.uniform(0.0, math.pi, size=shape)
        phases = phase_rng.uniform(-math.pi, math.pi, size=shape)
        return cls(
            amplitudes=np.full(shape, math.sqrt(power / n_paths)),
            doppler_freqs=f_max[..., None] * np.cos(aoa),
            phases=phases,
        )


@dataclass(frozen=True)
class ShadowingParams:
    """Log-normal shadowing: ``sigma_l`` and ``m_l`` in dB plus its own sinusoids."""

    sigma_l: float
    m_l: float
    paths: FadingParams

    def __post_init__(self) -> None:
        if not self.sigma_l >= 0:
            raise ValueError("sigma_l must be non-negative")


def sample_fast_fading(params: FadingParams, time: float):
    """``g = sum_n c_n exp(j (2 pi f_n t + theta_n))``."""
    arg = 2.0 * math.pi * params.doppler_freqs * time + params.phases
    out = np.sum(params.amplitudes * np.exp(1j * arg), axis=-1)
    return out if np.ndim(out) else complex(out)


def mean_fading_power(params: FadingParams, start: float, duration: float):
    """Mean of ``|g|^2`` over ``[start, start + duration]``, in closed form.

    Every pair of paths beats at ``df = f_n - f_m``; averaged over the interval a
    beat keeps its value at the midpoint scaled by ``sinc(df * duration)``.
    ``duration = 0`` gives the instantaneous ``|g(start)|^2``.
    """
    if not duration >= 0:
        raise ValueError(f"duration must be non-negative, got {duration}")
    c = np.asarray(params.amplitudes, dtype=float)
    f = np.asarray(params.doppler_freqs, dtype=float)
    theta = np.asarray(params.phases, dtype=float)
    df = f[..., :, None] - f[..., None, :]
    beat = np.cos(
        2.0 * math.pi * df * (start + 0.5 * duration)
        + theta[..., :, None]
        - theta[..., None, :]
    )
    weight = c[..., :, None] * c[..., None, :] * np.sinc(df * duration)
    out = np.maximum(np.sum(weight * beat, axis=(-2, -1)), 0.0)
    return out if np.ndim(out) else float(out)


def sample_shadowing(params: ShadowingParams, time: float):
    """Log-normal sample ``10 ** ((sigma_L * sum_n c_n cos(...) + m_L) / 20)``."""
    p = params.paths
    wave = np.sum(
        p.amplitudes * np.cos(2.0 * math.pi * p.doppler_freqs * time + p.phases),
        axis=-1,
    )
    out = 10.0 ** ((params.sigma_l * wave + params.m_l) / 20.0)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class LinkChannel:
    """Composite gain and its factors for one link (or an array of links).

    ``fading_power`` is the fast-fading power averaged over the measurement
    interval; when set it replaces ``|g|^2`` in :attr:`power_gain`.
    """

    g: np.ndarray
    lam: np.ndarray
    path_loss: np.ndarray
    h: np.ndarray
    d: np.ndarray
    fading_power: Optional[np.ndarray] = None

    @property
    def power_gain(self) -> np.ndarray:
        """``|h|^2``, or ``mean |g|^2 * (lambda * path_loss) ** 2`` when averaged."""
        if self.fading_power is None:
            return np.abs(self.h) ** 2
        return self.fading_power * (self.lam * self.path_loss) ** 2


def path_loss(d, exponent: float = DEFAULT_PATH_LOSS_EXPONENT):
    """Amplitude path loss ``(0.1 / d_km) ** exponent`` for ``d`` in metres."""
    return (PATH_LOSS_REFERENCE_KM / (np.asarray(d, dtype=float) / 1000.0)) ** exponent


def link_gain(
    geometry: RoadGeometry,
    obu: ObuKinematics,
    fading: Optional[FadingParams],
    shadowing: Optional[ShadowingParams],
    time: float,
    rsu: Optional[int] = None,
    exponent: float = DEFAULT_PATH_LOSS_EXPONENT,
    averaging: float = 0.0,
) -> LinkChannel:
    """Channel from OBU(s) to RSU ``rsu``, or to every RSU when ``rsu`` is None.

    With ``rsu=None`` the leading axis of every field indexes the receiving RSU.
    ``fading`` / ``shadowing`` set to None disable that factor (``g = 1``,
    ``lambda = 1``); their parameter arrays must broadcast against the distances.
    ``averaging > 0`` measures the fast-fading power as its mean over
    ``[time, time + averaging]`` instead of the instantaneous ``|g|^2``.
    """
    d = distances(geometry, obu)
    if rsu is not None:
        d = d[rsu]
    pl = path_loss(d, exponent)
    g = (
        sample_fast_fading(fading, time)
        if fading is not None
        else np.ones_like(d, dtype=complex)
    )
    lam = (
        sample_shadowing(shadowing, time)
        if shadowing is not None
        else np.ones_like(d)
    )
    h = g * lam * pl
    fading_power = None
    if fading is not None and averaging > 0:
        fading_power = mean_fading_power(fading, time, averaging)
    return LinkChannel(
        g=g, lam=lam, path_loss=pl, h=h, d=d, fading_power=fading_power
    )
