"""Closed-loop simulation of the two-time-scale power control scheme.

Per sample ``k`` (period ``T_s``):

1. advance the OBUs and sample every channel
2. raw SINR of every link, then the alpha-beta-gamma filter (RSU)
3. QoS error at the RSU, through the delay line to the OBU
4. LQG power update and clamping at the OBU

Every ``Q`` samples the central unit averages the last window, computes
``M_hat`` for every link, solves the stationarity equations and broadcasts new
objective SINRs, which take effect from the next sample. Until the first window
closes every objective sits at the initial value (5 dB by default). In fixed
baseline mode the outer loop is off and all objectives stay at the baseline.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .config import ExperimentSpec, SimConfig, validate
from .estimation import AbgFilterState, filter_step
from .inner_loop import (
    DelayLine,
    LqgControllerState,
    TrackingOffset,
    delay_step,
    lqg_update,
    power_bounds,
    qos_error,
)
from .phy import AciCoefficients, ChannelPlan, compute_sinr, db_to_linear
from .propagation import (
    FadingParams,
    RoadGeometry,
    ShadowingParams,
    advance_positions,
    doppler_frequency,
    link_gain,
    scenario_kinematics,
)
from .utility_opt import (
    EfficiencyParams,
    ObjectiveSinrVector,
    UtilityWeights,
    WindowAccumulator,
    network_utility,
    obu_utility,
    outer_loop_update,
)

logger = logging.getLogger(__name__)

# Independent random substreams of one realization, in spawn order
STREAMS = ("fading_aoa", "fading_phase", "shadow_aoa", "shadow_phase", "delay")


@dataclass(frozen=True)
class NetworkState:
    """Snapshot of every link at one sample."""

    k: int
    power: np.ndarray
    sinr_raw: np.ndarray
    sinr_filtered: np.ndarray
    sinr_objective: np.ndarray
    road_coordinate: np.ndarray


@dataclass(frozen=True)
class OuterLoopWindow:
    """One central-unit update; ``sample`` is the first sample it applies to.

    ``solved`` holds the stationarity roots, ``objectives`` the clamped values.
    """

    index: int
    sample: int
    mhat: np.ndarray
    solved: np.ndarray
    objectives: np.ndarray


@dataclass
class RealizationTrace:
    """Per-sample record of one closed-loop run.

    Per-link arrays are ``(K, M, U)``; ``network_utility`` is ``(K,)``.
    ``tracking_offset`` is the scale on the objective the inner loop tracked.
    """

    seed: int
    arm: str
    power: np.ndarray
    sinr_raw: np.ndarray
    sinr_filtered: np.ndarray
    sinr_objective: np.ndarray
    utility: np.ndarray
    network_utility: np.ndarray
    road_coordinate: np.ndarray
    tracking_offset: np.ndarray
    delays: np.ndarray
    windows: List[OuterLoopWindow] = field(default_factory=list)
    wall_clock_s: float = 0.0

    @property
    def n_samples(self) -> int:
        return int(self.network_utility.shape[0])

    @property
    def n_links(self) -> int:
        return int(self.power.shape[1] * self.power.shape[2])

    def state(self, k: int) -> NetworkState:
        return NetworkState(
            k=k,
            power=self.power[k],
            sinr_raw=self.sinr_raw[k],
            sinr_filtered=self.sinr_filtered[k],
            sinr_objective=self.sinr_objective[k],
            road_coordinate=self.road_coordinate[k],
        )

    def recompute_network_utility(
        self, weights: UtilityWeights, n_bits: int
    ) -> np.ndarray:
        """Network utility of every sample rebuilt from the stored powers and SINRs."""
        return np.array(
            [
                network_utility(self.sinr_filtered[k], self.power[k], weights, n_bits)
                for k in range(self.n_samples)
            ]
        )


@dataclass
class MonteCarloSummary:
    """Network utility of every realization of one arm, plus timing."""

    arm: str
    seeds: Tuple[int, ...]
    network_utility: np.ndarray  # (R, K)
    wall_clock_s: np.ndarray  # (R,)
    traces: List[RealizationTrace] = field(default_factory=list)

    @property
    def realizations(self) -> int:
        return int(self.network_utility.shape[0])

    @property
    def mean(self) -> np.ndarray:
        return self.network_utility.mean(axis=0)

    @property
    def std(self) -> np.ndarray:
        return self.network_utility.std(axis=0)

    @property
    def wall_clock_mean(self) -> float:
        return float(np.mean(self.wall_clock_s))

    @property
    def wall_clock_std(self) -> float:
        return float(np.std(self.wall_clock_s))

    def time_average(self, start: int = 100, stop: Optional[int] = None) -> float:
        """Mean network utility over samples ``[start, stop)``."""
        return float(np.mean(self.mean[start:stop]))

    @property
    def peak_sample(self) -> int:
        return int(np.argmax(self.mean))


# =============================================================================
# SINGLE REALIZATION
# =============================================================================


def build_geometry(config: SimConfig) -> RoadGeometry:
    ch = config.channel
    return RoadGeometry.evenly_spaced(
        config.network.rsu_count,
        spacing=ch.rsu_spacing_m,
        highway_offset=ch.highway_offset_m,
        cell_radius=ch.cell_radius_m,
        min_safety_distance=ch.min_safety_distance_m,
        lane_offsets=tuple(ch.lane_offsets_m),
        distance_floor=ch.distance_floor_m,
    )


def _draw_channel(
    config: SimConfig, rngs: dict, carriers_hz: np.ndarray
) -> Tuple[Optional[FadingParams], Optional[ShadowingParams]]:
    """Sinusoid sets of every ``(RSU, cell, channel)`` link."""
    ch = config.channel
    m_cells = config.network.rsu_count
    f_max = doppler_frequency(config.scenario.speed_ms, carriers_hz, 0.0)
    link_f_max = np.broadcast_to(f_max, (m_cells, m_cells, carriers_hz.size))

    # always drawn so disabling one source leaves the other draws unchanged
    fading = FadingParams.draw(
        rngs["fading_aoa"], rngs["fading_phase"], link_f_max, ch.n_paths
    )
    shadow_paths = FadingParams.draw(
        rngs["shadow_aoa"],
        rngs["shadow_phase"],
        link_f_max * ch.shadow_doppler_scale,
        ch.n_paths,
        power=2.0,
    )
    shadowing = ShadowingParams(ch.sigma_l_db, ch.m_l_db, shadow_paths)
    return (
        fading if ch.fast_fading else None,
        shadowing if ch.shadowing else None,
    )


def run_realization(config: SimConfig, seed: int) -> RealizationTrace:
    """One closed-loop run of ``config``; deterministic given ``seed``."""
    validate(ExperimentSpec(sim=config))
    started = time.perf_counter()
    net, ch, ctl, opt, sc = (
        config.network,
        config.channel,
        config.control,
        config.optimizer,
        config.scenario,
    )
    m_cells, n_ch = net.rsu_count, net.obus_per_rsu
    shape = (m_cells, n_ch)
    n_samples, q = net.n_samples, net.window
    t_s = net.sample_period_s

    rngs = dict(
        zip(
            STREAMS,
            (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(5)),
        )
    )
    plan = ChannelPlan.dsrc(n_ch)
    coeffs = AciCoefficients(tuple(ch.aci_coefficients))
    geometry = build_geometry(config)
    obus = scenario_kinematics(
        sc.kind,
        geometry,
        n_ch,
        sc.speed_ms,
        approach_distance=sc.approach_distance_m,
        spacing=sc.platoon_spacing_m,
    )
    fading, shadowing = _draw_channel(config, rngs, plan.centers_hz)

    efficiency = EfficiencyParams(net.bits_per_symbol, net.info_bits_per_symbol)
    weights = UtilityWeights.uniform(shape, net.data_rate_bps, efficiency)
    low, high = power_bounds(plan.max_powers_w, net.p_min_w, net.p_max_w)
    controller = LqgControllerState.initial(
        net.initial_power_w,
        np.broadcast_to(low, shape),
        np.broadcast_to(high, shape),
        omega=ctl.omega,
        n_rt_estimate=ctl.n_rt,
    )
    delay_line = DelayLine(
        shape, rngs["delay"], ctl.delay_min, ctl.delay_max, ctl.delay_period
    )
    accumulator = WindowAccumulator(q)
    offset = TrackingOffset(shape, window=q, span=max(q // 2, 1))
    averaging = t_s if ch.fading_averaging else 0.0
    if sc.optimized:
        start_value = opt.initial_objective
    else:
        start_value = db_to_linear(sc.baseline_db)
    objectives = ObjectiveSinrVector.constant(
        shape, start_value, 0, opt.gamma_min, opt.gamma_max
    )

    record = {
        name: np.zeros((n_samples,) + shape)
        for name in (
            "power", "sinr_raw", "sinr_filtered", "sinr_objective", "utility",
            "road_coordinate", "tracking_offset",
        )
    }
    delays = np.zeros((n_samples,) + shape, dtype=int)
    windows: List[OuterLoopWindow] = []
    filter_state: Optional[AbgFilterState] = None

    for k in range(n_samples):
        if k > 0 and not ch.static:
            obus = advance_positions(obus, t_s)
        t = 0.0 if ch.static else k * t_s
        gains = link_gain(
            geometry,
            obus,
            fading,
            shadowing,
            t,
            exponent=ch.path_loss_exponent,
            averaging=averaging,
        ).power_gain

        p = controller.current
        sample = compute_sinr(
            p, gains, net.noise_w, net.bandwidth_hz, net.data_rate_bps, coeffs
        )
        if filter_state is None:
            filter_state = AbgFilterState.initial(
                sample.raw_sinr,
                ctl.filter_alpha,
                ctl.filter_beta,
                ctl.filter_gamma,
                t_s,
            )
        filtered, filter_state = filter_step(filter_state, sample.raw_sinr)

        record["power"][k] = p
        record["sinr_raw"][k] = sample.raw_sinr
        record["sinr_filtered"][k] = filtered
        record["sinr_objective"][k] = objectives.values
        record["utility"][k] = obu_utility(
            filtered, p, weights.values, net.bits_per_symbol
        )
        record["road_coordinate"][k] = obus.road_coordinate
        record["tracking_offset"][k] = offset.scale

        accumulator.add(p, filtered, gains, sample.denominator)
        if ctl.offset_correction and k % q >= q - offset.span:
            offset.observe(filtered)
        error = qos_error(offset.reference(objectives.values), filtered, p)
        delayed = delay_step(delay_line, error, k)
        delays[k] = delay_line.delays
        lqg_update(controller, delayed)

        if (k + 1) % q == 0:
            window = accumulator.averages()
            accumulator.reset()
            # the first window only holds the ramp up from the initial power
            if ctl.offset_correction and k + 1 > q:
                offset.update(objectives.values)
            offset.discard()
            if sc.optimized and k + 1 < n_samples:
                index = (k + 1) // q
                objectives, mhat = outer_loop_update(
                    window,
                    index,
                    coeffs,
                    weights,
                    net.bits_per_symbol,
                    opt.gamma_min,
                    opt.gamma_max,
                    opt.tol,
                    opt.max_iter,
                )
                windows.append(
                    OuterLoopWindow(
                        index,
                        k + 1,
                        mhat,
                        objectives.solved.copy(),
                        objectives.values.copy(),
                    )
                )

    elapsed = time.perf_counter() - started
    logger.debug("realization seed=%d arm=%s took %.3f s", seed, sc.arm_name, elapsed)
    return RealizationTrace(
        seed=seed,
        arm=sc.arm_name,
        network_utility=record["utility"].sum(axis=(1, 2)),
        delays=delays,
        windows=windows,
        wall_clock_s=elapsed,
        **record,
    )


# =============================================================================
# MONTE CARLO
# =============================================================================


def realization_seeds(config: SimConfig) -> Tuple[int, ...]:
    sc = config.scenario
    return tuple(sc.base_seed + idx for idx in range(sc.realizations))


def run_monte_carlo(
    config: SimConfig,
    keep_traces: bool = True,
    on_realization: Optional[Callable[[int, RealizationTrace], None]] = None,
    seeds: Optional[Sequence[int]] = None,
) -> MonteCarloSummary:
    """Independent realizations with seeds ``base_seed + idx``.

    ``on_realization(idx, trace)`` is called after each run.
    """
    seeds = tuple(seeds) if seeds is not None else realization_seeds(config)
    if not seeds:
        raise ValueError("at least one realization is required")
    arm = config.scenario.arm_name
    logger.info(
        "Monte Carlo %s: scenario %s, %.0f km/h, %d realizations",
        arm,
        config.scenario.kind,
        config.scenario.speed_kmh,
        len(seeds),
    )
    utilities, clocks, traces = [], [], []
    for idx, seed in enumerate(seeds):
        trace = run_realization(config, seed)
        utilities.append(trace.network_utility)
        clocks.append(trace.wall_clock_s)
        if keep_traces:
            traces.append(trace)
        if on_realization is not None:
            on_realization(idx, trace)

    summary = MonteCarloSummary(
        arm=arm,
        seeds=seeds,
        network_utility=np.vstack(utilities),
        wall_clock_s=np.asarray(clocks),
        traces=traces,
    )
    logger.info(
        "Monte Carlo %s done: %.3f +- %.3f s per realization",
        arm,
        summary.wall_clock_mean,
        summary.wall_clock_std,
    )
    return summary
