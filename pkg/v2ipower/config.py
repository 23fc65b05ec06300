"""Experiment configuration.

A run is fully determined by a :class:`SimConfig` (network, channel, control,
optimizer and scenario sections) plus an :class:`OutputConfig`. Defaults are the
reference network parameters, so an empty config file reproduces them.

Configs are TOML documents with one table per section::

    [control]
    omega = 0.1

    [scenario]
    kind = "B"
    speed_kmh = 90

Dotted keys (``control.omega = 0.1``) work too. dB quantities carry a ``_db`` or
``_dbm`` suffix; everything is converted to linear units / W at use.

NEVER read configuration from module globals inside the simulator; pass the
config objects down explicitly.
"""

from __future__ import annotations

import math
import re
import tomllib
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, Optional, Tuple

from . import constants as C
from .phy import db_to_linear, dbm_to_watt, kmh_to_ms


class ConfigError(ValueError):
    """Invalid configuration, with the offending dotted key and line if known."""

    def __init__(
        self, message: str, key: Optional[str] = None, line: Optional[int] = None
    ) -> None:
        self.message = message
        self.key = key
        self.line = line
        super().__init__(str(self))

    def __str__(self) -> str:
        where = self.key or "config"
        if self.line is not None:
            where += f" (line {self.line})"
        return f"{where}: {self.message}"


# =============================================================================
# SECTIONS
# =============================================================================


@dataclass
class NetworkConfig:
    """Cell layout, link budget, OFDM framing and the two loop rates."""

    rsu_count: int = C.DEFAULT_RSU_COUNT
    obus_per_rsu: int = C.DEFAULT_OBUS_PER_RSU
    noise_dbm: float = C.DEFAULT_NOISE_DBM
    bandwidth_hz: float = C.DEFAULT_BANDWIDTH_HZ
    data_rate_bps: float = C.DEFAULT_DATA_RATE_BPS
    bits_per_symbol: int = C.DEFAULT_BITS_PER_SYMBOL
    info_bits_per_symbol: int = C.DEFAULT_INFO_BITS_PER_SYMBOL
    sample_rate_hz: float = C.DEFAULT_SAMPLE_RATE_HZ
    objective_rate_hz: float = C.DEFAULT_OBJECTIVE_RATE_HZ
    window: int = C.DEFAULT_WINDOW
    duration_s: float = C.DEFAULT_DURATION_S
    p_min_w: float = C.DEFAULT_P_MIN_W
    p_max_w: float = C.DEFAULT_P_MAX_W
    initial_power_w: float = C.DEFAULT_INITIAL_POWER_W

    @property
    def noise_w(self) -> float:
        return dbm_to_watt(self.noise_dbm)

    @property
    def processing_gain(self) -> float:
        return self.bandwidth_hz / self.data_rate_bps

    @property
    def sample_period_s(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))


@dataclass
class ChannelConfig:
    """Road geometry, propagation and interference model."""

    cell_radius_m: float = C.DEFAULT_CELL_RADIUS_M
    highway_offset_m: float = C.DEFAULT_HIGHWAY_OFFSET_M
    rsu_spacing_m: float = C.DEFAULT_RSU_SPACING_M
    min_safety_distance_m: float = C.DEFAULT_MIN_SAFETY_DISTANCE_M
    lane_offsets_m: Tuple[float, ...] = (0.0, 4.0)
    distance_floor_m: float = 1.0
    path_loss_exponent: float = C.DEFAULT_PATH_LOSS_EXPONENT
    n_paths: int = C.DEFAULT_N_PATHS
    sigma_l_db: float = C.DEFAULT_SIGMA_L_DB
    m_l_db: float = C.DEFAULT_M_L_DB
    shadow_doppler_scale: float = C.DEFAULT_SHADOW_DOPPLER_SCALE
    fast_fading: bool = True
    fading_averaging: bool = True
    shadowing: bool = True
    static: bool = False
    aci_coefficients: Tuple[float, ...] = C.ACI_COEFFICIENTS


@dataclass
class ControlConfig:
    """Inner loop: LQG gain, delay model and the SINR smoothing filter."""

    omega: float = C.DEFAULT_OMEGA
    n_rt: int = C.DEFAULT_N_RT
    delay_min: int = C.DEFAULT_DELAY_MIN
    delay_max: int = C.DEFAULT_DELAY_MAX
    delay_period: int = C.DEFAULT_DELAY_PERIOD
    latency_cap_s: float = C.DEFAULT_LATENCY_CAP_S
    filter_alpha: float = C.DEFAULT_FILTER_GAINS[0]
    filter_beta: float = C.DEFAULT_FILTER_GAINS[1]
    filter_gamma: float = C.DEFAULT_FILTER_GAINS[2]
    offset_correction: bool = True


@dataclass
class OptimizerConfig:
    """Outer loop: objective SINR bounds and root-solver settings."""

    gamma_min_db: float = 0.0
    gamma_max_db: float = 12.0
    initial_objective_db: float = C.DEFAULT_INITIAL_OBJECTIVE_DB
    tol: float = C.DEFAULT_SOLVER_TOL
    max_iter: int = C.DEFAULT_SOLVER_MAX_ITER

    @property
    def gamma_min(self) -> float:
        return db_to_linear(self.gamma_min_db)

    @property
    def gamma_max(self) -> float:
        return db_to_linear(self.gamma_max_db)

    @property
    def initial_objective(self) -> float:
        return db_to_linear(self.initial_objective_db)


@dataclass
class ScenarioConfig:
    """Mobility scenario, objective mode and Monte Carlo protocol.

    ``baseline_db`` set to a number turns the outer loop off and fixes every
    objective at that SINR; None runs the optimizer.
    """

    kind: str = "A"
    speed_kmh: float = C.DEFAULT_SPEED_KMH
    baseline_db: Optional[float] = None
    baselines_db: Tuple[float, ...] = C.DEFAULT_BASELINES_DB
    realizations: int = C.DEFAULT_REALIZATIONS
    base_seed: int = C.DEFAULT_BASE_SEED
    approach_distance_m: float = 200.0
    platoon_spacing_m: float = 25.0

    @property
    def speed_ms(self) -> float:
        return kmh_to_ms(self.speed_kmh)

    @property
    def optimized(self) -> bool:
        return self.baseline_db is None

    @property
    def arm_name(self) -> str:
        if self.optimized:
            return "optimized"
        return f"fixed_{self.baseline_db:g}dB"


@dataclass
class OutputConfig:
    """Which artifacts to write and where, and which arms to run.

    ``compare`` runs the optimized arm plus every baseline; ``baselines_only``
    (without ``compare``) runs just the baselines in ``scenario.baselines_db``.
    """

    directory: str = "results"
    traces: bool = True
    summary: bool = True
    meta: bool = True
    compare: bool = False
    baselines_only: bool = False
    verbosity: int = 0


@dataclass
class SimConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)

    def with_baseline(self, baseline_db: Optional[float]) -> "SimConfig":
        """Copy of this config running a fixed objective (or the optimizer)."""
        return replace(self, scenario=replace(self.scenario, baseline_db=baseline_db))


@dataclass
class ExperimentSpec:
    sim: SimConfig = field(default_factory=SimConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def arms(self) -> Tuple[SimConfig, ...]:
        """The configs to run: the configured arm, the baselines, or all of them."""
        baselines = tuple(
            self.sim.with_baseline(b) for b in self.sim.scenario.baselines_db
        )
        if self.output.compare:
            return (self.sim.with_baseline(None),) + baselines
        if self.output.baselines_only:
            return baselines
        return (self.sim,)


SECTIONS = ("network", "channel", "control", "optimizer", "scenario", "output")


def get_default_config() -> ExperimentSpec:
    """A fresh spec with every default in place."""
    return ExperimentSpec()


# =============================================================================
# VALIDATION
# =============================================================================


def _require(ok: bool, key: str, message: str) -> None:
    if not ok:
        raise ConfigError(message, key=key)


def validate(spec: ExperimentSpec) -> ExperimentSpec:
    """Check cross-field invariants; raises :class:`ConfigError` on the first one."""
    net = spec.sim.network
    ch = spec.sim.channel
    ctl = spec.sim.control
    opt = spec.sim.optimizer
    sc = spec.sim.scenario
    out = spec.output

    _require(net.rsu_count >= 1, "network.rsu_count", "must be at least 1")
    _require(
        1 <= net.obus_per_rsu <= len(C.DSRC_CHANNELS),
        "network.obus_per_rsu",
        f"must lie in [1, {len(C.DSRC_CHANNELS)}] (one OBU per channel)",
    )
    for key in ("bandwidth_hz", "data_rate_bps", "sample_rate_hz",
                "objective_rate_hz", "duration_s"):
        _require(getattr(net, key) > 0, f"network.{key}", "must be positive")
    _require(
        0 < net.info_bits_per_symbol < net.bits_per_symbol,
        "network.info_bits_per_symbol",
        "must satisfy 0 < info_bits_per_symbol < bits_per_symbol",
    )
    _require(net.window >= 1, "network.window", "must be at least 1")
    _require(
        math.isclose(
            net.sample_rate_hz / net.objective_rate_hz, net.window, rel_tol=1e-9
        ),
        "network.window",
        "must equal sample_rate_hz / objective_rate_hz",
    )
    span = net.duration_s * net.sample_rate_hz
    _require(
        math.isfinite(span) and span <= C.MAX_SAMPLES,
        "network.duration_s",
        f"must give at most {C.MAX_SAMPLES} samples at sample_rate_hz",
    )
    _require(
        net.n_samples >= net.window and net.n_samples % net.window == 0,
        "network.duration_s",
        f"must cover a whole number of {net.window}-sample windows",
    )
    _require(net.p_min_w >= 0, "network.p_min_w", "must be non-negative")
    _require(net.p_max_w > net.p_min_w, "network.p_max_w", "must exceed p_min_w")
    _require(
        net.p_min_w <= net.initial_power_w <= net.p_max_w,
        "network.initial_power_w",
        "must lie within [p_min_w, p_max_w]",
    )

    _require(ch.cell_radius_m > 0, "channel.cell_radius_m", "must be positive")
    _require(ch.highway_offset_m >= 0, "channel.highway_offset_m", "must be >= 0")
    _require(ch.rsu_spacing_m > 0, "channel.rsu_spacing_m", "must be positive")
    _require(
        ch.min_safety_distance_m > 0, "channel.min_safety_distance_m", "must be > 0"
    )
    _require(ch.distance_floor_m > 0, "channel.distance_floor_m", "must be > 0")
    _require(len(ch.lane_offsets_m) == 2, "channel.lane_offsets_m", "needs 2 lanes")
    _require(ch.n_paths >= 1, "channel.n_paths", "must be at least 1")
    _require(ch.sigma_l_db >= 0, "channel.sigma_l_db", "must be non-negative")
    _require(
        ch.shadow_doppler_scale >= 0, "channel.shadow_doppler_scale", "must be >= 0"
    )
    _require(
        len(ch.aci_coefficients) >= net.obus_per_rsu
        and all(0.0 <= c <= 1.0 for c in ch.aci_coefficients),
        "channel.aci_coefficients",
        "needs one value in [0, 1] per channel",
    )

    _require(
        0 < ctl.omega < 1, "control.omega", "must lie in the open interval (0, 1)"
    )
    _require(ctl.n_rt >= 0, "control.n_rt", "must be non-negative")
    _require(
        0 <= ctl.delay_min <= ctl.delay_max,
        "control.delay_max",
        "must satisfy 0 <= delay_min <= delay_max",
    )
    _require(ctl.delay_period >= 1, "control.delay_period", "must be at least 1")
    _require(
        ctl.delay_max / net.sample_rate_hz <= ctl.latency_cap_s + 1e-12,
        "control.delay_max",
        f"exceeds the {ctl.latency_cap_s} s latency cap",
    )
    _require(
        0 < ctl.filter_alpha <= 1, "control.filter_alpha", "must lie in (0, 1]"
    )
    _require(
        ctl.filter_beta >= 0 and ctl.filter_gamma >= 0,
        "control.filter_beta",
        "filter gains must be non-negative",
    )

    _require(
        opt.gamma_min_db <= opt.gamma_max_db,
        "optimizer.gamma_min_db",
        "must not exceed gamma_max_db",
    )
    _require(
        opt.gamma_min_db <= opt.initial_objective_db <= opt.gamma_max_db,
        "optimizer.initial_objective_db",
        "must lie within [gamma_min_db, gamma_max_db]",
    )
    _require(opt.tol > 0, "optimizer.tol", "must be positive")
    _require(opt.max_iter >= 1, "optimizer.max_iter", "must be at least 1")

    _require(sc.kind in ("A", "B", "C"), "scenario.kind", "must be one of A, B, C")
    _require(sc.speed_kmh >= 0, "scenario.speed_kmh", "must be non-negative")
    _require(sc.realizations >= 1, "scenario.realizations", "must be at least 1")
    _require(sc.base_seed >= 0, "scenario.base_seed", "must be non-negative")
    _require(
        sc.platoon_spacing_m >= ch.min_safety_distance_m,
        "scenario.platoon_spacing_m",
        "must be at least channel.min_safety_distance_m",
    )
    _require(
        not (out.compare or out.baselines_only) or len(sc.baselines_db) > 0,
        "scenario.baselines_db",
        "must not be empty when baselines are run",
    )
    if sc.baseline_db is not None:
        _require(
            opt.gamma_min_db <= sc.baseline_db <= opt.gamma_max_db,
            "scenario.baseline_db",
            "must lie within [gamma_min_db, gamma_max_db]",
        )
    _require(out.verbosity >= 0, "output.verbosity", "must be non-negative")
    return spec


# =============================================================================
# TOML PARSING
# =============================================================================


def _section_objects(spec: ExperimentSpec) -> Dict[str, Any]:
    return {
        "network": spec.sim.network,
        "channel": spec.sim.channel,
        "control": spec.sim.control,
        "optimizer": spec.sim.optimizer,
        "scenario": spec.sim.scenario,
        "output": spec.output,
    }


def _find_line(text: str, section: str, key: Optional[str]) -> Optional[int]:
    """1-based line where ``section.key`` (or the section header) is defined."""
    current = None
    dotted = re.compile(rf"^\s*{re.escape(section)}\s*\.\s*{re.escape(key or '')}\s*=")
    plain = re.compile(rf"^\s*{re.escape(key or '')}\s*=")
    header = re.compile(r"^\s*\[\s*([A-Za-z0-9_\-]+)\s*\]")
    for number, line in enumerate(text.splitlines(), start=1):
        m = header.match(line)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return number
            continue
        if key is None:
            if re.match(rf"^\s*{re.escape(section)}\s*\.", line):
                return number
            continue
        if current is None and dotted.match(line):
            return number
        if current == section and plain.match(line):
            return number
    return None


def _coerce(value: Any, annotation: str, key: str) -> Any:
    """Check ``value`` against a field annotation and convert to the field type."""

    def fail(expected: str) -> ConfigError:
        return ConfigError(
            f"expected {expected}, got {type(value).__name__} {value!r}", key=key
        )

    if annotation.startswith("Optional["):
        return _coerce(value, annotation[len("Optional["):-1], key)
    if annotation == "bool":
        if not isinstance(value, bool):
            raise fail("a boolean")
        return value
    if annotation == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise fail("an integer")
        return value
    if annotation == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise fail("a number")
        if not math.isfinite(value):
            raise fail("a finite number")
        return float(value)
    if annotation == "str":
        if not isinstance(value, str):
            raise fail("a string")
        return value
    if annotation.startswith("Tuple[float"):
        if not isinstance(value, list):
            raise fail("an array of numbers")
        return tuple(_coerce(v, "float", key) for v in value)
    raise ConfigError(f"unsupported field type {annotation}", key=key)


def parse_config(text: str) -> ExperimentSpec:
    """Parse and validate a TOML config; omitted keys keep their defaults.

    Raises:
        ConfigError: on syntax errors, unknown sections or keys, type mismatches
            and invariant violations
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(
            f"invalid TOML: {exc}", line=int(m.group(1)) if m else None
        ) from exc

    spec = ExperimentSpec()
    targets = _section_objects(spec)
    try:
        for section, table in data.items():
            if section not in targets:
                raise ConfigError("unknown section", key=section)
            if not isinstance(table, dict):
                raise ConfigError("expected a table of keys", key=section)
            obj = targets[section]
            known = {f.name: f for f in fields(obj)}
            for key, value in table.items():
                path = f"{section}.{key}"
                if key not in known:
                    raise ConfigError("unknown key", key=path)
                annotation = str(known[key].type)
                setattr(obj, key, _coerce(value, annotation, path))
        validate(spec)
    except ConfigError as exc:
        if exc.line is None and exc.key is not None:
            section, _, key = exc.key.partition(".")
            exc.line = _find_line(text, section, key or None)
            exc.args = (str(exc),)
        raise
    return spec


def load_config(path) -> ExperimentSpec:
    """Read and parse a UTF-8 config file.

    Raises:
        OSError: the file cannot be read
        ConfigError: the file is not UTF-8 or not a valid config
    """
    with open(path, "rb") as f:
        raw = f.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(
            f"not valid UTF-8 (byte {exc.start})",
            line=raw.count(b"\n", 0, exc.start) + 1,
        ) from exc
    return parse_config(text)


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    return str(value)


def config_to_toml(spec: ExperimentSpec) -> str:
    """Serialize every field so that ``parse_config`` rebuilds an equal spec."""
    lines = []
    for section, obj in _section_objects(spec).items():
        lines.append(f"[{section}]")
        for f in fields(obj):
            value = getattr(obj, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)
