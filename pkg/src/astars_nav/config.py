"""Scenario configuration: nested dataclasses and a strict TOML loader.

Every field has a default taken from the standard desk scene, so an empty
file is a valid configuration. Unknown keys are rejected.
"""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .constants import (ASTARS_POSITION, GPS_ORBIT_RADIUS, INDOOR_RECEIVER, L1_WAVELENGTH,
                        URBAN_RECEIVER)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AstarsSection:
    elements_per_row: int = 40
    rows: int = 40
    element_spacing: float = 0.125
    amplification: float = 4.0
    centroid: tuple = ASTARS_POSITION
    wavelength: float = L1_WAVELENGTH
    phase_hardware: float = 0.6
    phase_amplifier: float = 0.4
    phase_noise_std: float = 0.05


@dataclass(frozen=True)
class ReceiverSpec:
    name: str
    position: tuple
    mode: str = "R"


DEFAULT_RECEIVERS = (
    ReceiverSpec("urban", URBAN_RECEIVER, "R"),
    ReceiverSpec("indoor", INDOOR_RECEIVER, "E"),
)


@dataclass(frozen=True)
class ConstellationSection:
    count: int = 12
    elevation_min_deg: float = 15.0
    elevation_max_deg: float = 85.0
    arc_reflection_deg: float = 360.0
    arc_transmission_deg: float = 270.0
    orbit_radius: float = GPS_ORBIT_RADIUS
    pdop_mask: float = 0.0  # 0 disables the availability mask


@dataclass(frozen=True)
class ClockSection:
    sat_clock_std: float = 1e-6  # s, broadcast and compensated
    gamma_sign: str = "random"  # random | positive | negative


@dataclass(frozen=True)
class ErrorSection:
    meas_noise_std: float = 0.003
    multipath_std: float = 0.01
    quantization_step: float = math.pi / 1024
    aoa_std: float = -1.0  # rad; negative derives it from the link budget
    aoa_scale: float = 1.0
    snapshots: int = 1000
    beam_error: bool = True
    phase_shift: bool = True
    ambiguity_mode: str = "known"  # known | dd
    ambiguity_range: int = 1000
    ratio_threshold: float = 3.0
    base_offset: tuple = (120.0, -80.0, 60.0)
    code_std: float = 0.05
    dd_phase_std: float = 0.01  # cycles
    dd_epochs: int = 10


@dataclass(frozen=True)
class TimeSyncSection:
    max_delay_variation: float = 10e-9
    meas_std: float = 1e-4
    meas_rate: float = 500.0


@dataclass(frozen=True)
class LinkSection:
    tx_power: float = 0.0575
    pathloss_exp_sat: float = 2.0
    pathloss_exp_rx: float = 2.0
    noise_power: float = 8.19e-15
    rician_k: float = 10.0


@dataclass(frozen=True)
class SolverSection:
    convergence_norm: float = 1e-4
    max_iterations: int = 20
    max_condition: float = 1e12
    initial_offset_m: float = 1000.0


@dataclass(frozen=True)
class ScenarioConfig:
    astars: AstarsSection = AstarsSection()
    receivers: tuple = DEFAULT_RECEIVERS
    constellation: ConstellationSection = ConstellationSection()
    clocks: ClockSection = ClockSection()
    errors: ErrorSection = ErrorSection()
    timesync: TimeSyncSection = TimeSyncSection()
    link: LinkSection = LinkSection()
    solver: SolverSection = SolverSection()
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        validate(self)

    def receiver(self, name: str) -> ReceiverSpec:
        for r in self.receivers:
            if r.name == name:
                return r
        raise ConfigError(f"no receiver named {name!r}")


def _fail(msg):
    raise ConfigError(msg)


def validate(cfg: ScenarioConfig) -> None:
    a, c, e = cfg.astars, cfg.constellation, cfg.errors
    if cfg.trials < 1:
        _fail("trials must be >= 1")
    if not 0 <= cfg.seed < 2 ** 64:
        _fail("seed must be a 64-bit unsigned integer")
    if c.count < 4:
        _fail("constellation.count must be >= 4")
    if not 0 <= c.elevation_min_deg < c.elevation_max_deg <= 90:
        _fail("elevation range must satisfy 0 <= min < max <= 90")
    for arc in (c.arc_reflection_deg, c.arc_transmission_deg):
        if not 0 < arc <= 360:
            _fail("azimuth arcs must lie in (0, 360] degrees")
    if c.pdop_mask < 0:
        _fail("pdop_mask must be >= 0")
    if a.elements_per_row < 2 or a.rows < 1 or not a.element_spacing > 0:
        _fail("invalid array dimensions")
    if a.amplification < 1:
        _fail("amplification must be >= 1")
    if not a.wavelength > 0:
        _fail("wavelength must be positive")
    if len(a.centroid) != 3:
        _fail("astars.centroid needs three coordinates")
    if not cfg.receivers:
        _fail("at least one receiver is required")
    names = [r.name for r in cfg.receivers]
    if len(set(names)) != len(names):
        _fail("receiver names must be unique")
    for r in cfg.receivers:
        if len(r.position) != 3:
            _fail(f"receiver {r.name!r} needs three coordinates")
        if str(r.mode).upper() not in ("E", "R"):
            _fail(f"receiver {r.name!r}: mode must be 'E' or 'R'")
    if cfg.clocks.gamma_sign not in ("random", "positive", "negative"):
        _fail("clocks.gamma_sign must be random, positive or negative")
    for name in ("meas_noise_std", "multipath_std", "quantization_step", "code_std", "dd_phase_std"):
        if getattr(e, name) < 0:
            _fail(f"errors.{name} must be >= 0")
    if e.ambiguity_mode not in ("known", "dd"):
        _fail("errors.ambiguity_mode must be 'known' or 'dd'")
    if e.snapshots < 1 or e.dd_epochs < 1:
        _fail("snapshots and dd_epochs must be >= 1")
    if e.ratio_threshold < 1:
        _fail("ratio_threshold must be >= 1")
    t = cfg.timesync
    if t.max_delay_variation < 0 or t.meas_std < 0 or not t.meas_rate > 0:
        _fail("invalid time synchronisation parameters")
    s = cfg.solver
    if not s.convergence_norm > 0 or s.max_iterations < 1 or s.initial_offset_m < 0:
        _fail("invalid solver parameters")


_SECTIONS = {
    "astars": AstarsSection,
    "constellation": ConstellationSection,
    "clocks": ClockSection,
    "errors": ErrorSection,
    "timesync": TimeSyncSection,
    "link": LinkSection,
    "solver": SolverSection,
}
_TUPLE_FIELDS = {"centroid", "position", "base_offset"}


def _coerce(cls, data: dict, where: str, base=None):
    if not isinstance(data, dict):
        _fail(f"[{where}] must be a table")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        _fail(f"unknown key(s) in [{where}]: {', '.join(unknown)}")
    kw = {}
    for k, v in data.items():
        ref = getattr(base, k) if base is not None else None
        if k in _TUPLE_FIELDS:
            v = tuple(float(x) for x in v)
        elif isinstance(ref, bool):
            if not isinstance(v, bool):
                _fail(f"{where}.{k} must be true or false")
        elif isinstance(ref, int):
            if isinstance(v, bool) or not isinstance(v, int):
                _fail(f"{where}.{k} must be an integer")
        elif isinstance(ref, float):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                _fail(f"{where}.{k} must be a number")
            v = float(v)
        elif isinstance(ref, str) and not isinstance(v, str):
            _fail(f"{where}.{k} must be a string")
        kw[k] = v
    return replace(base, **kw) if base is not None else cls(**kw)


def config_from_dict(data: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Build a config from parsed TOML, starting from `base` or the defaults."""
    base = base or ScenarioConfig()
    top = {"trials", "seed", "receivers", *_SECTIONS}
    unknown = sorted(set(data) - top)
    if unknown:
        _fail(f"unknown top-level key(s): {', '.join(unknown)}")
    kw = {}
    for name, cls in _SECTIONS.items():
        if name in data:
            kw[name] = _coerce(cls, data[name], name, getattr(base, name))
    if "receivers" in data:
        rx = data["receivers"]
        if not isinstance(rx, list):
            _fail("receivers must be an array of tables")
        out = []
        for i, r in enumerate(rx):
            if not isinstance(r, dict) or "name" not in r or "position" not in r:
                _fail(f"receivers[{i}] needs a name and a position")
            out.append(_coerce(ReceiverSpec, r, f"receivers[{i}]"))
        kw["receivers"] = tuple(out)
    for k in ("trials", "seed"):
        if k in data:
            if isinstance(data[k], bool) or not isinstance(data[k], int):
                _fail(f"{k} must be an integer")
            kw[k] = data[k]
    try:
        return replace(base, **kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _read_toml(path) -> dict:
    p = Path(path)
    try:
        with p.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from exc


def load_config(path) -> ScenarioConfig:
    """Read a scenario file. Raises ConfigError or OSError."""
    return config_from_dict(_read_toml(path))


SWEEP_VARIABLES = ("sat_count", "timing_ns", "elements_per_row", "wavelength")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    receiver: str = ""
    stage: str = "receiver"  # receiver | astars

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            _fail(f"unknown sweep variable {self.variable!r}")
        if len(self.values) == 0:
            _fail("sweep values must be nonempty")
        if self.stage not in ("receiver", "astars"):
            _fail("stage must be 'receiver' or 'astars'")
        if self.receiver:
            self.base.receiver(self.receiver)
        for v in self.values:
            apply_sweep_value(self.base, self.variable, v)

    @property
    def receiver_name(self) -> str:
        return self.receiver or self.base.receivers[0].name


def apply_sweep_value(cfg: ScenarioConfig, variable: str, value) -> ScenarioConfig:
    """Config with one swept parameter replaced (validated)."""
    try:
        if variable == "sat_count":
            if int(value) != value:
                _fail("sat_count values must be integers")
            return replace(cfg, constellation=replace(cfg.constellation, count=int(value)))
        if variable == "timing_ns":
            return replace(cfg, timesync=replace(cfg.timesync, max_delay_variation=float(value) * 1e-9))
        if variable == "elements_per_row":
            if int(value) != value:
                _fail("elements_per_row values must be integers")
            return replace(cfg, astars=replace(cfg.astars, elements_per_row=int(value)))
        if variable == "wavelength":
            return replace(cfg, astars=replace(cfg.astars, wavelength=float(value)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {variable} value {value!r}: {exc}") from exc
    _fail(f"unknown sweep variable {variable!r}")


def load_sweep_spec(path) -> SweepSpec:
    """Sweep file: `variable`, `values`, optional `base` path, `receiver`,
    `stage`, and a `[scenario]` table overriding the base config."""
    p = Path(path)
    data = _read_toml(p)
    allowed = {"variable", "values", "base", "receiver", "stage", "scenario"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        _fail(f"unknown sweep key(s): {', '.join(unknown)}")
    if "variable" not in data or "values" not in data:
        _fail("sweep file needs `variable` and `values`")
    base = ScenarioConfig()
    if "base" in data:
        bp = Path(data["base"])
        if not bp.is_absolute():
            bp = p.parent / bp
        base = load_config(bp)
    if "scenario" in data:
        base = config_from_dict(data["scenario"], base)
    return SweepSpec(variable=data["variable"], values=tuple(data["values"]), base=base,
                     receiver=data.get("receiver", ""), stage=data.get("stage", "receiver"))


def config_as_dict(cfg: ScenarioConfig) -> dict:
    return asdict(cfg)
