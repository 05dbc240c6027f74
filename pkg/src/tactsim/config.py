"""Run configuration: JSON file <-> validated dataclasses.

Keys carry their units (``height_m``, ``max_op_power_w``). Unknown keys are
rejected so that typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .learner import HyperParams, read_snapshot
from .radio import BaseStation, ChannelParams, default_roster
from .simulation import SCHEMES
from .traffic import Hotspot, TemporalProfile

MAX_BS = 12


class ConfigError(ValueError):
    pass


@dataclass
class ProfileConfig:
    kind: str = "static"
    lambda_var: float = 0.0
    period_stages: int = 24
    phase_stages: float = 0.0


@dataclass
class HotspotConfig:
    x_min_m: float
    y_min_m: float
    x_max_m: float
    y_max_m: float
    multiplier: float


@dataclass
class TrafficConfig:
    width_m: float = 2000.0
    height_m: float = 2000.0
    cell_size_m: float = 50.0
    # arrival_density counts flows per area_unit_m2; see README for the calibration
    area_unit_m2: float = 250.0
    arrival_density: float = 5e-6
    file_size_bits: float = 8e5
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    hotspots: list = field(default_factory=list)
    noise_sigma: float = 0.0
    # quantize the state from all-on reference traffic instead of the traffic each BS actually served
    state_from_offered_traffic: bool = True


@dataclass
class StationConfig:
    id: int
    kind: str
    x_m: float
    y_m: float
    height_m: float
    max_tx_power_w: float
    max_op_power_w: float
    constant_fraction: float = 0.5


@dataclass
class ChannelConfig:
    bandwidth_hz: float = 1.25e6
    carrier_freq_mhz: float = 2000.0
    interference_factor: float = 0.01
    noise_floor_w: float = 1e-13
    mobile_height_m: float = 1.5
    urban_correction_db: float = 3.0


@dataclass
class NetworkConfig:
    roster: Optional[list] = None  # None selects the built-in 5 macro + 5 micro layout
    constant_fraction: float = 0.5  # applied to the built-in roster only
    active_ids: Optional[list] = None  # restrict the roster to these BS ids
    channel: ChannelConfig = field(default_factory=ChannelConfig)


@dataclass
class LearnerConfig:
    scheme: str = "tact"
    temperature: float = 1000.0
    discount: float = 0.001
    transfer_factor: float = 0.2
    projection_bound: float = 1e5
    varsigma_w_s: float = 0.0
    stages: int = 1500
    seed: int = 0
    transfer_snapshot: Optional[str] = None
    # constant transfer weight replacing theta**k; 0.0 reduces TACT to classical AC
    transfer_rate_override: Optional[float] = None


@dataclass
class OutputConfig:
    checkpoints: list = field(default_factory=lambda: [100, 300, 500, 1000, 1500])
    write_stage_csv: bool = True


@dataclass
class RunConfig:
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    # --- construction -------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        cfg = _build(cls, data, "")
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        cfg = cls.from_dict(data)
        snap = cfg.learner.transfer_snapshot
        if snap and not Path(snap).is_absolute():
            cfg.learner.transfer_snapshot = str((Path(path).parent / snap).resolve())
            cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def with_overrides(self, overrides: dict) -> "RunConfig":
        data = self.to_dict()
        for dotted, value in overrides.items():
            set_path(data, dotted, value)
        return RunConfig.from_dict(data)

    # --- derived objects ----------------------------------------------

    def stations(self) -> list[BaseStation]:
        net = self.network
        if net.roster is None:
            roster = default_roster(net.constant_fraction)
        else:
            roster = [
                BaseStation(id=s.id, kind=s.kind, position=(s.x_m, s.y_m), height_m=s.height_m,
                            max_tx_power_w=s.max_tx_power_w, max_op_power_w=s.max_op_power_w,
                            constant_fraction=s.constant_fraction)
                for s in net.roster
            ]
        roster.sort(key=lambda b: b.id)
        if net.active_ids is not None:
            wanted = set(net.active_ids)
            roster = [b for b in roster if b.id in wanted]
        return roster

    def channel(self) -> ChannelParams:
        return ChannelParams(**dataclasses.asdict(self.network.channel))

    def profile(self) -> TemporalProfile:
        p = self.traffic.profile
        return TemporalProfile(p.kind, self.traffic.arrival_density, p.lambda_var, p.period_stages, p.phase_stages)

    def hotspots(self) -> list[Hotspot]:
        return [Hotspot(**dataclasses.asdict(h)) for h in self.traffic.hotspots]

    def state_mode(self) -> str:
        return "offered" if self.traffic.state_from_offered_traffic else "realized"

    def hyper(self) -> HyperParams:
        ln = self.learner
        return HyperParams(ln.temperature, ln.discount, ln.transfer_factor, ln.projection_bound, ln.varsigma_w_s)

    def config_hash(self) -> str:
        return _digest(self.to_dict())

    def traffic_hash(self) -> str:
        return _digest(dataclasses.asdict(self.traffic))

    # --- validation ---------------------------------------------------

    def validate(self) -> None:
        t, ln = self.traffic, self.learner
        try:
            self.profile()
            self.hotspots()
            self.hyper()
            self.channel()
            roster = self.stations()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if min(t.width_m, t.height_m, t.cell_size_m, t.area_unit_m2, t.file_size_bits) <= 0:
            raise ConfigError("traffic dimensions, area unit and file size must be positive")
        if t.arrival_density < 0 or t.noise_sigma < 0:
            raise ConfigError("arrival_density and noise_sigma must be >= 0")
        if not isinstance(t.state_from_offered_traffic, bool):
            raise ConfigError("state_from_offered_traffic must be true or false")
        if not roster:
            raise ConfigError("network has no base stations")
        if len(roster) > MAX_BS:
            raise ConfigError(f"{len(roster)} BSs exceed the tabular limit of {MAX_BS}")
        ids = [b.id for b in roster]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate BS ids")
        if self.network.active_ids is not None and len(set(self.network.active_ids)) != len(roster):
            raise ConfigError("active_ids names BSs that are not in the roster")
        for b in roster:
            x, y = b.position
            if not (0 <= x <= t.width_m and 0 <= y <= t.height_m):
                raise ConfigError(f"BS {b.id} at {b.position} lies outside the region")
        if ln.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if ln.stages < 0:
            raise ConfigError("stages must be >= 0")
        if ln.transfer_rate_override is not None and not 0 <= ln.transfer_rate_override <= 1:
            raise ConfigError("transfer_rate_override must lie in [0, 1]")
        if any(int(c) <= 0 for c in self.output.checkpoints):
            raise ConfigError("checkpoints must be positive stage numbers")
        if ln.transfer_snapshot:
            path = Path(ln.transfer_snapshot)
            if not path.exists():
                raise ConfigError(f"transfer snapshot {path} does not exist")
            try:
                snap = read_snapshot(path)
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"bad snapshot {path}: {exc}") from exc
            if snap.n_bs != len(roster):
                raise ConfigError(f"snapshot has {snap.n_bs} BSs, config has {len(roster)}")


_NESTED = {
    RunConfig: {"traffic": TrafficConfig, "network": NetworkConfig, "learner": LearnerConfig,
                "output": OutputConfig},
    TrafficConfig: {"profile": ProfileConfig, "hotspots": [HotspotConfig]},
    NetworkConfig: {"channel": ChannelConfig, "roster": [StationConfig]},
}


def _build(cls, data: Any, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where or 'config'}: unknown keys {unknown}")
    nested = _NESTED.get(cls, {})
    kwargs = {}
    for key, value in data.items():
        sub = nested.get(key)
        path = f"{where}.{key}" if where else key
        if isinstance(sub, list) and value is not None:
            if not isinstance(value, list):
                raise ConfigError(f"{path}: expected a list")
            value = [_build(sub[0], v, f"{path}[{i}]") for i, v in enumerate(value)]
        elif sub is not None and value is not None:
            value = _build(sub, value, path)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where or 'config'}: {exc}") from exc


def set_path(data: dict, dotted: str, value) -> None:
    node = data
    keys = dotted.split(".")
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"unknown parameter path {dotted!r}")
        node = node[k]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise ConfigError(f"unknown parameter path {dotted!r}")
    node[keys[-1]] = copy.deepcopy(value)


def _digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
