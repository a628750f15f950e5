"""Strict JSON scenario configuration and its translation to model objects."""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from windrelay.errors import InputError, WindRelayError
from windrelay.faultsolver import FaultScenario, FaultType
from windrelay.network import (
    DEFAULT_FAULT_DISTANCE_KM,
    DEFAULT_FAULT_LINE,
    GridSource,
    LineSection,
    NetworkModel,
    default_network,
)
from windrelay.relay import SettingBasis, ZoneSettings, static_settings
from windrelay.windfarm import WindFarm, WindState


class ConfigError(InputError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)


class ImpedanceSpec(_Strict):
    """Either rectangular ``{"r", "x"}`` or polar ``{"mag", "deg"}``."""

    r: Optional[float] = None
    x: Optional[float] = None
    mag: Optional[float] = None
    deg: Optional[float] = None

    @model_validator(mode="after")
    def _one_form(self) -> ImpedanceSpec:
        rect = self.r is not None and self.x is not None
        pol = self.mag is not None and self.deg is not None
        partial = sum(v is not None for v in (self.r, self.x, self.mag, self.deg))
        if rect == pol or partial != 2:
            raise ValueError("give exactly one of {r, x} or {mag, deg}")
        return self

    def to_complex(self) -> complex:
        if self.mag is not None:
            return cmath.rect(self.mag, math.radians(self.deg))
        return complex(self.r, self.x)

    @classmethod
    def polar(cls, mag: float, deg: float) -> ImpedanceSpec:
        return cls(mag=mag, deg=deg)


class LineSpec(_Strict):
    id: str
    from_bus: str = Field(alias="from")
    to_bus: str = Field(alias="to")
    length_km: float = Field(gt=0)
    z1_ohm_per_km: ImpedanceSpec
    z0_ohm_per_km: ImpedanceSpec


class GridSpec(_Strict):
    bus: str = "A"
    rating_mva: float = Field(100.0, gt=0)
    z_pu: float = Field(0.1, gt=0)
    x_over_r: float = Field(10.0, gt=0)
    z0_over_z1: float = Field(1.0, gt=0)
    emf_pu: float = Field(1.0, gt=0)
    emf_deg: float = 0.0


class NetworkSpec(_Strict):
    nominal_kv: float = Field(132.0, gt=0)
    frequency_hz: float = Field(60.0, gt=0)
    buses: list[str]
    lines: list[LineSpec]
    grid: GridSpec = GridSpec()
    infeed_bus: str
    protected_line: str

    @model_validator(mode="after")
    def _references(self) -> NetworkSpec:
        buses = set(self.buses)
        for ln in self.lines:
            for end in (ln.from_bus, ln.to_bus):
                if end not in buses:
                    raise ValueError(f"line {ln.id!r} references unknown bus {end!r}")
        if self.grid.bus not in buses:
            raise ValueError(f"grid.bus {self.grid.bus!r} is not a bus")
        if self.infeed_bus not in buses:
            raise ValueError(f"infeed_bus {self.infeed_bus!r} is not a bus")
        if self.protected_line not in {ln.id for ln in self.lines}:
            raise ValueError(f"protected_line {self.protected_line!r} is not a line")
        return self


class WindFarmSpec(_Strict):
    n_turbines: int = Field(5, ge=1)
    rated_power_per_turbine_mw: float = Field(3.0, gt=0)
    cut_in_mps: float = 4.0
    rated_speed_mps: float = 12.0
    cut_out_mps: float = 25.0
    fault_current_limit_pu: float = Field(1.2, ge=1.0)


class WindSpec(_Strict):
    online: bool = True
    mean_speed_mps: float = Field(12.0, ge=0)
    per_turbine_offsets_mps: list[float] = []


class FaultSpec(_Strict):
    type: Literal["slg", "three_phase"] = "slg"
    line: str = DEFAULT_FAULT_LINE
    distance_km: float = Field(DEFAULT_FAULT_DISTANCE_KM, ge=0)
    resistance_ohm: float = Field(0.0, ge=0)


class RelaySpec(_Strict):
    solver: Literal["full", "reduced"] = "full"
    k_mode: Literal["complex", "scalar"] = "complex"
    adaptive: bool = False
    adaptive_source: Literal["telemetry", "mlp"] = "telemetry"
    model_file: Optional[str] = None
    zone1_fraction: float = Field(0.85, gt=0, lt=1)
    zone3_fraction: float = Field(0.8, gt=0.5)
    t2_s: float = Field(0.3, gt=0)
    t3_s: float = Field(1.0, gt=0)


class SweepSpec(_Strict):
    start_mps: Optional[float] = None
    stop_mps: Optional[float] = None
    step_mps: Optional[float] = Field(None, gt=0)
    speeds_mps: Optional[list[float]] = None

    @model_validator(mode="after")
    def _one_form(self) -> SweepSpec:
        rng = (self.start_mps, self.stop_mps, self.step_mps)
        if self.speeds_mps is not None:
            if any(v is not None for v in rng):
                raise ValueError("give either speeds_mps or start/stop/step, not both")
        elif any(v is None for v in rng):
            raise ValueError("start_mps, stop_mps and step_mps are all required")
        return self

    def grid(self) -> list[float]:
        if self.speeds_mps is not None:
            speeds = [float(v) for v in self.speeds_mps]
        else:
            n = int(math.floor((self.stop_mps - self.start_mps) / self.step_mps + 1e-9)) + 1
            speeds = [round(self.start_mps + i * self.step_mps, 10) for i in range(max(n, 0))]
        if not speeds:
            raise ConfigError("sweep: speed grid is empty")
        if len(set(speeds)) != len(speeds):
            raise ConfigError("sweep: duplicate speeds")
        if any(not 0.0 <= v <= 30.0 for v in speeds):
            raise ConfigError("sweep: speeds must lie in [0, 30] m/s")
        return speeds


class TrainingSpec(_Strict):
    train_fraction: float = Field(0.65, ge=0.6, le=0.7)
    learning_rate: float = Field(0.05, gt=0)
    max_epochs: int = Field(20000, ge=1)
    target_rmse_ohm: float = Field(0.0, ge=0)
    seed: int = 1


class EventSpec(_Strict):
    t_s: float = Field(ge=0)
    action: Literal["fault_on", "fault_off", "wind", "reset"]
    speed_mps: Optional[float] = Field(None, ge=0)
    line: Optional[str] = None
    distance_km: Optional[float] = Field(None, ge=0)
    type: Optional[Literal["slg", "three_phase"]] = None

    @model_validator(mode="after")
    def _fields(self) -> EventSpec:
        if self.action == "wind" and self.speed_mps is None:
            raise ValueError("wind event needs speed_mps")
        if self.action != "wind" and self.speed_mps is not None:
            raise ValueError("speed_mps only applies to wind events")
        if self.action != "fault_on" and any(
            v is not None for v in (self.line, self.distance_km, self.type)
        ):
            raise ValueError("line/distance_km/type only apply to fault_on events")
        return self


class SimulationSpec(_Strict):
    dt_s: float = Field(0.001, gt=0, le=0.005)
    t_end_s: float = Field(1.5, gt=0)
    events: list[EventSpec] = []


class OutputSpec(_Strict):
    sweep_csv: Optional[str] = None
    plot_svg: Optional[str] = None
    dataset_csv: Optional[str] = None
    model_file: Optional[str] = None
    curve_csv: Optional[str] = None
    trips_csv: Optional[str] = None


class ScenarioConfig(_Strict):
    description: str = ""
    network: Optional[NetworkSpec] = None
    windfarm: WindFarmSpec = WindFarmSpec()
    wind: WindSpec = WindSpec()
    fault: FaultSpec = FaultSpec()
    relay: RelaySpec = RelaySpec()
    sweep: Optional[SweepSpec] = None
    training: TrainingSpec = TrainingSpec()
    simulation: SimulationSpec = SimulationSpec()
    outputs: OutputSpec = OutputSpec()


def _format_validation(path: str, exc: ValidationError) -> str:
    lines = [f"{path}: invalid configuration"]
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"  {loc}: {err['msg']}")
    return "\n".join(lines)


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_validation(source, exc)) from exc


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config(text, str(path))


def dump_config(cfg: ScenarioConfig) -> str:
    data = cfg.model_dump(by_alias=True, exclude_none=True)
    return json.dumps(data, indent=2) + "\n"


@dataclass(frozen=True)
class Study:
    """Model objects built from a validated configuration."""

    config: ScenarioConfig
    model: NetworkModel
    farm: WindFarm
    wind: WindState
    fault: FaultScenario
    basis: SettingBasis
    settings: ZoneSettings

    @property
    def relay(self) -> RelaySpec:
        return self.config.relay


def build_network(spec: NetworkSpec | None) -> NetworkModel:
    if spec is None:
        return default_network()
    lines = tuple(
        LineSection(
            ln.id,
            ln.from_bus,
            ln.to_bus,
            ln.length_km,
            ln.z1_ohm_per_km.to_complex(),
            ln.z0_ohm_per_km.to_complex(),
        )
        for ln in spec.lines
    )
    g = spec.grid
    grid = GridSource.from_rating(
        g.bus, g.rating_mva, spec.nominal_kv, g.z_pu, g.x_over_r, g.z0_over_z1, g.emf_pu, g.emf_deg
    )
    return NetworkModel(
        buses=tuple(spec.buses),
        lines=lines,
        grid=grid,
        infeed_bus=spec.infeed_bus,
        protected_line=spec.protected_line,
        nominal_kv=spec.nominal_kv,
        frequency=spec.frequency_hz,
    )


def build_study(cfg: ScenarioConfig) -> Study:
    try:
        model = build_network(cfg.network)
        wf = cfg.windfarm
        farm = WindFarm(
            n_turbines=wf.n_turbines,
            rated_power_per_turbine=wf.rated_power_per_turbine_mw,
            cut_in=wf.cut_in_mps,
            rated_speed=wf.rated_speed_mps,
            cut_out=wf.cut_out_mps,
            fault_current_limit=wf.fault_current_limit_pu,
            connection_bus=model.infeed_bus,
            nominal_kv=model.nominal_kv,
        )
        speed = cfg.wind.mean_speed_mps if cfg.wind.online else 0.0
        wind = WindState(speed, tuple(cfg.wind.per_turbine_offsets_mps))
        wind.speeds(farm)
        fault = FaultScenario(
            FaultType(cfg.fault.type), cfg.fault.line, cfg.fault.distance_km, cfg.fault.resistance_ohm
        )
        fault.validate(model)
        basis = SettingBasis.from_model(model)
        settings = static_settings(
            basis,
            cfg.relay.zone1_fraction,
            cfg.relay.zone3_fraction,
            cfg.relay.t2_s,
            cfg.relay.t3_s,
        )
    except WindRelayError as exc:
        raise ConfigError(f"configuration rejected: {exc}") from exc
    return Study(cfg, model, farm, wind, fault, basis, settings)


def default_config() -> ScenarioConfig:
    """Configuration reproducing the default study system explicitly."""
    model = default_network()
    lines = [
        LineSpec(
            id=ln.id,
            from_bus=ln.from_bus,
            to_bus=ln.to_bus,
            length_km=ln.length,
            z1_ohm_per_km=ImpedanceSpec.polar(0.30, 80.0),
            z0_ohm_per_km=ImpedanceSpec.polar(0.82, 75.0),
        )
        for ln in model.lines
    ]
    network = NetworkSpec(
        nominal_kv=model.nominal_kv,
        frequency_hz=model.frequency,
        buses=list(model.buses),
        lines=lines,
        grid=GridSpec(bus=model.grid.bus),
        infeed_bus=model.infeed_bus,
        protected_line=model.protected_line,
    )
    events = [
        EventSpec(t_s=0.0, action="wind", speed_mps=12.0),
        EventSpec(t_s=0.1, action="fault_on"),
    ]
    return ScenarioConfig(
        description=(
            "132 kV, 60 Hz study system: 100 MVA grid source at A, protected line A-B, "
            "remote lines B-C1 (shortest) and B-C2, 5 x 3 MW wind farm at C1, "
            "SLG fault 16 km from B on B-C2 at the zone-2 end point."
        ),
        network=network,
        sweep=SweepSpec(start_mps=4.0, stop_mps=25.0, step_mps=0.5),
        simulation=SimulationSpec(events=events),
    )


def speed_grid(cfg: ScenarioConfig) -> list[float]:
    if cfg.sweep is None:
        raise ConfigError("configuration has no sweep section")
    return cfg.sweep.grid()

