"""Aggregated wind farm: power curve and in-feed current behaviour."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from windrelay.errors import InputError, ZeroVoltage
from windrelay.phasor import ZERO, Phasor


@dataclass(frozen=True)
class WindFarm:
    """Identical full-converter turbines behind one connection bus.

    ``fault_current_limit`` is the converter current ceiling in per-unit of
    rated current. The fault behaviour (constant power, unity power factor,
    clamped magnitude) is a modelling choice, not measured PMSG data.
    """

    n_turbines: int = 5
    rated_power_per_turbine: float = 3.0
    cut_in: float = 4.0
    rated_speed: float = 12.0
    cut_out: float = 25.0
    fault_current_limit: float = 1.2
    connection_bus: str | None = None
    nominal_kv: float = 132.0

    def __post_init__(self) -> None:
        if not 0 < self.cut_in < self.rated_speed < self.cut_out:
            raise InputError("need 0 < cut_in < rated_speed < cut_out")
        if self.n_turbines < 1 or self.rated_power_per_turbine <= 0:
            raise InputError("need n_turbines >= 1 and positive turbine rating")
        if self.fault_current_limit < 1:
            raise InputError("fault_current_limit must be >= 1 pu")

    @property
    def rated_power(self) -> float:
        """Total rated power, MW."""
        return self.n_turbines * self.rated_power_per_turbine

    @property
    def rated_current(self) -> float:
        """Rated current at nominal voltage, A."""
        v_ln = self.nominal_kv * 1e3 / math.sqrt(3.0)
        return self.rated_power * 1e6 / (3.0 * v_ln)

    def turbine_power(self, v: float) -> float:
        """Single-turbine output in MW at hub speed ``v``."""
        if v < self.cut_in or v >= self.cut_out:
            return 0.0
        if v >= self.rated_speed:
            return self.rated_power_per_turbine
        frac = (v**3 - self.cut_in**3) / (self.rated_speed**3 - self.cut_in**3)
        return self.rated_power_per_turbine * frac


@dataclass(frozen=True)
class WindState:
    mean_speed: float
    per_turbine_offsets: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "per_turbine_offsets", tuple(self.per_turbine_offsets))

    def speeds(self, farm: WindFarm) -> list[float]:
        offsets = self.per_turbine_offsets or (0.0,) * farm.n_turbines
        if len(offsets) != farm.n_turbines:
            raise InputError(
                f"expected {farm.n_turbines} turbine offsets, got {len(offsets)}"
            )
        return [self.mean_speed + o for o in offsets]


def power_output(farm: WindFarm, state: WindState) -> float:
    """Farm output in MW."""
    return sum(farm.turbine_power(v) for v in state.speeds(farm))


def prefault_current(farm: WindFarm, state: WindState, v_bus: Phasor) -> Phasor:
    """Unity power factor injection ``P / (3 |V|)`` in phase with ``v_bus``."""
    p = power_output(farm, state)
    if v_bus.magnitude == 0:
        raise ZeroVoltage("prefault injection undefined at zero voltage")
    if p == 0:
        return ZERO
    return Phasor(p * 1e6 / (3.0 * v_bus.magnitude), v_bus.angle)


def fault_current(
    farm: WindFarm, state: WindState, v_bus: Phasor, prefault_angle: float = 0.0
) -> Phasor:
    """Constant-power injection clamped at the converter current ceiling.

    With the connection bus collapsed to zero volts the injection is the
    clamp value at ``prefault_angle``.
    """
    p = power_output(farm, state)
    if p == 0:
        return ZERO
    limit = farm.fault_current_limit * farm.rated_current
    if v_bus.magnitude == 0:
        return Phasor(limit, prefault_angle)
    return Phasor(min(p * 1e6 / (3.0 * v_bus.magnitude), limit), v_bus.angle)
