"""Scenario sweeps, timed trip simulation and their CSV formats."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from windrelay.adaptive import MlpModel, adaptive_update
from windrelay.config import EventSpec, Study
from windrelay.errors import InputError, KOutOfRange
from windrelay.faultsolver import FaultScenario, FaultSolution, FaultType, solve
from windrelay.relay import (
    RelayState,
    ZoneSettings,
    classify,
    relay_step,
    zone2_adaptive,
    zone2_static,
)
from windrelay.windfarm import WindState, power_output

SWEEP_COLUMNS = (
    "speed_mps",
    "p_mw",
    "i_remote_re",
    "i_remote_im",
    "i_relay_re",
    "i_relay_im",
    "k_re",
    "k_im",
    "z_re",
    "z_im",
    "zone_static",
    "zone_adaptive",
)
TRIP_COLUMNS = (
    "time_s",
    "zone",
    "z_re",
    "z_im",
    "z1_re",
    "z1_im",
    "z2_re",
    "z2_im",
    "z3_re",
    "z3_im",
    "wind_speed_mps",
)


def fmt(v: float) -> str:
    return format(float(v), ".17g")


@dataclass(frozen=True)
class SweepRow:
    speed: float
    p_mw: float
    i_remote: complex
    i_relay: complex
    k: complex
    z: complex
    zone_static: int
    zone_adaptive: int

    def cells(self) -> list[str]:
        return [
            fmt(self.speed),
            fmt(self.p_mw),
            fmt(self.i_remote.real),
            fmt(self.i_remote.imag),
            fmt(self.i_relay.real),
            fmt(self.i_relay.imag),
            fmt(self.k.real),
            fmt(self.k.imag),
            fmt(self.z.real),
            fmt(self.z.imag),
            str(self.zone_static),
            str(self.zone_adaptive),
        ]


def wind_state(study: Study, speed: float) -> WindState:
    return WindState(speed, tuple(study.config.wind.per_turbine_offsets_mps))


def settings_for(
    study: Study,
    speed: float,
    telemetry: FaultSolution | None,
    mlp: MlpModel | None = None,
) -> ZoneSettings:
    """Zone settings the adaptive scheme would put in force at ``speed``."""
    online = power_output(study.farm, wind_state(study, speed)) > 0
    relay = study.relay
    if relay.adaptive_source == "mlp":
        return adaptive_update(
            study.settings,
            study.basis,
            online,
            wind_speed=speed,
            mlp=mlp,
            farm=study.farm,
        )
    if telemetry is None:
        return adaptive_update(study.settings, study.basis, False)
    return adaptive_update(
        study.settings,
        study.basis,
        online,
        telemetry=(complex(telemetry.i_remote), complex(telemetry.i_loop)),
        k_mode=relay.k_mode,
    )


def sweep(
    study: Study, speeds: Sequence[float], mode: str | None = None, mlp: MlpModel | None = None
) -> list[SweepRow]:
    mode = mode or study.relay.solver
    rows = []
    for v in speeds:
        ws = wind_state(study, v)
        sol = solve(study.model, study.farm, ws, study.fault, mode)
        adaptive = settings_for(study, v, sol, mlp)
        rows.append(
            SweepRow(
                speed=v,
                p_mw=power_output(study.farm, ws),
                i_remote=complex(sol.i_remote),
                i_relay=complex(sol.i_loop),
                k=sol.k_remote,
                z=sol.z_apparent,
                zone_static=classify(study.settings, sol.z_apparent),
                zone_adaptive=classify(adaptive, sol.z_apparent),
            )
        )
    return rows


def write_csv(path: str | Path, header: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_sweep_csv(path: str | Path, rows: Sequence[SweepRow]) -> None:
    write_csv(path, SWEEP_COLUMNS, [r.cells() for r in rows])


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in SWEEP_COLUMNS if c not in header]
            if missing:
                raise InputError(f"{path}: missing column(s): {', '.join(missing)}")
            raw = list(reader)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    rows = []
    for n, r in enumerate(raw, start=2):
        try:
            rows.append(
                SweepRow(
                    speed=float(r["speed_mps"]),
                    p_mw=float(r["p_mw"]),
                    i_remote=complex(float(r["i_remote_re"]), float(r["i_remote_im"])),
                    i_relay=complex(float(r["i_relay_re"]), float(r["i_relay_im"])),
                    k=complex(float(r["k_re"]), float(r["k_im"])),
                    z=complex(float(r["z_re"]), float(r["z_im"])),
                    zone_static=int(r["zone_static"]),
                    zone_adaptive=int(r["zone_adaptive"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise InputError(f"{path}:{n}: malformed row ({exc})") from exc
    return rows


def adaptive_reach_from_k(study: Study, k: complex) -> complex:
    """Zone-2 reach implied by a sweep row's in-feed factor."""
    try:
        return zone2_adaptive(study.basis.z_ab, study.basis.remote_z1s, k, study.relay.k_mode)
    except KOutOfRange:
        return zone2_static(study.basis.z_ab, study.basis.remote_z1s)


@dataclass(frozen=True)
class TripRecord:
    time: float
    zone: int
    z_at_pickup: complex
    settings: ZoneSettings
    wind_speed: float

    def cells(self) -> list[str]:
        s = self.settings
        return [
            fmt(self.time),
            str(self.zone),
            fmt(self.z_at_pickup.real),
            fmt(self.z_at_pickup.imag),
            fmt(s.z1_reach.real),
            fmt(s.z1_reach.imag),
            fmt(s.z2_reach.real),
            fmt(s.z2_reach.imag),
            fmt(s.z3_reach.real),
            fmt(s.z3_reach.imag),
            fmt(self.wind_speed),
        ]


def write_trips_csv(path: str | Path, records: Sequence[TripRecord]) -> None:
    write_csv(path, TRIP_COLUMNS, [r.cells() for r in records])


def simulate(
    study: Study,
    events: Sequence[EventSpec],
    dt: float,
    t_end: float,
    adaptive: bool,
    mode: str | None = None,
    mlp: MlpModel | None = None,
) -> list[TripRecord]:
    """Step the relay at ``dt`` through a timed event script.

    Trip times are stamped at the end of the step in which the zone timer
    expires. On each wind event the adaptive scheme re-evaluates zone 2 from
    the in-feed currents of the configured reference fault at the new speed.
    """
    mode = mode or study.relay.solver
    if not 0 < dt <= 0.005:
        raise InputError("simulation dt must be in (0, 0.005] s")
    pending = sorted(events, key=lambda e: e.t_s)
    speed = study.wind.mean_speed
    fault: FaultScenario | None = None
    cache: dict[tuple, complex] = {}

    def settings_now() -> ZoneSettings:
        if not adaptive:
            return study.settings
        if study.relay.adaptive_source == "mlp":
            return settings_for(study, speed, None, mlp)
        ref = solve(study.model, study.farm, wind_state(study, speed), study.fault, mode)
        return settings_for(study, speed, ref)

    def measured_z() -> complex | None:
        if fault is None:
            return None
        key = (fault, speed)
        if key not in cache:
            sol = solve(study.model, study.farm, wind_state(study, speed), fault, mode)
            cache[key] = sol.z_apparent
        return cache[key]

    state = RelayState(settings_now())
    pickup: list[complex | None] = [None, None, None]
    records: list[TripRecord] = []
    n_steps = int(round(t_end / dt))
    for step in range(n_steps):
        t = step * dt
        while pending and pending[0].t_s <= t + 1e-12:
            ev = pending.pop(0)
            if ev.action == "fault_on":
                fault = FaultScenario(
                    FaultType(ev.type or study.fault.fault_type.value),
                    ev.line or study.fault.line,
                    study.fault.distance if ev.distance_km is None else ev.distance_km,
                    study.fault.fault_resistance,
                )
                fault.validate(study.model)
            elif ev.action == "fault_off":
                fault = None
            elif ev.action == "wind":
                speed = float(ev.speed_mps)
                state = state.with_settings(settings_now())
            elif ev.action == "reset":
                state = state.reset()
                pickup = [None, None, None]
        z = measured_z()
        prev_clocks = state.clocks
        state, tripped = relay_step(state, z, dt)
        for i, (before, after) in enumerate(zip(prev_clocks, state.clocks)):
            if after == 0.0:
                pickup[i] = None
            elif before == 0.0:
                pickup[i] = z
        if tripped is not None:
            records.append(
                TripRecord(
                    time=round((step + 1) * dt, 12),
                    zone=tripped,
                    z_at_pickup=pickup[tripped - 1],
                    settings=state.settings,
                    wind_speed=speed,
                )
            )
    return records
