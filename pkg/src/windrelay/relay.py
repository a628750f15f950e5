"""
Distance relay: zone-2 setting rules, mho membership and zone timers.

Zone 1 covers 85 % of the protected line, zone 3 the protected line plus
80 % of the shortest remote line. Only zone 2 adapts to in-feed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal, Mapping, Sequence

from windrelay.errors import (
    EmptyRemotes,
    InputError,
    KOutOfRange,
    NestingViolation,
    ZeroRelayCurrent,
)
from windrelay.faultsolver import residual_compensation
from windrelay.network import NetworkModel, remote_lines
from windrelay.phasor import Phasor

K_REMOTE_BOUNDS = (0.5, 20.0)
MAX_DT = 0.005
ZONE1_FRACTION = 0.85
ZONE3_FRACTION = 0.8
T2_DEFAULT = 0.3
T3_DEFAULT = 1.0
_TIMER_EPS = 1e-9

KMode = Literal["complex", "scalar"]


@dataclass(frozen=True)
class ZoneSettings:
    z1_reach: complex
    z2_reach: complex
    z3_reach: complex
    t1: float = 0.0
    t2: float = T2_DEFAULT
    t3: float = T3_DEFAULT
    k0: complex = 0j
    fallback: bool = False  # set when an adaptive update fell back to the static reach

    def __post_init__(self) -> None:
        m1, m2, m3 = abs(self.z1_reach), abs(self.z2_reach), abs(self.z3_reach)
        if not 0 < m1 < m2 < m3:
            raise NestingViolation(
                f"zone reaches must satisfy 0 < |z1| < |z2| < |z3|, got {m1:.6g}, {m2:.6g}, {m3:.6g}"
            )
        if not self.t1 == 0.0 < self.t2 < self.t3:
            raise InputError("zone delays must satisfy t1 = 0 < t2 < t3")

    @property
    def reaches(self) -> tuple[complex, complex, complex]:
        return (self.z1_reach, self.z2_reach, self.z3_reach)

    @property
    def delays(self) -> tuple[float, float, float]:
        return (self.t1, self.t2, self.t3)

    def with_zone2(self, reach: complex, fallback: bool = False) -> ZoneSettings:
        return replace(self, z2_reach=reach, fallback=fallback)


@dataclass(frozen=True)
class SettingBasis:
    """Line data the zone formulas are evaluated from."""

    z_ab: complex
    remote_z1s: Mapping[str, complex]
    k0: complex

    @classmethod
    def from_model(cls, model: NetworkModel) -> SettingBasis:
        pl = model.line(model.protected_line)
        remotes = {ln.id: ln.z1 for ln in remote_lines(model, model.junction)}
        return cls(pl.z1, remotes, residual_compensation(pl.z1, pl.z0))

    @property
    def min_remote(self) -> complex:
        return _min_remote(self.remote_z1s)


def _min_remote(remote_z1s: Sequence[complex] | Mapping[str, complex]) -> complex:
    if isinstance(remote_z1s, Mapping):
        if not remote_z1s:
            raise EmptyRemotes("no remote lines")
        # ties go to the lexicographically smaller line id
        return min(remote_z1s.items(), key=lambda kv: (abs(kv[1]), kv[0]))[1]
    values = list(remote_z1s)
    if not values:
        raise EmptyRemotes("no remote lines")
    return min(values, key=abs)


def zone2_static(z_ab: complex, remote_z1s: Sequence[complex] | Mapping[str, complex]) -> complex:
    """Protected line plus half of the shortest remote line."""
    return z_ab + 0.5 * _min_remote(remote_z1s)


def infeed_factor(i_remote: Phasor | complex, i_relay: Phasor | complex) -> complex:
    """``1 + I_remote / I_relay`` as a complex ratio."""
    i_relay = complex(i_relay)
    if i_relay == 0:
        raise ZeroRelayCurrent("relay current is zero")
    return 1.0 + complex(i_remote) / i_relay


def zone2_adaptive(
    z_ab: complex,
    remote_z1s: Sequence[complex] | Mapping[str, complex],
    k_remote: complex,
    k_mode: KMode = "complex",
) -> complex:
    """Zone-2 reach with the remote half-line scaled by the in-feed factor."""
    k = complex(k_remote)
    lo, hi = K_REMOTE_BOUNDS
    if not (math.isfinite(k.real) and math.isfinite(k.imag)) or not lo <= abs(k) <= hi:
        raise KOutOfRange(f"|k_remote| = {abs(k):.6g} outside [{lo}, {hi}]")
    if k_mode == "scalar":
        k = complex(abs(k))
    elif k_mode != "complex":
        raise InputError(f"unknown k mode {k_mode!r}")
    return z_ab + 0.5 * _min_remote(remote_z1s) * k


def mho_contains(reach: complex, z: complex) -> bool:
    """Circle through the origin with diameter ``reach``; boundary is inside."""
    if reach == 0:
        raise InputError("mho reach must be non-zero")
    return abs(z - reach / 2) <= abs(reach) / 2


def classify(settings: ZoneSettings, z: complex | None) -> int:
    """Lowest zone whose characteristic contains ``z``; 0 when none does."""
    if z is None:
        return 0
    for zone, reach in enumerate(settings.reaches, start=1):
        if mho_contains(reach, z):
            return zone
    return 0


def static_settings(
    basis: SettingBasis | NetworkModel,
    zone1_fraction: float = ZONE1_FRACTION,
    zone3_fraction: float = ZONE3_FRACTION,
    t2: float = T2_DEFAULT,
    t3: float = T3_DEFAULT,
) -> ZoneSettings:
    if isinstance(basis, NetworkModel):
        basis = SettingBasis.from_model(basis)
    return ZoneSettings(
        z1_reach=zone1_fraction * basis.z_ab,
        z2_reach=zone2_static(basis.z_ab, basis.remote_z1s),
        z3_reach=basis.z_ab + zone3_fraction * basis.min_remote,
        t2=t2,
        t3=t3,
        k0=basis.k0,
    )


@dataclass(frozen=True)
class RelayState:
    settings: ZoneSettings
    clocks: tuple[float, float, float] = (0.0, 0.0, 0.0)
    tripped: int | None = None

    def reset(self) -> RelayState:
        return RelayState(self.settings)

    def with_settings(self, settings: ZoneSettings) -> RelayState:
        return replace(self, settings=settings)


def relay_step(state: RelayState, z: complex | None, dt: float) -> tuple[RelayState, int | None]:
    """Advance the zone timers by ``dt`` with measured impedance ``z``.

    A zone's clock accumulates while ``z`` stays inside it and resets to zero
    on dropout. Returns the zone that tripped in this step, if any; the trip
    latches until :meth:`RelayState.reset`.
    """
    if not 0 < dt <= MAX_DT:
        raise InputError(f"dt must be in (0, {MAX_DT}] s")
    if state.tripped is not None:
        return state, None
    clocks = tuple(
        c + dt if z is not None and mho_contains(reach, z) else 0.0
        for c, reach in zip(state.clocks, state.settings.reaches)
    )
    for zone, (clock, delay) in enumerate(zip(clocks, state.settings.delays), start=1):
        if clock > 0 and clock >= delay - _TIMER_EPS:
            return replace(state, clocks=clocks, tripped=zone), zone
    return replace(state, clocks=clocks), None
