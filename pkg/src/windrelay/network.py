"""
Sequence-impedance network model and nodal admittance systems.

The default topology is a grid source at bus A feeding the protected line
A-B, with remote lines B-C1 and B-C2 leaving the junction B and the wind
farm connected at the far end of the shortest remote line.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from functools import cached_property

import numpy as np
import scipy.linalg

from windrelay.errors import NoRemoteLines, SingularNetwork, TopologyError
from windrelay.phasor import Phasor

FAULT_NODE = "F"


class Seq(IntEnum):
    ZERO = 0
    POSITIVE = 1
    NEGATIVE = 2

    @classmethod
    def parse(cls, value: Seq | int | str) -> Seq:
        if isinstance(value, str):
            return cls[value.upper()]
        return cls(value)


def polar(magnitude: float, degrees: float) -> complex:
    return cmath.rect(magnitude, math.radians(degrees))


@dataclass(frozen=True)
class LineSection:
    """Transposed line without shunt capacitance; impedances in ohm/km."""

    id: str
    from_bus: str
    to_bus: str
    length: float
    z1_per_km: complex
    z0_per_km: complex

    def __post_init__(self) -> None:
        if not self.length > 0:
            raise TopologyError(f"line {self.id}: length must be > 0")
        if self.z1_per_km.real < 0 or self.z0_per_km.real < 0:
            raise TopologyError(f"line {self.id}: negative resistance")
        if self.z1_per_km == 0 or self.z0_per_km == 0:
            raise TopologyError(f"line {self.id}: zero impedance")
        if self.from_bus == self.to_bus:
            raise TopologyError(f"line {self.id}: self loop")

    @property
    def z1(self) -> complex:
        return self.z1_per_km * self.length

    @property
    def z0(self) -> complex:
        return self.z0_per_km * self.length

    def impedance(self, seq: Seq) -> complex:
        # static line: negative sequence equals positive
        return self.z0 if seq == Seq.ZERO else self.z1

    def per_km(self, seq: Seq) -> complex:
        return self.z0_per_km if seq == Seq.ZERO else self.z1_per_km

    def other_end(self, bus: str) -> str:
        if bus == self.from_bus:
            return self.to_bus
        if bus == self.to_bus:
            return self.from_bus
        raise TopologyError(f"bus {bus} is not a terminal of line {self.id}")


@dataclass(frozen=True)
class GridSource:
    bus: str
    emf: Phasor
    z1: complex
    z2: complex
    z0: complex

    def __post_init__(self) -> None:
        if self.emf.magnitude <= 0:
            raise TopologyError("grid emf must be non-zero")
        if 0 in (self.z1, self.z2, self.z0):
            raise TopologyError("grid sequence impedances must be non-zero")

    @classmethod
    def from_rating(
        cls,
        bus: str,
        rating_mva: float = 100.0,
        kv: float = 132.0,
        z_pu: float = 0.1,
        x_over_r: float = 10.0,
        z0_over_z1: float = 1.0,
        emf_pu: float = 1.0,
        emf_deg: float = 0.0,
    ) -> GridSource:
        """Thevenin source from a machine rating, impedance in pu on its own base."""
        z_base = kv**2 / rating_mva
        z1 = cmath.rect(z_pu * z_base, math.atan(x_over_r))
        v_ln = kv * 1e3 / math.sqrt(3.0)
        return cls(
            bus=bus,
            emf=Phasor.from_degrees(emf_pu * v_ln, emf_deg),
            z1=z1,
            z2=z1,
            z0=z0_over_z1 * z1,
        )

    def impedance(self, seq: Seq) -> complex:
        return (self.z0, self.z1, self.z2)[seq]


@dataclass(frozen=True)
class NetworkModel:
    buses: tuple[str, ...]
    lines: tuple[LineSection, ...]
    grid: GridSource
    infeed_bus: str
    protected_line: str | None = None
    nominal_kv: float = 132.0
    frequency: float = 60.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))
        if len(set(self.buses)) != len(self.buses):
            raise TopologyError("duplicate bus ids")
        if FAULT_NODE in self.buses:
            raise TopologyError(f"bus id {FAULT_NODE!r} is reserved for the fault node")
        ids = [ln.id for ln in self.lines]
        if len(set(ids)) != len(ids):
            raise TopologyError("duplicate line ids")
        known = set(self.buses)
        for ln in self.lines:
            if ln.from_bus not in known or ln.to_bus not in known:
                raise TopologyError(f"line {ln.id} references an unknown bus")
        if self.grid.bus not in known:
            raise TopologyError(f"grid bus {self.grid.bus} does not exist")
        if self.infeed_bus not in known:
            raise TopologyError(f"infeed bus {self.infeed_bus} does not exist")
        if self.protected_line is not None:
            pl = self.line(self.protected_line)
            if self.grid.bus not in (pl.from_bus, pl.to_bus):
                raise TopologyError("protected line must start at the grid (relay) bus")
        self._check_connected()

    def _check_connected(self) -> None:
        adj: dict[str, set[str]] = {b: set() for b in self.buses}
        for ln in self.lines:
            adj[ln.from_bus].add(ln.to_bus)
            adj[ln.to_bus].add(ln.from_bus)
        seen = {self.grid.bus}
        stack = [self.grid.bus]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if seen != set(self.buses):
            missing = sorted(set(self.buses) - seen)
            raise TopologyError(f"network is not connected; unreachable: {missing}")

    @property
    def v_ln(self) -> float:
        """Nominal line-to-neutral voltage in volts."""
        return self.nominal_kv * 1e3 / math.sqrt(3.0)

    @property
    def relay_bus(self) -> str:
        return self.grid.bus

    @property
    def junction(self) -> str:
        """Far terminal of the protected line (bus B)."""
        if self.protected_line is None:
            raise TopologyError("model has no protected line")
        return self.line(self.protected_line).other_end(self.relay_bus)

    def line(self, line_id: str) -> LineSection:
        for ln in self.lines:
            if ln.id == line_id:
                return ln
        raise TopologyError(f"unknown line {line_id!r}")

    def with_line(self, line: LineSection) -> NetworkModel:
        return replace(self, lines=self.lines + (line,))

    def without_line(self, line_id: str) -> NetworkModel:
        self.line(line_id)
        return replace(self, lines=tuple(ln for ln in self.lines if ln.id != line_id))


@dataclass(frozen=True)
class Branch:
    id: str
    from_node: str
    to_node: str
    z: complex


def split_branches(
    model: NetworkModel, seq: Seq, fault_at: tuple[str, float] | None = None
) -> tuple[tuple[str, ...], tuple[Branch, ...], str | None]:
    """Node list and series branches, splitting the faulted line at the fault.

    Returns the node id carrying the fault: the fault node ``F`` for interior
    faults, the terminal bus itself when the fault sits at a line end.
    """
    nodes = list(model.buses)
    branches: list[Branch] = []
    fault_node = None
    for ln in model.lines:
        z = ln.impedance(seq)
        if fault_at is not None and ln.id == fault_at[0]:
            d = float(fault_at[1])
            if not 0.0 <= d <= ln.length:
                raise TopologyError(f"fault distance {d} outside line {ln.id} (0..{ln.length})")
            if d == 0.0:
                fault_node = ln.from_bus
            elif d == ln.length:
                fault_node = ln.to_bus
            else:
                fault_node = FAULT_NODE
                nodes.append(FAULT_NODE)
                per_km = ln.per_km(seq)
                branches.append(Branch(f"{ln.id}/1", ln.from_bus, FAULT_NODE, per_km * d))
                branches.append(
                    Branch(f"{ln.id}/2", FAULT_NODE, ln.to_bus, per_km * (ln.length - d))
                )
                continue
        branches.append(Branch(ln.id, ln.from_bus, ln.to_bus, z))
    if fault_at is not None and fault_node is None:
        raise TopologyError(f"unknown faulted line {fault_at[0]!r}")
    return tuple(nodes), tuple(branches), fault_node


@dataclass
class SequenceSystem:
    """Nodal admittance system of one sequence network."""

    seq: Seq
    nodes: tuple[str, ...]
    branches: tuple[Branch, ...]
    Y: np.ndarray
    fault_node: str | None = None
    index: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        self.index = {n: i for i, n in enumerate(self.nodes)}

    @cached_property
    def _lu(self) -> tuple[np.ndarray, np.ndarray]:
        # reciprocal condition estimate; islands give an exactly singular Y
        cond = np.linalg.cond(self.Y)
        if not np.isfinite(cond) or cond > 1e13:
            raise SingularNetwork(f"{self.seq.name.lower()}-sequence admittance matrix is singular")
        return scipy.linalg.lu_factor(self.Y)

    def solve(self, injections: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve(self._lu, np.asarray(injections, dtype=complex))

    def unit_response(self, node: str) -> np.ndarray:
        """Column of the impedance matrix: voltages for 1 A injected at ``node``."""
        e = np.zeros(len(self.nodes), dtype=complex)
        e[self.index[node]] = 1.0
        return self.solve(e)

    def branch_currents(self, v: np.ndarray) -> dict[str, complex]:
        return {
            br.id: complex((v[self.index[br.from_node]] - v[self.index[br.to_node]]) / br.z)
            for br in self.branches
        }


def build_sequence_matrix(
    model: NetworkModel, seq: Seq | int | str, fault_at: tuple[str, float] | None = None
) -> SequenceSystem:
    """Stamp the nodal admittance matrix of one sequence network.

    The grid source appears as its sequence impedance to reference. The wind
    farm is a current source and contributes no admittance.
    """
    seq = Seq.parse(seq)
    nodes, branches, fault_node = split_branches(model, seq, fault_at)
    idx = {n: i for i, n in enumerate(nodes)}
    Y = np.zeros((len(nodes), len(nodes)), dtype=complex)
    for br in branches:
        y = 1.0 / br.z
        i, j = idx[br.from_node], idx[br.to_node]
        Y[i, i] += y
        Y[j, j] += y
        Y[i, j] -= y
        Y[j, i] -= y
    g = idx[model.grid.bus]
    Y[g, g] += 1.0 / model.grid.impedance(seq)
    return SequenceSystem(seq, nodes, branches, Y, fault_node)


def thevenin_impedance(model: NetworkModel, bus: str, seq: Seq | int | str) -> complex:
    system = build_sequence_matrix(model, seq)
    if bus not in system.index:
        raise TopologyError(f"unknown bus {bus!r}")
    return complex(system.unit_response(bus)[system.index[bus]])


def remote_lines(model: NetworkModel, junction: str) -> list[LineSection]:
    """Lines leaving ``junction`` other than the protected line."""
    return [
        ln
        for ln in model.lines
        if junction in (ln.from_bus, ln.to_bus) and ln.id != model.protected_line
    ]


def min_remote_line_z1(model: NetworkModel, junction: str) -> tuple[str, complex]:
    candidates = remote_lines(model, junction)
    if not candidates:
        raise NoRemoteLines(f"bus {junction} has no remote lines")
    best = min(candidates, key=lambda ln: (abs(ln.z1), ln.id))
    return best.id, best.z1


# Default study system. Magnitudes 30 ohm / 82 ohm for A-B are taken as
# given; the angles are typical overhead-line values.
DEFAULT_Z1_PER_KM = polar(0.30, 80.0)
DEFAULT_Z0_PER_KM = polar(0.82, 75.0)
DEFAULT_FAULT_LINE = "BC2"
DEFAULT_FAULT_DISTANCE_KM = 16.0
DEFAULT_BOUNDARY_FRACTION = 0.999


def default_network(
    fault_distance_km: float = DEFAULT_FAULT_DISTANCE_KM,
    boundary_fraction: float = DEFAULT_BOUNDARY_FRACTION,
    ab_length_km: float = 100.0,
    bc2_length_km: float = 60.0,
    infeed_bus: str = "C1",
    nominal_kv: float = 132.0,
) -> NetworkModel:
    """132 kV, 60 Hz study system with the wind farm at C1.

    B-C1 is sized so that a fault ``fault_distance_km`` from B on B-C2 lies at
    ``boundary_fraction`` of the remote part of the static zone-2 reach
    (half of the shortest remote line).
    """
    if not 0 < boundary_fraction <= 1:
        raise ValueError("boundary_fraction must be in (0, 1]")
    bc1 = 2.0 * fault_distance_km / boundary_fraction
    if bc1 >= bc2_length_km or fault_distance_km >= bc2_length_km:
        raise ValueError("B-C2 must be longer than B-C1 and the fault distance")
    lines = (
        LineSection("AB", "A", "B", ab_length_km, DEFAULT_Z1_PER_KM, DEFAULT_Z0_PER_KM),
        LineSection("BC1", "B", "C1", bc1, DEFAULT_Z1_PER_KM, DEFAULT_Z0_PER_KM),
        LineSection("BC2", "B", "C2", bc2_length_km, DEFAULT_Z1_PER_KM, DEFAULT_Z0_PER_KM),
    )
    return NetworkModel(
        buses=("A", "B", "C1", "C2"),
        lines=lines,
        grid=GridSource.from_rating("A", 100.0, nominal_kv),
        infeed_bus=infeed_bus,
        protected_line="AB",
        nominal_kv=nominal_kv,
        frequency=60.0,
    )
