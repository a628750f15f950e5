"""
Relay-point quantities and apparent impedance for SLG and three-phase faults.

Two solvers share the :class:`FaultSolution` result type:

* :func:`solve_reduced` - the single-loop in-feed circuit
  ``E_A = Z_A*I_relay + (Z_f + R_f)*(I_relay + I_remote)``.
* :func:`solve_fault` - zero/positive/negative sequence networks with the
  wind farm as a positive-sequence current source, iterated until its
  injection is consistent with the voltage at its terminal.

:func:`oracle_nodal_solve` is an independent nodal solver used to check the
second one.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from windrelay.errors import (
    DegenerateLoop,
    InputError,
    NoConvergence,
    SingularNetwork,
    TopologyError,
    ZeroLoopCurrent,
)
from windrelay.network import FAULT_NODE, NetworkModel, Seq, build_sequence_matrix
from windrelay.phasor import ZERO, Phasor, ThreePhaseSet, balanced, seq_to_abc
from windrelay.windfarm import WindFarm, WindState, fault_current, prefault_current

FIXED_POINT_TOL_PU = 1e-6
FIXED_POINT_MAX_ITER = 50


class FaultType(str, Enum):
    SLG = "slg"
    THREE_PHASE = "three_phase"


@dataclass(frozen=True)
class FaultScenario:
    """Fault on ``line`` at ``distance`` km from the line's from-bus."""

    fault_type: FaultType
    line: str
    distance: float
    fault_resistance: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "fault_type", FaultType(self.fault_type))
        if self.distance < 0:
            raise InputError("fault distance must be >= 0")
        if self.fault_resistance < 0:
            raise InputError("fault resistance must be >= 0")

    def validate(self, model: NetworkModel) -> None:
        ln = model.line(self.line)
        if self.distance > ln.length:
            raise InputError(
                f"fault at {self.distance} km lies beyond line {ln.id} ({ln.length} km)"
            )


@dataclass(frozen=True)
class RelayMeasurement:
    v_abc: ThreePhaseSet
    i_abc: ThreePhaseSet

    @property
    def i_residual(self) -> Phasor:
        return Phasor.from_complex(self.i_abc.as_array().sum())


@dataclass(frozen=True)
class NetworkState:
    """Sequence-domain solution of the full model, kept for verification."""

    nodes: tuple[str, ...]
    voltages: np.ndarray  # (3, n): zero, positive, negative
    injections: np.ndarray  # (3, n), excluding the grid source
    branch_currents: dict[str, np.ndarray]  # each (3,)
    fault_node: str
    fault_currents: np.ndarray  # (3,) sequence currents into the fault
    iterations: int


@dataclass(frozen=True)
class FaultSolution:
    relay: RelayMeasurement
    i_remote: Phasor
    z_apparent: complex
    k_remote: complex
    i_loop: Phasor
    state: NetworkState | None = None


def residual_compensation(z1: complex, z0: complex) -> complex:
    """Ground-loop factor k0 = (Z0 - Z1) / (3 Z1)."""
    return (z0 - z1) / (3.0 * z1)


def loop_current(m: RelayMeasurement, k0: complex) -> complex:
    return complex(m.i_abc.a) + k0 * complex(m.i_residual)


def apparent_impedance(m: RelayMeasurement, k0: complex) -> complex:
    """Phase-a ground-loop impedance ``Va / (Ia + k0*Ires)``."""
    loop = loop_current(m, k0)
    if loop == 0:
        raise ZeroLoopCurrent("relay loop current is zero")
    return complex(m.v_abc.a) / loop


def infeed_ratio(i_remote: complex, i_relay: complex) -> complex:
    if i_relay == 0:
        return complex("nan")
    return 1.0 + i_remote / i_relay


def solve_reduced(
    z_a: complex,
    z_f: complex,
    e_a: Phasor | complex,
    i_remote: Phasor | complex,
    r_fault: float = 0.0,
) -> FaultSolution:
    """Single-loop in-feed circuit with bus A held at ``e_a``.

    ``z_a`` is the relay-to-junction impedance and ``z_f`` the junction-to-fault
    impedance. The measured quantities are positive-sequence (balanced), so
    the apparent impedance is ``e_a / I_relay``.
    """
    e = complex(e_a)
    i_rem = complex(i_remote)
    loop = z_a + z_f + r_fault
    if loop == 0:
        raise DegenerateLoop("z_a + z_f + r_fault is zero")
    i_relay = (e - (z_f + r_fault) * i_rem) / loop
    if i_relay == 0:
        raise ZeroLoopCurrent("in-feed cancels the relay current")
    meas = RelayMeasurement(balanced(e), balanced(i_relay))
    return FaultSolution(
        relay=meas,
        i_remote=Phasor.from_complex(i_rem),
        z_apparent=e / i_relay,
        k_remote=1.0 + i_rem / i_relay,
        i_loop=Phasor.from_complex(i_relay),
    )


def _fault_currents(
    fault_type: FaultType, v_pre: complex, zff: np.ndarray, r_fault: float
) -> np.ndarray:
    """Sequence currents (0, 1, 2) drawn by the fault from the network."""
    if fault_type is FaultType.SLG:
        denom = zff[0] + zff[1] + zff[2] + 3.0 * r_fault
        if denom == 0:
            raise DegenerateLoop("sequence networks sum to zero impedance")
        i0 = v_pre / denom
        return np.array([i0, i0, i0])
    denom = zff[1] + r_fault
    if denom == 0:
        raise DegenerateLoop("bolted fault at a zero-impedance node")
    return np.array([0.0, v_pre / denom, 0.0])


def solve_fault(
    model: NetworkModel,
    farm: WindFarm,
    wind: WindState,
    scenario: FaultScenario,
    k0: complex | None = None,
    tol_pu: float = FIXED_POINT_TOL_PU,
    max_iter: int = FIXED_POINT_MAX_ITER,
) -> FaultSolution:
    """Sequence-network fault solution seen from the relay at the grid bus."""
    if model.protected_line is None:
        raise TopologyError("model has no protected line")
    if farm.connection_bus is not None and farm.connection_bus != model.infeed_bus:
        raise InputError(
            f"wind farm bus {farm.connection_bus} differs from model infeed bus {model.infeed_bus}"
        )
    scenario.validate(model)
    fault_at = (scenario.line, scenario.distance)
    systems = [build_sequence_matrix(model, s, fault_at) for s in Seq]
    pos = systems[Seq.POSITIVE]
    nodes = pos.nodes
    fnode = pos.fault_node
    assert fnode is not None
    fi = pos.index[fnode]
    wi = pos.index[model.infeed_bus]

    src = np.zeros(len(nodes), dtype=complex)
    src[pos.index[model.grid.bus]] = complex(model.grid.emf) / model.grid.z1
    v_src = pos.solve(src)
    zcol = [systems[s].unit_response(fnode) for s in Seq]
    zff = np.array([zcol[s][fi] for s in Seq])
    w_resp = pos.solve(np.eye(len(nodes), dtype=complex)[wi])

    # start from the healthy-network voltage at the farm terminal
    pre_v = Phasor.from_complex(v_src[wi])
    i_w = complex(prefault_current(farm, wind, pre_v)) if pre_v.magnitude > 0 else 0j
    pre_v = Phasor.from_complex(v_src[wi] + w_resp[wi] * i_w)
    i_w = complex(prefault_current(farm, wind, pre_v)) if pre_v.magnitude > 0 else 0j
    prefault_angle = pre_v.angle

    # A bolted fault between the source and the farm leaves the terminal with
    # no network-driven voltage; a unity-pf current then has no consistent
    # angle, so the clamp is held at the pre-fault angle as for zero voltage.
    i_f0 = _fault_currents(scenario.fault_type, v_src[fi], zff, scenario.fault_resistance)
    isolated = abs(v_src[wi] - zcol[Seq.POSITIVE][wi] * i_f0[1]) < tol_pu * model.v_ln
    if isolated:
        i_w = complex(fault_current(farm, wind, ZERO, prefault_angle))

    v_last = None
    for iteration in range(1, max_iter + 1):
        v1_pre = v_src + w_resp * i_w
        i_f = _fault_currents(scenario.fault_type, v1_pre[fi], zff, scenario.fault_resistance)
        v_seq = np.vstack(
            [
                -zcol[Seq.ZERO] * i_f[0],
                v1_pre - zcol[Seq.POSITIVE] * i_f[1],
                -zcol[Seq.NEGATIVE] * i_f[2],
            ]
        )
        v_term = v_seq[1, wi]
        if isolated or (v_last is not None and abs(v_term - v_last) < tol_pu * model.v_ln):
            break
        v_last = v_term
        i_w = complex(
            fault_current(farm, wind, Phasor.from_complex(v_term), prefault_angle)
        )
    else:
        raise NoConvergence(f"wind in-feed fixed point did not settle in {max_iter} iterations")

    injections = np.zeros((3, len(nodes)), dtype=complex)
    injections[:, fi] -= i_f
    injections[1, wi] += i_w
    branch_currents: dict[str, np.ndarray] = {}
    for s in Seq:
        for bid, cur in systems[s].branch_currents(v_seq[s]).items():
            branch_currents.setdefault(bid, np.zeros(3, dtype=complex))[s] = cur

    relay_branch = _relay_branch(model, pos.branches)
    i_seq = branch_currents[relay_branch.id]
    if relay_branch.to_node == model.relay_bus:
        i_seq = -i_seq
    v_relay = v_seq[:, pos.index[model.relay_bus]]
    meas = RelayMeasurement(
        ThreePhaseSet.from_array(seq_to_abc(v_relay)),
        ThreePhaseSet.from_array(seq_to_abc(i_seq)),
    )
    if k0 is None:
        pl = model.line(model.protected_line)
        k0 = residual_compensation(pl.z1, pl.z0)
    loop = loop_current(meas, k0)
    state = NetworkState(
        nodes=nodes,
        voltages=v_seq,
        injections=injections,
        branch_currents=branch_currents,
        fault_node=fnode,
        fault_currents=i_f,
        iterations=iteration,
    )
    return FaultSolution(
        relay=meas,
        i_remote=Phasor.from_complex(i_w),
        z_apparent=apparent_impedance(meas, k0),
        k_remote=infeed_ratio(i_w, loop),
        i_loop=Phasor.from_complex(loop),
        state=state,
    )


def _relay_branch(model: NetworkModel, branches):
    """First section of the protected line, seen from the relay bus."""
    relay = model.relay_bus
    for br in branches:
        base = br.id.split("/")[0]
        if base == model.protected_line and relay in (br.from_node, br.to_node):
            return br
    raise TopologyError("relay branch not found")


def oracle_nodal_solve(
    model: NetworkModel,
    injections: dict[str, complex],
    seq: Seq | int | str,
    fault_at: tuple[str, float] | None = None,
    include_sources: bool = True,
) -> dict[str, complex]:
    """Brute-force nodal solve, assembled as ``A^T diag(y) A + Y_shunt``.

    Shares no assembly code with :func:`build_sequence_matrix`. With
    ``include_sources`` the grid emf enters as a Norton current in the
    positive sequence.
    """
    seq = Seq.parse(seq)
    names = list(model.buses)
    edges: list[tuple[str, str, complex]] = []
    for ln in model.lines:
        zk = ln.z0_per_km if seq is Seq.ZERO else ln.z1_per_km
        if fault_at is not None and ln.id == fault_at[0] and 0 < fault_at[1] < ln.length:
            names.append(FAULT_NODE)
            edges.append((ln.from_bus, FAULT_NODE, zk * fault_at[1]))
            edges.append((FAULT_NODE, ln.to_bus, zk * (ln.length - fault_at[1])))
        else:
            edges.append((ln.from_bus, ln.to_bus, zk * ln.length))
    pos = {n: k for k, n in enumerate(names)}
    incidence = np.zeros((len(edges), len(names)))
    y_branch = np.zeros(len(edges), dtype=complex)
    for e, (a, b, z) in enumerate(edges):
        incidence[e, pos[a]] = 1.0
        incidence[e, pos[b]] = -1.0
        y_branch[e] = 1.0 / z
    Y = incidence.T @ np.diag(y_branch) @ incidence
    zs = {Seq.ZERO: model.grid.z0, Seq.POSITIVE: model.grid.z1, Seq.NEGATIVE: model.grid.z2}[seq]
    g = pos[model.grid.bus]
    Y[g, g] += 1.0 / zs
    rhs = np.zeros(len(names), dtype=complex)
    for node, value in injections.items():
        rhs[pos[node]] += value
    if include_sources and seq is Seq.POSITIVE:
        rhs[g] += complex(model.grid.emf) / zs
    try:
        v = np.linalg.solve(Y, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularNetwork(str(exc)) from exc
    return {n: complex(v[pos[n]]) for n in names}


def solve_reduced_model(
    model: NetworkModel,
    farm: WindFarm,
    wind: WindState,
    scenario: FaultScenario,
    tol_pu: float = FIXED_POINT_TOL_PU,
    max_iter: int = FIXED_POINT_MAX_ITER,
) -> FaultSolution:
    """Single-loop solution on the network's line data.

    Bus A is held at nominal voltage and the farm injects at the junction,
    where its current joins the relay current on the way to the fault. The
    fault type is not modelled; the compensated ground loop of a bolted SLG
    fault and the three-phase loop both reduce to this positive-sequence
    circuit.
    """
    if model.protected_line is None:
        raise TopologyError("model has no protected line")
    scenario.validate(model)
    ln = model.line(scenario.line)
    junction = model.junction
    if ln.id == model.protected_line:
        d = scenario.distance if ln.from_bus == model.relay_bus else ln.length - scenario.distance
        z_a, z_f = ln.z1_per_km * d, 0j
    elif junction in (ln.from_bus, ln.to_bus):
        d = scenario.distance if ln.from_bus == junction else ln.length - scenario.distance
        z_a, z_f = model.line(model.protected_line).z1, ln.z1_per_km * d
    else:
        raise InputError("reduced mode needs a fault on the protected line or a line leaving the junction")
    e_a = Phasor(model.v_ln, 0.0)
    r = scenario.fault_resistance
    i_w = complex(prefault_current(farm, wind, e_a))
    v_last = None
    for _ in range(max_iter):
        sol = solve_reduced(z_a, z_f, e_a, i_w, r)
        v_b = complex(e_a) - z_a * complex(sol.i_loop)
        if v_last is not None and abs(v_b - v_last) < tol_pu * model.v_ln:
            return sol
        v_last = v_b
        i_w = complex(fault_current(farm, wind, Phasor.from_complex(v_b), e_a.angle))
    raise NoConvergence(f"reduced in-feed fixed point did not settle in {max_iter} iterations")


def solve(
    model: NetworkModel,
    farm: WindFarm,
    wind: WindState,
    scenario: FaultScenario,
    mode: str = "full",
) -> FaultSolution:
    if mode == "full":
        return solve_fault(model, farm, wind, scenario)
    if mode == "reduced":
        return solve_reduced_model(model, farm, wind, scenario)
    raise InputError(f"unknown solver mode {mode!r}")
