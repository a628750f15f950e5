import cmath

import pytest
from hypothesis import given
from hypothesis import strategies as st

from windrelay.errors import EmptyRemotes, InputError, KOutOfRange, NestingViolation, ZeroRelayCurrent
from windrelay.network import polar
from windrelay.relay import (
    RelayState,
    SettingBasis,
    ZoneSettings,
    classify,
    infeed_factor,
    mho_contains,
    relay_step,
    static_settings,
    zone2_adaptive,
    zone2_static,
)

ZAB = polar(30, 80)
ZMIN = polar(8, 80)

mag = st.floats(0.1, 200)
ang = st.floats(-180, 180)
imp = st.builds(polar, mag, st.floats(30, 89))
cplx = st.builds(polar, mag, ang)


def test_zone2_static_examples():
    assert cmath.isclose(zone2_static(ZAB, [ZMIN]), polar(34, 80), rel_tol=1e-14)
    assert cmath.isclose(zone2_static(ZAB, [ZMIN, polar(20, 80)]), polar(34, 80), rel_tol=1e-14)
    assert cmath.isclose(zone2_static(ZAB, {"b": polar(20, 80), "a": ZMIN}), polar(34, 80), rel_tol=1e-14)
    with pytest.raises(EmptyRemotes):
        zone2_static(ZAB, [])


def test_infeed_factor_examples():
    assert infeed_factor(0, 100) == 1
    assert infeed_factor(polar(5, 10), polar(5, 10)) == pytest.approx(2)
    k = infeed_factor(polar(50, -85), polar(100, -80))
    assert k.real == pytest.approx(1.4981, abs=5e-5)
    assert k.imag == pytest.approx(-0.0436, abs=5e-5)
    assert cmath.isclose(k, 1 + 0.5 * cmath.exp(-1j * cmath.pi * 5 / 180), rel_tol=1e-14)
    with pytest.raises(ZeroRelayCurrent):
        infeed_factor(1.0, 0.0)


def test_zone2_adaptive_examples():
    assert zone2_adaptive(ZAB, [ZMIN], 1.0) == zone2_static(ZAB, [ZMIN])
    assert cmath.isclose(zone2_adaptive(ZAB, [ZMIN], 2.0), polar(38, 80), rel_tol=1e-14)
    k = infeed_factor(polar(50, -85), polar(100, -80))
    assert cmath.isclose(zone2_adaptive(ZAB, [ZMIN], k), ZAB + 0.5 * ZMIN * k, rel_tol=1e-14)
    scalar = zone2_adaptive(ZAB, [ZMIN], k, k_mode="scalar")
    assert cmath.isclose(scalar, ZAB + 0.5 * ZMIN * abs(k), rel_tol=1e-14)
    for bad in (0.49, 20.5, complex("nan")):
        with pytest.raises(KOutOfRange):
            zone2_adaptive(ZAB, [ZMIN], bad)


@given(imp, st.lists(imp, min_size=1, max_size=5), st.builds(polar, st.floats(0.51, 19.9), ang))
def test_zone2_adaptive_is_linear_in_k(zab, remotes, k):
    zmin = min(remotes, key=abs)
    diff = zone2_adaptive(zab, remotes, k) - zone2_adaptive(zab, remotes, 1.0)
    assert abs(diff - 0.5 * zmin * (k - 1)) <= 1e-12 * max(1.0, abs(zab) + abs(zmin) * abs(k))


def test_mho_examples():
    r = polar(34, 80)
    assert mho_contains(r, r / 2)
    assert mho_contains(r, r)
    assert not mho_contains(r, 1.01 * r)
    assert mho_contains(r, 0)
    with pytest.raises(InputError):
        mho_contains(0, 1)


@given(cplx, cplx, cplx)
def test_mho_scale_invariance(reach, z, c):
    a = mho_contains(reach, z)
    margin = abs(abs(z - reach / 2) - abs(reach) / 2)
    if margin > 1e-9 * (abs(reach) + abs(z)):
        assert mho_contains(c * reach, c * z) == a


def settings(**kw):
    return ZoneSettings(0.85 * ZAB, zone2_static(ZAB, [ZMIN]), ZAB + 0.8 * ZMIN, **kw)


@given(st.floats(0, 1), st.floats(-1, 1))
def test_zone_nesting_for_collinear_reaches(f, g):
    s = settings()
    z = s.z1_reach * complex(f, g)
    if mho_contains(s.z1_reach, z):
        assert mho_contains(s.z2_reach, z) and mho_contains(s.z3_reach, z)


def test_settings_invariants():
    with pytest.raises(NestingViolation):
        ZoneSettings(ZAB, 0.5 * ZAB, 2 * ZAB)
    with pytest.raises(InputError):
        settings(t2=1.2)
    s = static_settings(SettingBasis(ZAB, {"x": ZMIN, "y": 2 * ZMIN}, 0j))
    assert s.delays == (0.0, 0.3, 1.0)
    assert cmath.isclose(s.z1_reach, 0.85 * ZAB)
    assert cmath.isclose(s.z3_reach, ZAB + 0.8 * ZMIN)


def test_classify():
    s = settings()
    assert classify(s, 0.5 * ZAB) == 1
    assert classify(s, 0.95 * ZAB) == 2
    assert classify(s, 1.04 * s.z2_reach) == 3
    assert classify(s, 2 * s.z3_reach) == 0
    assert classify(s, None) == 0


def run(state, zs, dt=0.001):
    trips = []
    for k, z in enumerate(zs):
        state, tripped = relay_step(state, z, dt)
        if tripped:
            trips.append((round((k + 1) * dt, 9), tripped))
    return state, trips


def test_zone1_trips_immediately():
    _, trips = run(RelayState(settings()), [0.5 * ZAB])
    assert trips == [(0.001, 1)]


def test_zone2_delay():
    z2 = 0.95 * ZAB
    state, trips = run(RelayState(settings()), [z2] * 290)
    assert trips == [] and state.tripped is None
    state, trips = run(RelayState(settings()), [z2] * 310)
    assert trips == [(0.3, 2)]
    assert state.tripped == 2


def test_zone3_delay():
    _, trips = run(RelayState(settings()), [1.04 * settings().z2_reach] * 1100)
    assert trips == [(1.0, 3)]


def test_dropout_resets_clock():
    z2 = 0.95 * ZAB
    _, trips = run(RelayState(settings()), [z2] * 200 + [None] + [z2] * 200)
    assert trips == []


def test_trip_latches_and_resets():
    state, _ = run(RelayState(settings()), [0.5 * ZAB])
    state2, tripped = relay_step(state, 0.5 * ZAB, 0.001)
    assert tripped is None and state2.tripped == 1
    assert state.reset().tripped is None and state.reset().clocks == (0.0, 0.0, 0.0)


@given(st.lists(st.sampled_from([None, 0.5, 0.95, 1.2, 3.0]), max_size=60))
def test_relay_step_deterministic(seq):
    zs = [None if f is None else f * ZAB for f in seq]
    assert run(RelayState(settings()), zs) == run(RelayState(settings()), zs)


def test_dt_limits():
    with pytest.raises(InputError):
        relay_step(RelayState(settings()), None, 0.006)
    with pytest.raises(InputError):
        relay_step(RelayState(settings()), None, 0.0)
