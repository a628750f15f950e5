import cmath
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from windrelay.errors import InputError, ZeroVoltage
from windrelay.phasor import Phasor
from windrelay.windfarm import WindFarm, WindState, fault_current, power_output, prefault_current

FARM = WindFarm()
V_LN = 132e3 / math.sqrt(3)


def p(v):
    return power_output(FARM, WindState(v))


def test_power_curve_examples():
    assert p(3.0) == 0.0
    assert p(20.0) == 15.0
    assert p(26.0) == 0.0
    assert p(25.0) == 0.0


def test_cubic_segment_by_hand():
    want = 15.0 * (8.0**3 - 4.0**3) / (12.0**3 - 4.0**3)
    assert p(8.0) == pytest.approx(want, rel=1e-14)


@given(st.floats(4.0, 12.0), st.floats(4.0, 12.0))
def test_monotone_between_cut_in_and_rated(a, b):
    lo, hi = sorted((a, b))
    assert p(lo) <= p(hi)


@given(st.floats(0.0, 30.0))
def test_zero_outside_band_and_per_turbine_sum(v):
    if v < 4.0 or v >= 25.0:
        assert p(v) == 0.0
    one = WindFarm(n_turbines=1)
    assert p(v) == pytest.approx(5 * power_output(one, WindState(v)), rel=1e-12)


def test_continuity_and_cut_out_drop():
    assert p(4.0) == 0.0
    assert p(12.0 - 1e-9) == pytest.approx(15.0, abs=1e-6)
    assert p(25.0 - 1e-9) == 15.0


def test_per_turbine_offsets():
    state = WindState(12.0, (0.0, 0.0, 0.0, -9.0, 14.0))
    assert power_output(FARM, state) == pytest.approx(9.0)
    with pytest.raises(InputError):
        WindState(12.0, (0.0, 1.0)).speeds(FARM)


def test_prefault_current():
    i = prefault_current(FARM, WindState(20.0), Phasor(V_LN, 0.0))
    assert i.magnitude == pytest.approx(65.6, rel=1e-3)
    assert i.angle == 0.0
    assert prefault_current(FARM, WindState(2.0), Phasor(V_LN, 0.4)) == Phasor(0.0, 0.0)
    half = prefault_current(FARM, WindState(20.0), Phasor(2 * V_LN, 0.3))
    assert half.magnitude == pytest.approx(i.magnitude / 2, rel=1e-14)
    assert half.angle == pytest.approx(0.3)
    with pytest.raises(ZeroVoltage):
        prefault_current(FARM, WindState(20.0), Phasor(0.0))


def test_fault_current_clamp():
    rated = FARM.rated_current
    assert rated == pytest.approx(15e6 / (3 * V_LN))
    healthy = fault_current(FARM, WindState(20.0), Phasor(V_LN, 0.1))
    assert healthy.magnitude == pytest.approx(rated, rel=1e-12)
    low = fault_current(FARM, WindState(20.0), Phasor(0.3 * V_LN, -0.2))
    assert low.magnitude == 1.2 * rated
    assert low.angle == pytest.approx(-0.2)
    assert fault_current(FARM, WindState(3.0), Phasor(0.3 * V_LN)).magnitude == 0.0
    bolted = fault_current(FARM, WindState(20.0), Phasor(0.0), prefault_angle=0.5)
    assert bolted.magnitude == 1.2 * rated and bolted.angle == pytest.approx(0.5)


@given(st.floats(0, 30), st.floats(0, 2 * V_LN), st.floats(-3, 3))
def test_fault_current_never_exceeds_limit(v, mag, ang):
    i = fault_current(FARM, WindState(v), Phasor(mag, ang))
    assert i.magnitude <= 1.2 * FARM.rated_current * (1 + 1e-15)


def test_farm_validation():
    for kw in ({"cut_in": 13.0}, {"n_turbines": 0}, {"fault_current_limit": 0.9}, {"rated_power_per_turbine": 0}):
        with pytest.raises(InputError):
            WindFarm(**kw)
