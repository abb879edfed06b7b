import math

import pytest

from samcas.controllers import (Controller, McasConfig, McasState, TrimCommand, is_stall,
                                mcas_new_step, mcas_old_step, mvs_select, sa_mcas_step)
from samcas.dynamics import AirframeParams, isa_density, speed_of_sound
from samcas.sads import Reading
from samcas.sensing import AirDataFrame

CFG = McasConfig()


def frame(aoa, side="left", mach=0.3, gforce=1.0, alt_ft=5000.0):
    return AirDataFrame(side, aoa, 200.0, mach, alt_ft, gforce, 0.0)


def test_mvs_select():
    assert mvs_select(None, 4.0, 6.0) == 5.0
    assert mvs_select(5.0, 30.0, 4.0) == 5.0


def test_old_fires_on_left_only_and_respects_cooldown():
    st = McasState()
    assert mcas_old_step(frame(10.0), st, CFG, 0.0) is None
    cmd = mcas_old_step(frame(18.0), st, CFG, 1.0)
    assert cmd.total_deflection == 2.5 and cmd.source == "mcas_old"
    assert mcas_old_step(frame(18.0), st, CFG, 11.9) is None
    assert mcas_old_step(frame(18.0), st, CFG, 12.0) is not None
    assert st.activations == 2


def test_old_high_speed_deflection_and_gate():
    st = McasState()
    assert mcas_old_step(frame(18.0, mach=0.6), st, CFG, 0.0) is None
    cmd = mcas_old_step(frame(18.0, mach=0.6, gforce=1.5), st, CFG, 0.0)
    assert cmd.total_deflection == 0.6


def test_new_once_per_event_and_disagreement():
    st = McasState()
    assert mcas_new_step(frame(18.0), frame(5.0, "right"), True, False, st, CFG, 0.0) is None
    st = McasState()
    cmd = mcas_new_step(frame(18.0), frame(18.5, "right"), True, False, st, CFG, 0.0)
    assert cmd is not None
    for t in (20.0, 40.0):
        assert mcas_new_step(frame(18.0), frame(18.0, "right"), True, False, st, CFG, t) is None
    # re-arms only after the selected AoA drops below threshold minus hysteresis
    for t in range(50, 60):
        mcas_new_step(frame(5.0), frame(5.0, "right"), True, False, st, CFG, float(t))
    assert st.fired_this_event is False


def test_new_inhibited_with_flaps_down():
    st = McasState()
    assert mcas_new_step(frame(18.0), frame(18.0, "right"), False, False, st, CFG, 0.0) is None


def test_new_actuator_frozen_while_column_pulled():
    c = Controller("mcas_new")
    c.state.active_command = 2.5
    assert c.actuate(0.1, pilot_elevator=-0.5) == 0.0
    assert c.actuate(0.1, pilot_elevator=0.0) == pytest.approx(-0.25)
    c2 = Controller("mcas_old")
    c2.state.active_command = 2.5
    assert c2.actuate(0.1, pilot_elevator=-0.5) == pytest.approx(-0.25)


def test_actuator_delivers_exact_deflection():
    c = Controller("mcas_old")
    c.state.active_command = 2.5
    total = 0.0
    for _ in range(400):
        total += c.actuate(1 / 30) / 30
    assert total == pytest.approx(-2.5, abs=1e-9)
    assert c.state.active_command is None


def test_is_stall():
    assert is_stall([Reading("aoa", 18.0, "left")])
    assert not is_stall([Reading("aoa", 16.0, "left"), Reading("ias", 300.0, "left")])
    assert not is_stall([])


def _consistent(aoa, alt_ft=5000.0):
    p = AirframeParams()
    h = alt_ft * 0.3048
    v = math.sqrt(p.mass * p.g / (0.5 * isa_density(h) * p.wing_area * p.cl(aoa)))
    mach = v / speed_of_sound(h)
    inertial = (v * math.cos(math.radians(aoa)), v * math.sin(math.radians(aoa)))
    return p, mach, inertial


def test_sa_ignores_a_lying_vane():
    p, mach, inertial = _consistent(6.0)
    st = McasState()
    left = frame(24.0, mach=mach)
    right = frame(6.0, "right", mach=mach)
    assert sa_mcas_step(left, right, inertial, p, st, CFG, 0.0) is None
    both = sa_mcas_step(frame(24.0, mach=mach), frame(24.0, "right", mach=mach), inertial,
                        p, st, CFG, 0.0)
    assert both is None and st.activations == 0


def test_sa_fires_on_confirmed_high_aoa():
    p, mach, inertial = _consistent(17.5)
    st = McasState()
    rec = {}
    cmd = sa_mcas_step(frame(17.5, mach=mach), frame(17.5, "right", mach=mach), inertial, p,
                       st, CFG, 0.0, record=rec)
    assert cmd is not None and rec["aoa_used"] == 17.5


def test_trim_command_validation():
    with pytest.raises(ValueError):
        TrimCommand(0.0, 0.25, 0.0, "x")
    with pytest.raises(ValueError):
        Controller("mcas_max")
    with pytest.raises(ValueError):
        McasConfig(deflection_high_speed=3.0)
