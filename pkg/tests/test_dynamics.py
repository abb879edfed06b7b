import math
from dataclasses import replace

import pytest

from samcas.dynamics import (AirframeParams, ControlInputs, EnvelopeError, InvalidInputError,
                             Table, apply_trim_rate, isa_density, make_state, step,
                             throttle_for, trim_from, trim_residuals)

P = AirframeParams()


def test_isa_sea_level_and_tropopause():
    assert isa_density(0.0) == pytest.approx(1.225)
    # textbook value at 11 km
    assert isa_density(10999.0) == pytest.approx(0.3639, rel=2e-3)


def test_table_interpolates_and_clamps():
    t = Table([[0, 0], [10, 1]])
    assert t(5) == 0.5
    assert t(-3) == 0.0 and t(20) == 1.0
    with pytest.raises(ValueError):
        Table([[0, 0], [0, 1]])


def _fly(state, controls, dt, t_end):
    for _ in range(round(t_end / dt)):
        state = step(state, controls, P, dt)
    return state


def test_rk4_fourth_order():
    s0 = trim_from(1500.0, 110.0, 0.0, P)
    s0 = replace(s0, pitch_rate=2.0)
    ctl = ControlInputs(elevator=-0.05, throttle=0.6)
    ref = _fly(s0, ctl, 0.025 / 8, 4.0)
    e1 = abs(_fly(s0, ctl, 0.1, 4.0).pitch - ref.pitch)
    e2 = abs(_fly(s0, ctl, 0.05, 4.0).pitch - ref.pitch)
    assert e1 / e2 >= 12.0


def test_trim_is_a_fixed_point():
    s = trim_from(2000.0, 120.0, 0.0, P)
    assert max(abs(r) for r in trim_residuals(s, P)) < 1e-8
    ctl = ControlInputs(elevator=0.0, throttle=throttle_for(s, P))
    for _ in range(30):
        n = step(s, ctl, P, 1 / 30)
        for name in ("airspeed", "gamma", "pitch", "pitch_rate"):
            assert abs(getattr(n, name) - getattr(s, name)) < 1e-4
        s = n


def test_trim_gain_moves_aoa_four_degrees_per_degree():
    a = trim_from(2000.0, 120.0, 0.0, P, elevator=0.0)
    b = trim_from(2000.0, 120.0, 0.0, P, elevator=0.1)
    # more nose-down elevator needs more nose-up stabilizer at the same AoA
    assert b.hs_trim > a.hs_trim
    assert b.aoa == pytest.approx(a.aoa, abs=1e-6)


def test_trim_below_stall_speed_rejected():
    with pytest.raises(EnvelopeError):
        trim_from(1000.0, 40.0, 0.0, P)


@pytest.mark.parametrize("bad", [0.0, -0.01, math.nan])
def test_step_rejects_bad_dt(bad):
    s = trim_from(1000.0, 120.0)
    with pytest.raises(InvalidInputError):
        step(s, ControlInputs(), P, bad)


def test_step_rejects_out_of_range_controls():
    s = trim_from(1000.0, 120.0)
    with pytest.raises(InvalidInputError):
        step(s, ControlInputs(elevator=1.5), P, 0.01)


def test_trim_rate_clamps_at_stop():
    s = make_state(0.0, 1000.0, 120.0, 0.0, 3.0, 0.0, P.hs_min + 0.1)
    n, clamped = apply_trim_rate(s, -1.0, 1.0, P)
    assert clamped and n.hs_trim == P.hs_min


def test_pitch_up_only_above_its_onset():
    base = P.pitch_accel(P.v_ref, P.pitch_up_alpha - 1, 0.0, 0.0, 0.0)
    no_pu = replace(P, pitch_up_gain=0.0)
    assert base == no_pu.pitch_accel(P.v_ref, P.pitch_up_alpha - 1, 0.0, 0.0, 0.0)
    deep = P.pitch_up_alpha + P.pitch_up_width + 5
    extra = P.pitch_accel(P.v_ref, deep, 0.0, 0.0, 0.0) - no_pu.pitch_accel(
        P.v_ref, deep, 0.0, 0.0, 0.0)
    assert extra == pytest.approx(P.pitch_up_gain * P.pitch_up_width)
