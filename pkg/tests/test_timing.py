import math

import pytest

from samcas.timing import (FirmDeadlineCounter, OutOfRegimeError, RecoveryTimingParams,
                           altitude_term, analyze, falling_velocity, is_recoverable,
                           recovery_deadline, required_rps, sum_forces, tau_action,
                           terminal_velocity)


def test_required_rps_for_one_activation_per_cooldown():
    # 2.5 deg * 18 rotations/deg over 11 s
    assert required_rps(2.5, 18.0, 11.0) == pytest.approx(45.0 / 11.0, abs=1e-12)
    with pytest.raises(ValueError):
        required_rps(2.5, 18.0, 0.0)


def test_tau_action():
    assert tau_action(2.5, 18.0, 3.5) == pytest.approx(45.0 / 3.5)
    assert tau_action(0.0, 18.0, 0.0) == 0.0
    assert tau_action(1.0, 18.0, 0.0) == math.inf


def _params(**kw):
    return RecoveryTimingParams(**{"thrust": 0.0, "climb_angle": 0.0, "cl": 0.3, **kw})


def test_terminal_velocity_is_a_force_balance():
    for p in (_params(), _params(climb_angle=math.radians(-30), thrust=30000.0, cl=0.2)):
        vt = terminal_velocity(p)
        assert vt is not None
        assert abs(sum_forces(vt, p)) / p.weight < 1e-9


def test_no_terminal_velocity_when_lift_cannot_oppose():
    assert terminal_velocity(_params(cl=0.0, cd=0.0)) is None


def _rk4_fall(v0, t_end, p, dt=1e-3):
    f = lambda v: sum_forces(v, p) / p.mass
    v = v0
    for _ in range(round(t_end / dt)):
        k1 = f(v)
        k2 = f(v + 0.5 * dt * k1)
        k3 = f(v + 0.5 * dt * k2)
        k4 = f(v + dt * k3)
        v += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return v


@pytest.mark.parametrize("v0", [0.0, 20.0, -10.0])
def test_falling_velocity_matches_integration(v0):
    p = _params()
    for t in (1.0, 10.0, 60.0):
        assert falling_velocity(v0, t, p) == pytest.approx(_rk4_fall(v0, t, p), abs=0.1)


def test_falling_velocity_regime_checks():
    p = _params()
    vt = terminal_velocity(p)
    with pytest.raises(OutOfRegimeError):
        falling_velocity(vt + 1.0, 1.0, p)
    with pytest.raises(ValueError):
        falling_velocity(0.0, -1.0, p)


def test_deadline_picks_earlier_term():
    d = recovery_deadline(1000.0, 50.0, last_mcas_fire_t=0.0, tau_mcas_cd=11.0, t_current=0.0)
    assert d.value == 11.0 and d.which_term == "mcas-soft"
    d = recovery_deadline(100.0, 50.0, last_mcas_fire_t=0.0, tau_mcas_cd=11.0, t_current=0.0)
    assert d.value == 2.0 and d.which_term == "altitude-hard"
    d = recovery_deadline(100.0, 50.0, None, 11.0, 5.0)
    assert d.mcas_term is None and d.value == 7.0


def test_deadline_edge_cases():
    assert recovery_deadline(0.0, 10.0, None, 11.0, 3.0).value == 3.0
    assert recovery_deadline(10.0, 0.0, None, 11.0, 0.0).value == math.inf
    with pytest.raises(ValueError):
        recovery_deadline(-1.0, 10.0, None, 11.0, 0.0)


def test_altitude_term_uses_velocity_after_reaction():
    p = _params()
    v = falling_velocity(0.0, 5.0, p)
    assert altitude_term(500.0, 0.0, 5.0, 2.0, p) == pytest.approx(2.0 + 500.0 / v)


def test_recoverable_boundary_is_inclusive():
    assert is_recoverable(0.0, 5.0, 5.0, 10.0).recoverable
    assert not is_recoverable(0.0, 5.0, 5.01, 10.0).recoverable
    assert not is_recoverable(0.0, 5.0, math.inf, 1e9).recoverable


def test_fast_crank_beats_the_cooldown():
    p = RecoveryTimingParams(tau_sensing=1.0, crank_rps=9.0, x_stab_offset=2.5)
    assert analyze(p, h=3000.0, t_current=0.0, t_start=0.0, last_mcas_fire_t=0.0).recoverable
    p.crank_rps = 3.5
    v = analyze(p, h=3000.0, t_current=0.0, t_start=0.0, last_mcas_fire_t=0.0)
    assert not v.recoverable and v.which_term == "mcas-soft"


def test_firm_counter_window():
    c = FirmDeadlineCounter(2, 3)
    assert not c.record(True)
    assert not c.record(False)
    assert c.record(True)
    assert c.max_consecutive == 1
    with pytest.raises(ValueError):
        FirmDeadlineCounter(4, 3)
