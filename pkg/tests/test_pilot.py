import pytest

from samcas.pilot import (Cues, PilotConfigError, PilotGains, PilotResponseModel, StallPlan,
                          check_stall_target, recovery_response, stall_induction)


def cues(**kw):
    base = dict(t=0.0, pitch=5.0, pitch_rate=0.0, ias=220.0, altitude=2000.0,
                vertical_speed=0.0, aoa=5.0, heading=0.0, hs_trim=0.0)
    return Cues(**{**base, **kw})


def test_crank_rate_from_rps():
    assert PilotResponseModel(crank_rps=3.6, rpd=18.0).crank_rate == pytest.approx(0.2)


def test_recovery_waits_for_reaction_time():
    r = PilotResponseModel(tau_sensing=5.0)
    assert recovery_response(10.0, r, 14.9, -2.5, 0.0) is None
    ctl = recovery_response(10.0, r, 15.0, -2.5, 0.0)
    assert ctl.trim_crank_rate == pytest.approx(r.crank_rate)
    assert ctl.elevator == r.misfire_elevator
    assert recovery_response(10.0, r, 16.0, 0.1, 0.0).trim_crank_rate == 0.0


@pytest.mark.parametrize("kw", [{"tau_sensing": -1.0}, {"crank_rps": -0.5}])
def test_response_model_validation(kw):
    with pytest.raises(PilotConfigError):
        PilotResponseModel(**kw)


def test_stall_target_range():
    check_stall_target(20.0)
    check_stall_target(90.0)
    for bad in (19.9, 90.1):
        with pytest.raises(PilotConfigError):
            check_stall_target(bad)
    with pytest.raises(PilotConfigError):
        StallPlan(target_pitch=10.0, start_t=0.0)


def test_stall_induction_pulls_toward_target_and_saturates():
    g = PilotGains()
    e = stall_induction(50.0, cues(pitch=48.0), g)
    assert e == pytest.approx(-2.0 * g.pitch_kp)
    assert stall_induction(90.0, cues(pitch=0.0), g) == -1.0
    # pitch rate damps the pull
    assert stall_induction(50.0, cues(pitch=45.0, pitch_rate=5.0), g) > \
        stall_induction(50.0, cues(pitch=45.0), g)
    assert stall_induction(50.0, cues(pitch=10.0), g, pitch_cmd=11.0) == \
        pytest.approx(-g.pitch_kp)
