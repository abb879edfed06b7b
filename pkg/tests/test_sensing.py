import math

import pytest

from samcas.dynamics import trim_from
from samcas.sensing import (FaultConfigError, FaultSpec, NoiseSource, NoiseSpec, Sensors,
                            apply_fault, check_overlaps, truth_channels)


def test_fault_models():
    assert apply_fault(4.0, FaultSpec("sudden", 0, 10, delta=18.0), 5.0) == 18.0
    assert apply_fault(4.0, FaultSpec("delta", 0, 10, delta=18.0), 5.0) == 22.0
    lin = FaultSpec("gradual-linear", 2, 10, a=0.5)
    assert apply_fault(9.0, lin, 6.0, latched=4.0) == 6.0
    quad = FaultSpec.from_dict({"kind": "gradual-quadratic", "t0": 0, "t_end": 10, "a": 2.0})
    assert quad.b == 0.0
    assert apply_fault(0.0, quad, 3.0, latched=1.0) == 19.0
    log = FaultSpec("gradual-log", 0, 10, a=10.0)
    assert apply_fault(1.0, log, 0.0) == 1.0
    assert apply_fault(1.0, log, math.e - 1) == pytest.approx(11.0)


@pytest.mark.parametrize("kw", [
    {"kind": "sudden", "t0": 0, "t_end": 1},
    {"kind": "sudden", "t0": 0, "t_end": 1, "delta": 1, "a": 1},
    {"kind": "delta", "t0": 2, "t_end": 1, "delta": 1},
    {"kind": "bogus", "t0": 0, "t_end": 1, "delta": 1},
    {"kind": "delta", "t0": 0, "t_end": 1, "delta": 1, "channel": "yaw"},
])
def test_bad_fault_specs(kw):
    with pytest.raises(FaultConfigError):
        FaultSpec(**kw)


def test_overlap_rejected_per_side_and_channel():
    a = FaultSpec("delta", 0, 10, target="both", delta=1)
    b = FaultSpec("delta", 5, 20, target="right", delta=1)
    with pytest.raises(FaultConfigError):
        check_overlaps([a, b])
    check_overlaps([a, FaultSpec("delta", 5, 20, channel="ias", delta=1)])


def test_noise_is_keyed_not_sequential():
    a, b = NoiseSource(7), NoiseSource(7)
    late = a.sample(0, 0, 5000)
    assert b.sample(0, 0, 5000) == late
    assert a.sample(0, 0, 3) == b.sample(0, 0, 3)
    assert NoiseSource(8).sample(0, 0, 3) != a.sample(0, 0, 3)


def test_fault_hits_only_its_side_and_window():
    s = trim_from(1500.0, 120.0)
    sens = Sensors(NoiseSpec(sigma={}), [FaultSpec("delta", 1.0, 2.0, delta=10.0)])
    left, right = sens.measure(s, 0)
    assert left.aoa == right.aoa == pytest.approx(s.aoa)
    from dataclasses import replace
    left, right = sens.measure(replace(s, t=1.5), 45)
    assert left.aoa == pytest.approx(s.aoa + 10.0) and right.aoa == pytest.approx(s.aoa)


def test_gradual_fault_latches_onset_reading():
    from dataclasses import replace
    s = trim_from(1500.0, 120.0)
    sens = Sensors(NoiseSpec(sigma={}), [FaultSpec("gradual-linear", 0.0, 10.0, a=1.0)])
    sens.measure(s, 0)
    later = replace(s, t=4.0, pitch=s.pitch + 3.0, aoa=s.aoa + 3.0)
    left, _ = sens.measure(later, 120)
    assert left.aoa == pytest.approx(s.aoa + 4.0)


def test_truth_channels_units():
    s = trim_from(0.0, 100.0)
    ch = truth_channels(s)
    assert ch["ias"] == pytest.approx(100.0 / 0.514444, rel=1e-6)
    assert ch["altitude"] == 0.0
