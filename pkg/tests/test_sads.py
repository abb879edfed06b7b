import itertools
import math

import pytest

from samcas.dynamics import AirframeParams, isa_density, speed_of_sound
from samcas.sads import (Reading, arbiter, estimate_model_based, estimate_model_free,
                         internal_consistency, invert_lift)
from samcas.sensing import AirDataFrame

EPS = 1.75
REF = 10.0
CLASSES = {"within": REF + 0.5, "outside": REF + 5.0, "absent": None}


@pytest.mark.parametrize("lc,rc,sc", list(itertools.product(CLASSES, CLASSES, CLASSES)))
def test_arbiter_truth_table(lc, rc, sc):
    left, right = CLASSES[lc], CLASSES[rc]
    # the synthetic estimate is either present (at REF) or absent
    s_sads = {} if sc == "absent" else {"aoa": REF if sc == "within" else REF - 0.25}
    s_left = {} if left is None else {"aoa": left}
    s_right = {} if right is None else {"aoa": right}
    got = arbiter(s_left, s_right, s_sads, {"aoa": EPS})
    if not s_sads:
        assert got == []
    elif lc == "within":
        assert got == [Reading("aoa", left, "left")]
    elif rc == "within":
        assert got == [Reading("aoa", right, "right")]
    else:
        assert got == []


def test_arbiter_never_returns_the_synthetic_value():
    got = arbiter({"aoa": 3.0}, {"aoa": 4.0}, {"aoa": 50.0}, 1.0)
    assert got == []


def test_internal_consistency_keeps_model_free_value():
    assert internal_consistency({"aoa": 5.0}, {"aoa": 5.5}, {"aoa": 1.0}) == {"aoa": 5.0}
    assert internal_consistency({"aoa": 5.0}, {"aoa": 7.0}, {"aoa": 1.0}) == {}
    assert internal_consistency({"aoa": None}, {"aoa": 5.0}, 1.0) == {}


def test_model_free_estimate():
    assert estimate_model_free(100.0, 100.0 * math.tan(math.radians(7))) == pytest.approx(7.0)
    assert estimate_model_free(1.0, 1.0) is None
    assert estimate_model_free(math.nan, 1.0) is None


def test_invert_lift_roundtrip_and_range():
    p = AirframeParams()
    for a in (-5.0, 0.0, 4.0, 12.0, 16.5):
        assert invert_lift(p.cl(a), p) == pytest.approx(a)
    assert invert_lift(p.cl_max + 0.1, p) is None


def test_model_based_estimate_from_level_flight():
    p = AirframeParams()
    h_m, aoa = 2000.0, 6.0
    v = math.sqrt(p.mass * p.g / (0.5 * isa_density(h_m) * p.wing_area * p.cl(aoa)))
    mach = v / speed_of_sound(h_m)
    frame = AirDataFrame("left", aoa, 0.0, mach, h_m / 0.3048, 1.0, 0.0)
    assert estimate_model_based((frame, frame), p) == pytest.approx(aoa, abs=1e-6)
