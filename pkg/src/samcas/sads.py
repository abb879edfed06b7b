"""Synthetic air data: two independent AoA estimators and the two-layer
consistency check that decides which physical readings may be trusted.

Absent values are ``None`` throughout and are never replaced by zero.
"""
from __future__ import annotations

import math
from typing import Mapping, NamedTuple

from .dynamics import AirframeParams, isa_density, speed_of_sound
from .sensing import AirDataFrame

DEFAULT_EPSILON = {"aoa": 3 * 0.25 + 1.0}


class Reading(NamedTuple):
    channel: str
    value: float
    side: str


def estimate_model_free(u: float, w: float, min_airspeed: float = 5.0) -> float | None:
    """AoA from the inertial velocity triangle, atan(normal / axial), degrees."""
    if not (math.isfinite(u) and math.isfinite(w)):
        return None
    if math.hypot(u, w) <= min_airspeed:
        return None
    return math.degrees(math.atan2(w, u))


def invert_lift(cl: float, params: AirframeParams, flaps_up: bool = True) -> float | None:
    """AoA on the pre-stall branch of the lift table giving ``cl``."""
    if not flaps_up:
        cl -= params.flap_cl
    xs, ys = params.cl.xs, params.cl.ys
    pts = [(x, y) for x, y in zip(xs, ys) if x <= params.stall_alpha]
    if params.stall_alpha not in xs:
        pts.append((params.stall_alpha, params.cl(params.stall_alpha)))
    if cl > pts[-1][1] or cl < pts[0][1]:
        return None
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if cl <= y1:
            return x0 + (x1 - x0) * (cl - y0) / (y1 - y0)
    return pts[-1][0]


def estimate_model_based(frames: tuple[AirDataFrame, AirDataFrame], params: AirframeParams,
                         flaps_up: bool = True) -> float | None:
    """AoA from required lift: n m g = 1/2 rho(h) S CL v^2, inverted below stall.

    Uses the mean of both sides' mach, altitude and load-factor channels.
    """
    n = len(frames)
    mach = sum(f.mach for f in frames) / n
    alt_m = sum(f.altitude for f in frames) / n * 0.3048
    gforce = sum(f.gforce for f in frames) / n
    if not all(math.isfinite(v) for v in (mach, alt_m, gforce)):
        return None
    v = mach * speed_of_sound(alt_m)
    qs = 0.5 * isa_density(alt_m) * v * v * params.wing_area
    if qs <= 0.0:
        return None
    cl = gforce * params.mass * params.g / qs
    return invert_lift(cl, params, flaps_up)


def _eps(epsilon, channel: str) -> float:
    if isinstance(epsilon, Mapping):
        return epsilon[channel]
    return float(epsilon)


def internal_consistency(w_estimates: Mapping[str, float | None],
                         m_estimates: Mapping[str, float | None],
                         epsilon) -> dict[str, float]:
    """Keep the model-free estimate of each channel on which both methods agree."""
    out = {}
    for ch, sw in w_estimates.items():
        sm = m_estimates.get(ch)
        if sw is None or sm is None:
            continue
        if abs(sw - sm) < _eps(epsilon, ch):
            out[ch] = sw
    return out


def arbiter(s_left: Mapping[str, float], s_right: Mapping[str, float],
            s_sads: Mapping[str, float], epsilon) -> list[Reading]:
    """Physical readings that agree with the synthetic estimate.

    Left is checked first, right only if left fails; a channel with neither
    side in range is dropped. The synthetic value itself is never returned.
    """
    correct = []
    for ch, ref in s_sads.items():
        eps = _eps(epsilon, ch)
        sl = s_left.get(ch)
        sr = s_right.get(ch)
        if sl is not None and abs(sl - ref) < eps:
            correct.append(Reading(ch, sl, "left"))
        elif sr is not None and abs(sr - ref) < eps:
            correct.append(Reading(ch, sr, "right"))
    return correct
