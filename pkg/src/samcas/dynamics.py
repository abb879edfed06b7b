"""Longitudinal flight model of a 737-class airframe.

Point-mass translational dynamics (airspeed, flight-path angle, altitude)
are coupled to a short-period pitch channel (pitch, pitch rate). The pitch
channel uses the q-row of the short-period matrices, scaled with dynamic
pressure, so the trimmed angle of attack is set by stabilizer and elevator
and not by speed.

Sign conventions:
    elevator > 0   nose-down moment (elevator is normalized to [-1, 1])
    hs_trim  > 0   nose-up stabilizer trim, degrees
    pitch, aoa, gamma in degrees, pitch_rate in deg/s
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

G0 = 9.80665
RHO0 = 1.225
DEG = math.pi / 180.0
RAD = 180.0 / math.pi


class InvalidInputError(ValueError):
    """Non-finite state or a non-positive timestep."""


class EnvelopeError(ValueError):
    """No trim solution inside the flight envelope."""


# ----------------------------------------------------------------------------
# atmosphere


def isa_density(h: float) -> float:
    """ISA air density in kg/m^3 at geometric altitude ``h`` in meters.

    Troposphere lapse model up to 11 km, isothermal layer above. Negative
    altitudes extrapolate the tropospheric formula.
    """
    if h < 11000.0:
        return RHO0 * (1.0 - 2.25577e-5 * h) ** 4.25588
    return 0.36392 * math.exp(-(h - 11000.0) / 6341.62)


def isa_temperature(h: float) -> float:
    if h < 11000.0:
        return 288.15 - 0.0065 * h
    return 216.65


def speed_of_sound(h: float) -> float:
    return math.sqrt(1.4 * 287.05287 * isa_temperature(h))


# ----------------------------------------------------------------------------
# parameters


class Table:
    """Piecewise-linear lookup, clamped at both ends."""

    __slots__ = ("xs", "ys")

    def __init__(self, points: Sequence[Sequence[float]]):
        pts = sorted((float(x), float(y)) for x, y in points)
        if len(pts) < 2:
            raise ValueError("table needs at least two points")
        self.xs = [p[0] for p in pts]
        self.ys = [p[1] for p in pts]
        if any(b <= a for a, b in zip(self.xs, self.xs[1:])):
            raise ValueError("table abscissae must be strictly increasing")

    def __call__(self, x: float) -> float:
        xs = self.xs
        if x <= xs[0]:
            return self.ys[0]
        if x >= xs[-1]:
            return self.ys[-1]
        i = bisect_right(xs, x)
        x0, x1 = xs[i - 1], xs[i]
        y0, y1 = self.ys[i - 1], self.ys[i]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    def points(self) -> list[list[float]]:
        return [[x, y] for x, y in zip(self.xs, self.ys)]


DEFAULT_CL = [
    (-10.0, -0.55), (0.0, 0.25), (17.0, 1.61), (18.5, 1.52), (21.0, 1.30),
    (25.0, 1.10), (35.0, 0.95), (50.0, 0.75), (70.0, 0.40), (90.0, 0.0),
]
DEFAULT_CD = [
    (-10.0, 0.035), (0.0, 0.0246), (5.0, 0.0396), (10.0, 0.0678), (17.0, 0.131),
    (18.5, 0.19), (21.0, 0.30), (25.0, 0.42), (35.0, 0.70), (50.0, 1.05),
    (70.0, 1.40), (90.0, 1.60),
]


@dataclass
class AirframeParams:
    """737-class airframe. Short-period matrices act on [w (m/s); q (deg/s)]
    at the reference airspeed ``v_ref``.

    Coefficients are order-of-magnitude transport-category values
    (short-period natural frequency ~2.7 rad/s, damping ratio ~0.5).
    """

    mass: float = 65000.0
    wing_area: float = 125.0
    cl_table: list = field(default_factory=lambda: [list(p) for p in DEFAULT_CL])
    cd_table: list = field(default_factory=lambda: [list(p) for p in DEFAULT_CD])
    flap_cl: float = 0.9
    flap_cd: float = 0.09
    max_thrust: float = 240000.0
    thrust_lapse: float = 0.75
    v_ref: float = 120.0
    a_sp: list = field(default_factory=lambda: [[-0.64, 120.0 * DEG], [-2.98, -2.0]])
    b_sp: list = field(default_factory=lambda: [[0.0], [-150.0]])
    trim_gain: float = 25.0
    pitch_bias: float = 24.94
    # nacelle lift ahead of the CG: extra nose-up moment at high AoA
    pitch_up_alpha: float = 14.0
    pitch_up_gain: float = 28.0
    pitch_up_width: float = 8.0   # deg of AoA over which the pitch-up builds
    hs_min: float = -12.0
    hs_max: float = 5.0
    rpd: float = 18.0
    stall_alpha: float = 17.0
    g: float = G0
    ground_friction: float = 0.02

    def __post_init__(self):
        self.validate()
        self.cl = Table(self.cl_table)
        self.cd = Table(self.cd_table)

    def validate(self) -> None:
        a = np.asarray(self.a_sp, dtype=float)
        b = np.asarray(self.b_sp, dtype=float)
        if a.shape != (2, 2) or b.shape != (2, 1):
            raise ValueError("a_sp must be 2x2 and b_sp 2x1")
        if not np.all(np.linalg.eigvals(a).real < 0):
            raise ValueError("a_sp is not Hurwitz: short-period mode unstable")
        if not self.rpd > 0:
            raise ValueError("rpd must be positive")
        if not self.hs_min < 0 < self.hs_max:
            raise ValueError("stabilizer limits must bracket zero")
        if self.mass <= 0 or self.wing_area <= 0 or self.max_thrust <= 0:
            raise ValueError("mass, wing_area and max_thrust must be positive")
        cl = Table(self.cl_table)
        below = [(x, y) for x, y in zip(cl.xs, cl.ys) if x <= self.stall_alpha]
        above = [(x, y) for x, y in zip(cl.xs, cl.ys) if x >= self.stall_alpha]
        if any(y1 <= y0 for (_, y0), (_, y1) in zip(below, below[1:])):
            raise ValueError("lift table must increase below stall_alpha")
        if any(y1 >= y0 for (_, y0), (_, y1) in zip(above, above[1:])):
            raise ValueError("lift table must decrease above stall_alpha")

    @property
    def m_w(self) -> float:
        return float(self.a_sp[1][0])

    @property
    def m_q(self) -> float:
        return float(self.a_sp[1][1])

    @property
    def m_elevator(self) -> float:
        return float(self.b_sp[1][0])

    @property
    def cl_max(self) -> float:
        return self.cl(self.stall_alpha)

    def thrust_available(self, h: float) -> float:
        return self.max_thrust * (isa_density(h) / RHO0) ** self.thrust_lapse

    def pitch_accel(self, v: float, aoa: float, q: float, elevator: float, hs: float) -> float:
        """Pitch acceleration in deg/s^2."""
        s = v / self.v_ref
        m = (self.m_w * self.v_ref * math.sin(aoa * DEG) + self.m_elevator * elevator
             + self.trim_gain * hs + self.pitch_bias)
        if aoa > self.pitch_up_alpha:
            m += self.pitch_up_gain * min(aoa - self.pitch_up_alpha, self.pitch_up_width)
        return s * s * m + s * self.m_q * q

    def to_dict(self) -> dict:
        return {
            "mass": self.mass, "wing_area": self.wing_area,
            "cl_table": Table(self.cl_table).points(),
            "cd_table": Table(self.cd_table).points(),
            "flap_cl": self.flap_cl, "flap_cd": self.flap_cd,
            "max_thrust": self.max_thrust, "thrust_lapse": self.thrust_lapse,
            "v_ref": self.v_ref, "a_sp": [list(r) for r in self.a_sp],
            "b_sp": [list(r) for r in self.b_sp], "trim_gain": self.trim_gain,
            "pitch_bias": self.pitch_bias, "pitch_up_alpha": self.pitch_up_alpha,
            "pitch_up_gain": self.pitch_up_gain,
            "pitch_up_width": self.pitch_up_width, "hs_min": self.hs_min,
            "hs_max": self.hs_max, "rpd": self.rpd, "stall_alpha": self.stall_alpha,
            "g": self.g, "ground_friction": self.ground_friction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AirframeParams":
        return cls(**d)


# ----------------------------------------------------------------------------
# state and controls


@dataclass(frozen=True)
class ControlInputs:
    elevator: float = 0.0
    throttle: float = 0.5
    bank: float = 0.0
    flaps_up: bool = True


@dataclass(frozen=True)
class AircraftState:
    t: float
    altitude: float
    u: float
    w: float
    pitch: float
    pitch_rate: float
    aoa: float
    gamma: float
    airspeed: float
    hs_trim: float
    elevator: float = 0.0
    thrust: float = 0.0
    flaps_up: bool = True
    heading: float = 0.0
    load_factor: float = 1.0
    on_ground: bool = False
    range_x: float = 0.0

    @property
    def vertical_speed(self) -> float:
        return self.airspeed * math.sin(self.gamma * DEG)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (
            self.t, self.altitude, self.u, self.w, self.pitch, self.pitch_rate,
            self.airspeed, self.gamma, self.hs_trim, self.heading))


def make_state(t, altitude, airspeed, gamma, pitch, pitch_rate, hs_trim, *, elevator=0.0,
               thrust=0.0, flaps_up=True, heading=0.0, load_factor=1.0, on_ground=False,
               range_x=0.0) -> AircraftState:
    """Build a state from the integrated variables; derives aoa, u, w."""
    aoa = pitch - gamma
    a = aoa * DEG
    return AircraftState(
        t=t, altitude=altitude, u=airspeed * math.cos(a), w=airspeed * math.sin(a),
        pitch=pitch, pitch_rate=pitch_rate, aoa=aoa, gamma=gamma, airspeed=airspeed,
        hs_trim=hs_trim, elevator=elevator, thrust=thrust, flaps_up=flaps_up,
        heading=heading, load_factor=load_factor, on_ground=on_ground, range_x=range_x)


def aero_coefficients(params: AirframeParams, aoa: float, flaps_up: bool) -> tuple[float, float]:
    cl = params.cl(aoa)
    cd = params.cd(aoa)
    if not flaps_up:
        cl += params.flap_cl
        cd += params.flap_cd
    return cl, cd


def lift_force(params: AirframeParams, state: AircraftState) -> float:
    cl, _ = aero_coefficients(params, state.aoa, state.flaps_up)
    return 0.5 * isa_density(state.altitude) * state.airspeed ** 2 * params.wing_area * cl


def _derivs(y, params: AirframeParams, elevator, hs, throttle, cos_bank, tan_bank,
            flaps_up, on_ground):
    v, gamma, pitch, q, h = y[0], y[1], y[2], y[3], y[4]
    aoa = pitch - gamma
    rho = isa_density(h)
    # thrust lapses with the stage altitude, not the step's starting one
    thrust = throttle * params.max_thrust * (rho / RHO0) ** params.thrust_lapse
    qs = 0.5 * rho * v * v * params.wing_area
    cl = params.cl(aoa)
    cd = params.cd(aoa)
    if not flaps_up:
        cl += params.flap_cl
        cd += params.flap_cd
    lift = qs * cl
    drag = qs * cd
    m = params.mass
    weight = m * params.g
    g_rad = gamma * DEG
    if on_ground:
        friction = params.ground_friction * max(weight - lift, 0.0)
        vdot = (thrust - drag - friction) / m
        gdot = 0.0
        hdot = 0.0
    else:
        vdot = (thrust - drag) / m - params.g * math.sin(g_rad)
        vv = v if v > 1.0 else 1.0
        gdot = (lift * cos_bank - weight * math.cos(g_rad)) / (m * vv) * RAD
        hdot = v * math.sin(g_rad)
    qdot = params.pitch_accel(v, aoa, q, elevator, hs)
    xdot = v * math.cos(g_rad)
    psidot = params.g * tan_bank / (v if v > 1.0 else 1.0) * RAD
    return (vdot, gdot, q, qdot, hdot, xdot, psidot)


def step(state: AircraftState, controls: ControlInputs, params: AirframeParams,
         dt: float) -> AircraftState:
    """Advance one fixed step with classical RK4.

    The stabilizer trim is held over the step; trim motion is applied
    separately with :func:`apply_trim_rate`.
    """
    if not (dt > 0.0) or not math.isfinite(dt):
        raise InvalidInputError(f"dt must be positive and finite, got {dt!r}")
    if not state.is_finite():
        raise InvalidInputError(f"non-finite state at t={state.t}")
    if not (-1.0 <= controls.elevator <= 1.0) or not (0.0 <= controls.throttle <= 1.0):
        raise InvalidInputError("controls outside actuator limits")
    if not (params.hs_min <= state.hs_trim <= params.hs_max):
        raise InvalidInputError("hs_trim outside stabilizer limits")

    elevator = controls.elevator
    hs = state.hs_trim
    throttle = controls.throttle
    bank = controls.bank * DEG
    cb, tb = math.cos(bank), math.tan(bank)
    fu = controls.flaps_up
    og = state.on_ground

    y = (state.airspeed, state.gamma, state.pitch, state.pitch_rate, state.altitude,
         state.range_x, state.heading)
    k1 = _derivs(y, params, elevator, hs, throttle, cb, tb, fu, og)
    h2 = 0.5 * dt
    y2 = tuple(a + h2 * b for a, b in zip(y, k1))
    k2 = _derivs(y2, params, elevator, hs, throttle, cb, tb, fu, og)
    y3 = tuple(a + h2 * b for a, b in zip(y, k2))
    k3 = _derivs(y3, params, elevator, hs, throttle, cb, tb, fu, og)
    y4 = tuple(a + dt * b for a, b in zip(y, k3))
    k4 = _derivs(y4, params, elevator, hs, throttle, cb, tb, fu, og)
    s = dt / 6.0
    v, gamma, pitch, q, h, x, psi = (
        a + s * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))

    if og:
        h, gamma = 0.0, 0.0
        if pitch < 0.0:
            pitch, q = 0.0, max(q, 0.0)
    cl, _ = aero_coefficients(params, pitch - gamma, fu)
    lift = 0.5 * isa_density(h) * v * v * params.wing_area * cl
    n = lift / (params.mass * params.g)
    if og and lift * cb > params.mass * params.g:
        og = False
    return make_state(state.t + dt, h, v, gamma, pitch, q, hs, elevator=elevator,
                      thrust=throttle * params.thrust_available(h), flaps_up=fu, heading=psi % 360.0, load_factor=n,
                      on_ground=og, range_x=x)


def apply_trim_rate(state: AircraftState, rate: float, dt: float,
                    params: AirframeParams) -> tuple[AircraftState, bool]:
    """Move the stabilizer by ``rate * dt`` degrees, clamped to its limits.

    Returns the new state and whether the command saturated.
    """
    if not math.isfinite(rate):
        raise InvalidInputError("trim rate must be finite")
    target = state.hs_trim + rate * dt
    hs = min(max(target, params.hs_min), params.hs_max)
    clamped = hs != target
    if hs == state.hs_trim:
        return state, clamped
    return replace(state, hs_trim=hs), clamped


# ----------------------------------------------------------------------------
# trim


def trim_residuals(state: AircraftState, params: AirframeParams, bank: float = 0.0) -> tuple:
    """Normalized force and moment residuals of a candidate trim state.

    (along-path force / weight, normal force / weight, pitch accel / |M_alpha|)
    """
    weight = params.mass * params.g
    rho = isa_density(state.altitude)
    qs = 0.5 * rho * state.airspeed ** 2 * params.wing_area
    cl, cd = aero_coefficients(params, state.aoa, state.flaps_up)
    g_rad = state.gamma * DEG
    fx = (state.thrust - qs * cd - weight * math.sin(g_rad)) / weight
    fz = (qs * cl * math.cos(bank * DEG) - weight * math.cos(g_rad)) / weight
    m_alpha = abs(params.m_w * params.v_ref * DEG)
    mq = params.pitch_accel(state.airspeed, state.aoa, state.pitch_rate, state.elevator,
                            state.hs_trim) / m_alpha
    return fx, fz, mq


def trim_from(altitude: float, airspeed: float, climb_angle: float = 0.0,
              params: AirframeParams | None = None, *, flaps_up: bool = True,
              bank: float = 0.0, elevator: float = 0.0, heading: float = 0.0,
              tol: float = 1e-10, max_iter: int = 50) -> AircraftState:
    """Solve for aoa, stabilizer trim and thrust that balance forces and moment.

    Damped Newton iteration on (aoa, hs_trim, thrust) with a finite-difference
    Jacobian. Raises EnvelopeError if the condition cannot be trimmed.
    """
    params = params or AirframeParams()
    if not all(math.isfinite(v) for v in (altitude, airspeed, climb_angle)):
        raise InvalidInputError("trim condition must be finite")
    weight = params.mass * params.g
    rho = isa_density(altitude)
    cl_max = params.cl_max + (0.0 if flaps_up else params.flap_cl)
    if airspeed <= 0.0:
        raise EnvelopeError(f"airspeed {airspeed} m/s below stall")
    cl_req = weight * math.cos(climb_angle * DEG) / (
        0.5 * rho * airspeed ** 2 * params.wing_area * math.cos(bank * DEG))
    if cl_req >= cl_max:
        raise EnvelopeError(f"airspeed {airspeed:.1f} m/s below stall (CL {cl_req:.2f} > {cl_max:.2f})")

    def build(x):
        aoa, hs, thrust = (float(v) for v in x)
        return make_state(0.0, altitude, airspeed, climb_angle, aoa + climb_angle, 0.0, hs,
                          elevator=elevator, thrust=thrust, flaps_up=flaps_up,
                          heading=heading, load_factor=1.0 / math.cos(bank * DEG))

    def resid(x):
        return np.array(trim_residuals(build(x), params, bank))

    x = np.array([4.0, 0.0, 0.3 * params.max_thrust])
    r = resid(x)
    scale = np.array([1.0, 1.0, weight])
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            break
        jac = np.empty((3, 3))
        for j in range(3):
            dx = np.zeros(3)
            dx[j] = 1e-6 * scale[j]
            jac[:, j] = (resid(x + dx) - resid(x - dx)) / (2 * dx[j])
        delta = np.linalg.solve(jac, -r)
        lam = 1.0
        norm0 = np.max(np.abs(r))
        while lam > 1e-4:
            xn = x + lam * delta
            xn[0] = min(max(xn[0], -10.0), params.stall_alpha)
            rn = resid(xn)
            if np.max(np.abs(rn)) < norm0:
                break
            lam *= 0.5
        x, r = xn, rn
    if np.max(np.abs(r)) >= 1e-6:
        raise EnvelopeError(f"trim did not converge (residual {np.max(np.abs(r)):.2e})")
    aoa, hs, thrust = (float(v) for v in x)
    if not params.hs_min <= hs <= params.hs_max:
        raise EnvelopeError(f"trim stabilizer {hs:.2f} deg outside limits")
    if not 0.0 <= thrust <= params.thrust_available(altitude):
        raise EnvelopeError(f"trim thrust {thrust:.0f} N outside engine range")
    return build(x)


def throttle_for(state: AircraftState, params: AirframeParams) -> float:
    return state.thrust / params.thrust_available(state.altitude)
