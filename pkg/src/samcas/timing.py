"""Closed-form recoverability timing: crank action time, falling-object
velocity, terminal velocity and the two-term recovery deadline."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass


class OutOfRegimeError(ValueError):
    """Initial velocity at or beyond terminal velocity."""


@dataclass
class RecoveryTimingParams:
    tau_sensing: float = 5.0
    crank_rps: float = 3.5
    rpd: float = 18.0
    x_stab_offset: float = 2.5
    tau_mcas_cd: float = 11.0
    mass: float = 65000.0
    thrust: float = 40000.0
    climb_angle: float = 0.0  # radians
    rho: float = 1.225
    area: float = 125.0
    cd: float = 0.04
    cl: float = 0.5
    g: float = 9.80665
    v0: float = 0.0

    @property
    def weight(self) -> float:
        return self.mass * self.g


@dataclass(frozen=True)
class Deadline:
    value: float
    which_term: str
    altitude_term: float
    mcas_term: float | None


@dataclass(frozen=True)
class DeadlineVerdict:
    tau: float
    tau_deadline: float
    which_term: str
    recoverable: bool
    t_start: float = 0.0

    def to_dict(self) -> dict:
        return {"tau": self.tau, "tau_deadline": self.tau_deadline,
                "which_term": self.which_term, "recoverable": self.recoverable,
                "t_start": self.t_start}


def tau_action(x_stab_offset: float, rpd: float, crank_rps: float) -> float:
    """Seconds of cranking to move the stabilizer back; ``inf`` when not cranking."""
    if x_stab_offset == 0:
        return 0.0
    if crank_rps <= 0:
        return math.inf
    return x_stab_offset * rpd / crank_rps


def required_rps(x_stab_offset: float, rpd: float, tau_mcas_cd: float) -> float:
    """Crank rate needed to undo one activation within one cooldown."""
    if tau_mcas_cd <= 0:
        raise ValueError("cooldown must be positive")
    return rpd * x_stab_offset / tau_mcas_cd


def sum_forces(v: float, p: RecoveryTimingParams) -> float:
    """G + D sin c - L cos c - T sin c, positive downward."""
    k = 0.5 * p.rho * p.area * v * v
    s, c = math.sin(p.climb_angle), math.cos(p.climb_angle)
    return p.weight + k * p.cd * s - k * p.cl * c - p.thrust * s


def terminal_velocity(p: RecoveryTimingParams) -> float | None:
    """Velocity where the vertical forces cancel; None if no steady fall exists."""
    s, c = math.sin(p.climb_angle), math.cos(p.climb_angle)
    num = p.thrust * s - p.weight
    den = 0.5 * p.rho * p.area * (p.cd * s - p.cl * c)
    if den == 0.0:
        return None
    rad = num / den
    if not rad > 0.0 or not math.isfinite(rad):
        return None
    return math.sqrt(rad)


def falling_velocity(v0: float, t: float, p: RecoveryTimingParams) -> float:
    if t < 0:
        raise ValueError("t must be non-negative")
    vt = terminal_velocity(p)
    if vt is None:
        raise OutOfRegimeError("configuration admits no terminal velocity")
    if not -vt < v0 < vt:
        raise OutOfRegimeError(f"v0={v0} outside (-v_t, v_t) with v_t={vt}")
    k = p.thrust * math.sin(p.climb_angle) - p.weight
    return vt * math.tanh(math.atanh(v0 / vt) - t * k / (vt * p.mass))


def altitude_term(h: float, v0: float, tau: float, t_current: float,
                  p: RecoveryTimingParams) -> float:
    """t_current + h / v(t + tau), falling back to h / max(v0, 1) outside the
    closed form's regime."""
    if h <= 0:
        return t_current
    try:
        v = falling_velocity(v0, tau, p)
    except OutOfRegimeError:
        v = max(v0, 1.0)
    if v <= 0:
        return math.inf
    return t_current + h / v


def recovery_deadline(h: float, v_future: float, last_mcas_fire_t: float | None,
                      tau_mcas_cd: float, t_current: float) -> Deadline:
    """min(altitude hard deadline, next-activation soft deadline).

    ``v_future`` is the descent velocity at t + tau; the soft term is omitted
    when MCAS has not fired.
    """
    if h < 0:
        raise ValueError("altitude must be non-negative")
    if h == 0:
        alt = t_current
    elif v_future <= 0:
        alt = math.inf
    else:
        alt = t_current + h / v_future
    soft = None if last_mcas_fire_t is None else last_mcas_fire_t + tau_mcas_cd
    if soft is not None and soft < alt:
        return Deadline(soft, "mcas-soft", alt, soft)
    return Deadline(alt, "altitude-hard", alt, soft)


def is_recoverable(t_start_bad_event: float, tau_sensing: float, tau_action_s: float,
                   tau_deadline) -> DeadlineVerdict:
    which = "altitude-hard"
    if isinstance(tau_deadline, Deadline):
        which = tau_deadline.which_term
        tau_deadline = tau_deadline.value
    tau = tau_sensing + tau_action_s
    ok = math.isfinite(tau) and t_start_bad_event + tau <= tau_deadline
    return DeadlineVerdict(tau, tau_deadline, which, ok, t_start_bad_event)


def analyze(p: RecoveryTimingParams, h: float, t_current: float, t_start: float,
            last_mcas_fire_t: float | None = None) -> DeadlineVerdict:
    """Deadline verdict for one bad event from a parameter set."""
    ta = tau_action(p.x_stab_offset, p.rpd, p.crank_rps)
    tau = p.tau_sensing + ta
    # an unbounded action time fails regardless of where v(t) is evaluated
    alt = altitude_term(h, p.v0, tau if math.isfinite(tau) else p.tau_sensing, t_current, p)
    soft = None if last_mcas_fire_t is None else last_mcas_fire_t + p.tau_mcas_cd
    if soft is not None and soft < alt:
        dl = Deadline(soft, "mcas-soft", alt, soft)
    else:
        dl = Deadline(alt, "altitude-hard", alt, soft)
    return is_recoverable(t_start, p.tau_sensing, ta, dl)


class FirmDeadlineCounter:
    """(m, k)-firm bookkeeping: catastrophic once ``m`` of the last ``k``
    soft deadlines were missed."""

    def __init__(self, m: int = 3, k: int = 3):
        if not 1 <= m <= k:
            raise ValueError("need 1 <= m <= k")
        self.m, self.k = m, k
        self.window: deque = deque(maxlen=k)
        self.consecutive = 0
        self.max_consecutive = 0

    def record(self, missed: bool) -> bool:
        self.window.append(bool(missed))
        self.consecutive = self.consecutive + 1 if missed else 0
        self.max_consecutive = max(self.max_consecutive, self.consecutive)
        return self.violated

    @property
    def violated(self) -> bool:
        return sum(self.window) >= self.m
