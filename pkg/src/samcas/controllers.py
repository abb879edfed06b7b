"""MCAS variants behind one controller interface.

Each variant decides once per simulation step whether to issue a nose-down
stabilizer command. Commands are executed by a rate-limited trim actuator
owned by the controller; the decision functions only mutate ``McasState``.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field, asdict

from . import sads
from .dynamics import AirframeParams
from .sensing import AirDataFrame

VARIANTS = ("mcas_old", "mcas_new", "sa_mcas")


@dataclass
class McasConfig:
    aoa_threshold: float = 17.0
    deflection_low_speed: float = 2.5
    deflection_high_speed: float = 0.6
    cooldown: float = 11.0
    disagreement_limit: float = 5.5
    trim_rate: float = 0.25
    high_speed_mach: float = 0.4
    gforce_threshold: float = 1.3
    rearm_hysteresis: float = 2.0
    override_column: float = 0.25
    epsilon: dict = field(default_factory=lambda: dict(sads.DEFAULT_EPSILON))

    def __post_init__(self):
        for name in ("aoa_threshold", "deflection_low_speed", "deflection_high_speed",
                     "cooldown", "disagreement_limit", "trim_rate", "high_speed_mach",
                     "gforce_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"McasConfig.{name} must be positive")
        if not self.deflection_high_speed < self.deflection_low_speed:
            raise ValueError("high-speed deflection must be below low-speed deflection")
        if any(not e > 0 for e in self.epsilon.values()):
            raise ValueError("epsilon must be positive")


@dataclass
class McasState:
    last_fire_t: float | None = None
    fired_this_event: bool = False
    mvs_stored: float | None = None
    active_command: float | None = None
    activations: int = 0


@dataclass(frozen=True)
class TrimCommand:
    total_deflection: float
    rate: float
    issued_t: float
    source: str

    def __post_init__(self):
        if not (self.total_deflection > 0 and self.rate > 0):
            raise ValueError("trim command needs positive deflection and rate")


def mvs_select(stored: float | None, left: float, right: float) -> float:
    """Mid-value select; the first call, with nothing stored, averages the sides."""
    if stored is None:
        return 0.5 * (left + right)
    return statistics.median((stored, left, right))


def _deflection(mach: float, cfg: McasConfig) -> float:
    return cfg.deflection_low_speed if mach < cfg.high_speed_mach else cfg.deflection_high_speed


def _speed_gate(mach: float, gforce: float, cfg: McasConfig) -> bool:
    return mach < cfg.high_speed_mach or gforce > cfg.gforce_threshold


def _cooled(state: McasState, cfg: McasConfig, t: float) -> bool:
    # small slack so an 11 s cooldown is not missed by float step accumulation
    return state.last_fire_t is None or t - state.last_fire_t >= cfg.cooldown - 1e-9


def _fire(state: McasState, mach: float, cfg: McasConfig, t: float, source: str) -> TrimCommand:
    defl = _deflection(mach, cfg)
    state.last_fire_t = t
    state.active_command = defl
    state.activations += 1
    return TrimCommand(defl, cfg.trim_rate, t, source)


def is_stall(correct, threshold: float = 17.0) -> bool:
    """True iff a surviving AoA reading exceeds the threshold."""
    return any(r.channel == "aoa" and r.value > threshold for r in correct)


def mcas_old_step(left: AirDataFrame, state: McasState, cfg: McasConfig, t: float,
                  record: dict | None = None) -> TrimCommand | None:
    high_aoa = left.aoa > cfg.aoa_threshold
    cooled = _cooled(state, cfg, t)
    gate = _speed_gate(left.mach, left.gforce, cfg)
    if record is not None:
        record.update(aoa_used=left.aoa, high_aoa=high_aoa, cooled=cooled, speed_gate=gate)
    if high_aoa and cooled and gate:
        return _fire(state, left.mach, cfg, t, "mcas_old")
    return None


def mcas_new_step(left: AirDataFrame, right: AirDataFrame, flaps_up: bool,
                  pilot_column_active: bool, state: McasState, cfg: McasConfig, t: float,
                  record: dict | None = None) -> TrimCommand | None:
    """Dual-sensor, once-per-event MCAS.

    ``pilot_column_active`` only affects execution of an active command (see
    :class:`Controller`); activation itself is not gated by it.
    """
    selected = mvs_select(state.mvs_stored, left.aoa, right.aoa)
    state.mvs_stored = selected
    if state.fired_this_event and selected < cfg.aoa_threshold - cfg.rearm_hysteresis:
        state.fired_this_event = False
    disagree = abs(left.aoa - right.aoa) > cfg.disagreement_limit
    mach = 0.5 * (left.mach + right.mach)
    gforce = 0.5 * (left.gforce + right.gforce)
    gate = _speed_gate(mach, gforce, cfg)
    high_aoa = selected > cfg.aoa_threshold
    if record is not None:
        record.update(aoa_used=selected, high_aoa=high_aoa, disagree=disagree,
                      flaps_up=flaps_up, fired_this_event=state.fired_this_event,
                      speed_gate=gate, column_override=pilot_column_active)
    if disagree or not flaps_up or state.fired_this_event:
        return None
    if high_aoa and gate:
        state.fired_this_event = True
        return _fire(state, mach, cfg, t, "mcas_new")
    return None


def sa_mcas_step(left: AirDataFrame, right: AirDataFrame, inertial: tuple[float, float],
                 params: AirframeParams, state: McasState, cfg: McasConfig, t: float,
                 flaps_up: bool = True, record: dict | None = None) -> TrimCommand | None:
    """Arbitrated MCAS: acts only on a physical reading confirmed by SADS."""
    u, w = inertial
    est_w = {"aoa": sads.estimate_model_free(u, w)}
    est_m = {"aoa": sads.estimate_model_based((left, right), params, flaps_up)}
    s_sads = sads.internal_consistency(est_w, est_m, cfg.epsilon)
    correct = sads.arbiter({"aoa": left.aoa}, {"aoa": right.aoa}, s_sads, cfg.epsilon)
    stall = is_stall(correct, cfg.aoa_threshold)
    cooled = _cooled(state, cfg, t)
    src = None
    if correct:
        src = left if correct[0].side == "left" else right
    gate = src is not None and _speed_gate(src.mach, src.gforce, cfg)
    if record is not None:
        record.update(est_model_free=est_w["aoa"], est_model_based=est_m["aoa"],
                      sads=s_sads.get("aoa"),
                      correct=[tuple(r) for r in correct],
                      aoa_used=correct[0].value if correct else None,
                      high_aoa=stall, cooled=cooled, speed_gate=gate)
    if stall and cooled and gate:
        return _fire(state, src.mach, cfg, t, "sa_mcas")
    return None


class Controller:
    """One MCAS variant plus its rate-limited stabilizer actuator."""

    def __init__(self, variant: str, cfg: McasConfig | None = None,
                 params: AirframeParams | None = None):
        if variant not in VARIANTS:
            raise ValueError(f"unknown MCAS variant {variant!r}")
        self.variant = variant
        self.cfg = cfg or McasConfig()
        self.params = params or AirframeParams()
        self.state = McasState()
        self.last_record: dict = {}
        self.last_sads: float | None = None

    def decide(self, left: AirDataFrame, right: AirDataFrame, *, flaps_up: bool,
               pilot_elevator: float, inertial: tuple[float, float], t: float):
        rec: dict = {"t": t, "variant": self.variant}
        column = self.column_opposes(pilot_elevator)
        if self.variant == "mcas_old":
            cmd = mcas_old_step(left, self.state, self.cfg, t, rec)
        elif self.variant == "mcas_new":
            cmd = mcas_new_step(left, right, flaps_up, column, self.state, self.cfg, t, rec)
        else:
            cmd = sa_mcas_step(left, right, inertial, self.params, self.state, self.cfg, t,
                               flaps_up, rec)
        self.last_sads = rec.get("sads")
        rec["command"] = asdict(cmd) if cmd else None
        self.last_record = rec
        return cmd

    def column_opposes(self, pilot_elevator: float) -> bool:
        # negative elevator is nose-up, which opposes a nose-down command
        return pilot_elevator < -self.cfg.override_column

    def actuate(self, dt: float, pilot_elevator: float = 0.0) -> float:
        """Stabilizer rate (deg/s, negative = nose-down) for this step."""
        rem = self.state.active_command
        if not rem:
            return 0.0
        if self.variant == "mcas_new" and self.column_opposes(pilot_elevator):
            return 0.0
        move = min(rem, self.cfg.trim_rate * dt)
        rem -= move
        self.state.active_command = rem if rem > 1e-12 else None
        return -move / dt
