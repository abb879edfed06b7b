"""Scripted pilot.

The pilot sees only cockpit cues (attitude indicator, right-side air data,
VSI, trim wheel) and flies phase-based maneuver scripts with proportional
inner loops and slowly integrating outer loops. On top of the script sit
two response models: the delayed constant-RPS crank response to
uncommanded trim, and the stall induction / recovery procedure.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable


class PilotConfigError(ValueError):
    pass


@dataclass
class PilotResponseModel:
    tau_sensing: float = 5.0
    crank_rps: float = 3.5
    stall_recovery_elevator: float = 0.4
    misfire_elevator: float = -0.0625
    rpd: float = 18.0

    def __post_init__(self):
        if self.tau_sensing < 0:
            raise PilotConfigError("tau_sensing must be >= 0")
        if self.crank_rps < 0:
            raise PilotConfigError("crank_rps must be >= 0")

    @property
    def crank_rate(self) -> float:
        """Stabilizer rate produced by the crank, deg/s."""
        return self.crank_rps / self.rpd


@dataclass
class PilotGains:
    pitch_kp: float = 0.094     # elevator per deg of pitch error
    pitch_kd: float = 0.0625    # elevator per deg/s of pitch rate
    vs_kp: float = 0.004        # deg of pitch command per fpm of VS error
    vs_ki: float = 0.0008       # deg/s of pitch command per fpm of VS error
    alt_kp: float = 2.0         # fpm of VS command per ft of altitude error
    vs_max: float = 2000.0
    ias_kp: float = 0.3         # deg of pitch per kt (speed on pitch)
    ias_ki: float = 0.03
    thr_ki: float = 0.01        # throttle/s per kt
    autotrim: float = 0.96      # deg/s of trim per unit elevator held
    autotrim_max: float = 0.4
    pitch_err_max: float = 4.0  # deg; bounds the pitch-rate demand
    pitch_min: float = -15.0
    pitch_max: float = 20.0
    pull_ki: float = 0.0625        # elevator/s per deg of AoA error in the pull-up
    hold_ki: float = 0.031         # elevator/s per deg of pitch error while recovering
    stall_pitch_rate: float = 3.0  # deg/s of attitude build-up during stall entry


@dataclass(frozen=True)
class PilotControls:
    elevator: float = 0.0
    trim_crank_rate: float = 0.0
    throttle: float = 0.5
    bank: float = 0.0
    flaps_up: bool = True

    def clamped(self) -> "PilotControls":
        return replace(self, elevator=min(max(self.elevator, -1.0), 1.0),
                       throttle=min(max(self.throttle, 0.0), 1.0))


@dataclass(frozen=True)
class Cues:
    """Cockpit-visible quantities. Air data come from the right-side ADIRU."""
    t: float
    pitch: float
    pitch_rate: float
    ias: float             # kt
    altitude: float        # ft
    vertical_speed: float  # ft/min
    aoa: float             # deg, stick-shaker vane
    heading: float
    hs_trim: float
    uncommanded_trim: bool = False
    on_ground: bool = False


# ----------------------------------------------------------------------------
# maneuver scripts


@dataclass
class Phase:
    """One script step: a control law plus the trigger that ends it.

    ``law`` is one of: ground, pitch, speed_on_pitch, vertical_speed,
    altitude, flare. ``until`` is a predicate on (cues, pilot) or None for a
    terminal phase.
    """
    name: str
    law: str
    target: dict = field(default_factory=dict)
    until: Callable | None = None
    on_enter: dict = field(default_factory=dict)


@dataclass
class ManeuverScript:
    name: str
    phases: list
    initial: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.phases:
            raise PilotConfigError("script has no phases")
        if self.phases[-1].until is not None:
            raise PilotConfigError("final phase must be terminal")


def _ge(key, value):
    return lambda c, p: getattr(c, key) >= value


def _le(key, value):
    return lambda c, p: getattr(c, key) <= value


def takeoff_script(liftoff_ias=170.0, transition_alt=2500.0, cruise_ias=230.0,
                   level_off_alt=6000.0) -> ManeuverScript:
    capture = lambda c, p: c.altitude >= level_off_alt - max(c.vertical_speed, 0.0) * 0.1 - 50.0
    return ManeuverScript("takeoff", [
        Phase("ground_roll", "ground", {"throttle": 0.95}, _ge("ias", liftoff_ias),
              {"flaps_up": False}),
        Phase("rotate", "pitch", {"pitch": 15.0, "pitch_rate": 3.0, "throttle": 0.95},
              lambda c, p: c.altitude >= 50.0 and c.pitch >= 12.0),
        Phase("initial_climb", "speed_on_pitch", {"ias": liftoff_ias + 20.0, "throttle": 0.95},
              _ge("altitude", transition_alt)),
        Phase("accelerate", "speed_on_pitch", {"ias": cruise_ias, "throttle": 0.9,
                                               "flaps_up_ias": liftoff_ias + 15.0,
                                               "pitch_floor": 2.0},
              capture),
        Phase("level_off", "altitude", {"altitude": level_off_alt, "ias": cruise_ias}, None),
    ], {"throttle": 0.95, "flaps_up": False})


def landing_script(initial_alt=3000.0, descent_rate=800.0, approach_ias=140.0) -> ManeuverScript:
    return ManeuverScript("landing", [
        Phase("approach", "vertical_speed", {"vs": -descent_rate, "ias": approach_ias},
              _le("altitude", 45.0)),
        Phase("flare", "flare", {"vs_touchdown": -150.0, "flare_alt": 45.0,
                                 "vs": -descent_rate}, None),
    ], {"flaps_up": False})


def level_script(altitude=6000.0, ias=230.0, turns=(), name="level") -> ManeuverScript:
    """Level (or turning) flight. ``turns`` is a sequence of (bank, heading
    change, straight seconds) legs flown in order."""
    phases = []
    for i, (bank, dpsi, straight) in enumerate(turns):
        phases.append(Phase(f"turn_{i}", "altitude",
                            {"altitude": altitude, "ias": ias, "bank": bank, "turn": dpsi},
                            lambda c, p: p.turned >= p.phase_target("turn")))
        phases.append(Phase(f"straight_{i}", "altitude", {"altitude": altitude, "ias": ias},
                            lambda c, p, s=straight: c.t - p.phase_t0 >= s))
    phases.append(Phase("cruise", "altitude", {"altitude": altitude, "ias": ias}, None))
    return ManeuverScript(name, phases)


def vertical_script(altitude=6000.0, target_alt=9000.0, ias=230.0, rate=1500.0, bank=0.0,
                    name="climb") -> ManeuverScript:
    up = target_alt > altitude
    vs = rate if up else -rate
    done = (lambda c, p: c.altitude >= target_alt - 100.0) if up else (
        lambda c, p: c.altitude <= target_alt + 100.0)
    return ManeuverScript(name, [
        Phase("transit", "vertical_speed", {"vs": vs, "ias": ias, "bank": bank}, done),
        Phase("level", "altitude", {"altitude": target_alt, "ias": ias}, None),
    ])


def accelerate_script(altitude=6000.0, ias=200.0, target_ias=280.0) -> ManeuverScript:
    return ManeuverScript("accelerate", [
        Phase("accelerate", "altitude", {"altitude": altitude, "ias": target_ias,
                                         "throttle_max": True},
              _ge("ias", target_ias - 2.0)),
        Phase("cruise", "altitude", {"altitude": altitude, "ias": target_ias}, None),
    ])


# ----------------------------------------------------------------------------
# response models


def recovery_response(mcas_event_t: float, response: PilotResponseModel, t: float,
                      hs_trim: float, hs_reference: float) -> PilotControls | None:
    """Crank overlay after a perceived misfire.

    None while the pilot has not yet reacted; a zero overlay once the
    stabilizer is back at ``hs_reference``; otherwise the constant-RPS crank
    with the misfire elevator.
    """
    if t < mcas_event_t + response.tau_sensing:
        return None
    if hs_trim >= hs_reference:
        return PilotControls(elevator=0.0, trim_crank_rate=0.0)
    return PilotControls(elevator=response.misfire_elevator,
                         trim_crank_rate=response.crank_rate)


def check_stall_target(target_pitch: float) -> None:
    if not 20.0 <= target_pitch <= 90.0:
        raise PilotConfigError(f"stall target pitch {target_pitch} outside [20, 90]")


def stall_induction(target_pitch: float, cues: Cues, gains: PilotGains | None = None,
                    pitch_cmd: float | None = None) -> float:
    """Elevator for the deliberate pull toward ``target_pitch``.

    ``pitch_cmd`` is the rate-limited intermediate attitude; it defaults to
    the target itself.
    """
    check_stall_target(target_pitch)
    g = gains or PilotGains()
    cmd = target_pitch if pitch_cmd is None else pitch_cmd
    return min(max(g.pitch_kp * (cues.pitch - cmd) + g.pitch_kd * cues.pitch_rate,
                   -1.0), 1.0)


# ----------------------------------------------------------------------------
# the pilot


@dataclass
class StallPlan:
    target_pitch: float
    start_t: float
    recovery_pitch: float = -8.0
    recovery_ias: float = 170.0
    max_recovery_aoa: float = 11.0

    def __post_init__(self):
        check_stall_target(self.target_pitch)


class Pilot:
    """Deterministic scripted pilot driven only by :class:`Cues`."""

    def __init__(self, script: ManeuverScript, response: PilotResponseModel | None = None,
                 gains: PilotGains | None = None, stall: StallPlan | None = None,
                 stall_aoa: float = 17.0):
        self.script = script
        self.response = response or PilotResponseModel()
        self.gains = gains or PilotGains()
        self.stall = stall
        self.stall_aoa = stall_aoa
        self.phase_idx = 0
        self.phase_t0 = 0.0
        self.turned = 0.0
        self._last_heading = None
        self.pitch_cmd = None
        self.throttle = script.initial.get("throttle", None)
        self.flaps_up = script.initial.get("flaps_up", True)
        self.last = PilotControls(throttle=self.throttle or 0.5, flaps_up=self.flaps_up)
        self.events: list = []
        # misfire response
        self.event_t = None
        self.hs_reference = None
        self.cranking = False
        self.last_hs = None
        # stall procedure
        self.stall_mode = None        # None, induce, startled, push, pullup, climb
        self.stall_trigger_t = None
        self.stall_hs_reference = None
        self.stall_alt_reference = None
        self.stall_ias_reference = None
        self.pull_elev = 0.0
        self.peak_pull = 0.0

    # -- helpers -------------------------------------------------------------

    @property
    def phase(self) -> Phase:
        return self.script.phases[self.phase_idx]

    def phase_target(self, key, default=None):
        return self.phase.target.get(key, default)

    def log(self, t, kind, **info):
        self.events.append({"t": t, "event": kind, **info})

    def _pitch_elevator(self, cues: Cues, pitch_cmd: float) -> float:
        g = self.gains
        err = min(max(cues.pitch - pitch_cmd, -g.pitch_err_max), g.pitch_err_max)
        return g.pitch_kp * err + g.pitch_kd * cues.pitch_rate

    def _autotrim(self, elevator: float) -> float:
        g = self.gains
        r = -g.autotrim * elevator
        return min(max(r, -g.autotrim_max), g.autotrim_max)

    def _throttle_hold(self, cues: Cues, ias_target: float, dt: float) -> float:
        thr = self.throttle if self.throttle is not None else 0.5
        thr += self.gains.thr_ki * (ias_target - cues.ias) * dt
        self.throttle = min(max(thr, 0.05), 1.0)
        return self.throttle

    def _vs_to_pitch(self, cues: Cues, vs_cmd: float, dt: float) -> float:
        g = self.gains
        err = vs_cmd - cues.vertical_speed
        if self.pitch_cmd is None:
            self.pitch_cmd = cues.pitch - g.vs_kp * err
        self.pitch_cmd += g.vs_ki * err * dt
        self.pitch_cmd = min(max(self.pitch_cmd, g.pitch_min), g.pitch_max)
        return min(max(self.pitch_cmd + g.vs_kp * err, g.pitch_min), g.pitch_max)

    # -- script ---------------------------------------------------------------

    def _advance(self, cues: Cues):
        ph = self.phase
        while ph.until is not None and ph.until(cues, self):
            self.phase_idx += 1
            self.phase_t0 = cues.t
            self.turned = 0.0
            self.pitch_cmd = None
            ph = self.phase
            self.flaps_up = ph.on_enter.get("flaps_up", self.flaps_up)
            self.log(cues.t, "phase", phase=ph.name)

    def _script_controls(self, cues: Cues, dt: float) -> PilotControls:
        ph = self.phase
        tg = ph.target
        g = self.gains
        law = ph.law
        bank = tg.get("bank", 0.0)
        if "turn" in tg:
            if self._last_heading is not None:
                d = (cues.heading - self._last_heading + 180.0) % 360.0 - 180.0
                self.turned += abs(d)
        self._last_heading = cues.heading
        if "flaps_up_ias" in tg and not self.flaps_up and cues.ias >= tg["flaps_up_ias"]:
            self.flaps_up = True
            self.log(cues.t, "flaps_up")
        throttle = self.throttle if self.throttle is not None else 0.5
        if law == "ground":
            self.throttle = throttle = tg["throttle"]
            elev = self._pitch_elevator(cues, 0.0)
            self.pitch_cmd = cues.pitch
            return PilotControls(elev, 0.0, throttle, 0.0, self.flaps_up)
        if law == "pitch":
            self.throttle = throttle = tg.get("throttle", throttle)
            if self.pitch_cmd is None:
                self.pitch_cmd = cues.pitch
            self.pitch_cmd = min(self.pitch_cmd + tg.get("pitch_rate", 2.0) * dt, tg["pitch"])
            pitch_cmd = self.pitch_cmd
        elif law == "speed_on_pitch":
            self.throttle = throttle = tg.get("throttle", throttle)
            err = tg["ias"] - cues.ias
            if self.pitch_cmd is None:
                self.pitch_cmd = cues.pitch + g.ias_kp * err
            floor = tg.get("pitch_floor", 0.0)
            self.pitch_cmd = min(max(self.pitch_cmd - g.ias_ki * err * dt, floor), g.pitch_max)
            pitch_cmd = min(max(self.pitch_cmd - g.ias_kp * err, floor), g.pitch_max)
        elif law == "vertical_speed":
            throttle = self._throttle_hold(cues, tg["ias"], dt)
            pitch_cmd = self._vs_to_pitch(cues, tg["vs"], dt)
        elif law == "altitude":
            if tg.get("throttle_max"):
                self.throttle = throttle = 0.9
            else:
                throttle = self._throttle_hold(cues, tg["ias"], dt)
            err = tg["altitude"] - cues.altitude
            vs_cmd = min(max(g.alt_kp * err, -g.vs_max), g.vs_max)
            pitch_cmd = self._vs_to_pitch(cues, vs_cmd, dt)
        elif law == "flare":
            frac = max(cues.altitude, 0.0) / tg["flare_alt"]
            vs_cmd = tg["vs_touchdown"] + (tg["vs"] - tg["vs_touchdown"]) * frac
            self.throttle = throttle = max(throttle - 0.1 * dt, 0.0)
            pitch_cmd = self._vs_to_pitch(cues, vs_cmd, dt)
        else:
            raise PilotConfigError(f"unknown control law {law!r}")
        elev = self._pitch_elevator(cues, pitch_cmd)
        trim = self._autotrim(elev)
        return PilotControls(elev, trim, throttle, bank, self.flaps_up)

    # -- main entry -----------------------------------------------------------

    def step(self, cues: Cues, dt: float) -> PilotControls:
        if self.stall is not None and (self.stall_mode is not None or cues.t >= self.stall.start_t):
            ctl = self._stall_step(cues, dt)
        else:
            ctl = self._misfire_step(cues, dt)
        self.last = ctl.clamped()
        return self.last

    def _misfire_step(self, cues: Cues, dt: float) -> PilotControls:
        r = self.response
        if cues.uncommanded_trim and self.event_t is None:
            self.event_t = cues.t
            self.hs_reference = self.last_hs if self.last_hs is not None else cues.hs_trim
            self.log(cues.t, "trim_motion_sensed", hs_reference=self.hs_reference)
        self.last_hs = cues.hs_trim
        if self.event_t is not None:
            ov = recovery_response(self.event_t, r, cues.t, cues.hs_trim, self.hs_reference)
            if ov is None:
                # not yet perceived: hands stay where they were
                return replace(self.last, trim_crank_rate=0.0)
            if ov.trim_crank_rate > 0.0:
                if not self.cranking:
                    self.cranking = True
                    self.log(cues.t, "crank_start")
                return replace(self.last, elevator=ov.elevator,
                               trim_crank_rate=ov.trim_crank_rate)
            self.log(cues.t, "crank_stop")
            self.cranking = False
            self.event_t = None
            self.pitch_cmd = None
        self._advance(cues)
        return self._script_controls(cues, dt)

    def _stall_step(self, cues: Cues, dt: float) -> PilotControls:
        sp = self.stall
        g = self.gains
        if self.stall_mode is None:
            self.stall_mode = "induce"
            self.stall_hs_reference = cues.hs_trim
            self.stall_alt_reference = cues.altitude
            self.stall_ias_reference = cues.ias
            self.pitch_cmd = cues.pitch
            self.log(cues.t, "stall_induction", target_pitch=sp.target_pitch)
        mode = self.stall_mode
        if mode == "induce" and (cues.aoa > self.stall_aoa or cues.uncommanded_trim):
            self.stall_trigger_t = cues.t
            self.stall_mode = mode = "startled"
            self.log(cues.t, "stall_sensed")
        if mode == "induce":
            self.pitch_cmd = min(self.pitch_cmd + g.stall_pitch_rate * dt, sp.target_pitch)
            elev = stall_induction(sp.target_pitch, cues, g, self.pitch_cmd)
            self.peak_pull = min(self.peak_pull, elev)
            return replace(self.last, elevator=elev, trim_crank_rate=0.0)
        if mode == "startled":
            if cues.t < self.stall_trigger_t + self.response.tau_sensing:
                # the startled pilot keeps the column at its furthest-aft position
                return replace(self.last, elevator=self.peak_pull, trim_crank_rate=0.0)
            self.stall_mode = mode = "push"
            self.log(cues.t, "recovery_start")
        if mode == "push":
            if cues.aoa > sp.max_recovery_aoa:
                self.pull_elev = elev = self.response.stall_recovery_elevator
            else:
                elev = min(self._held_pitch(cues, sp.recovery_pitch, dt),
                           self.response.stall_recovery_elevator)
                if cues.ias >= sp.recovery_ias:
                    self.stall_mode = "pullup"
                    self.log(cues.t, "pullup_start")
            return replace(self.last, elevator=elev, trim_crank_rate=0.0, throttle=1.0)
        if mode == "pullup":
            # pull to a fixed angle of attack below the stall break
            err = cues.aoa - (sp.max_recovery_aoa - 2.0)
            self.pull_elev = min(max(self.pull_elev + g.pull_ki * err * dt, -1.0), 1.0)
            elev = self.pull_elev + g.pitch_kp * err + g.pitch_kd * cues.pitch_rate
            if cues.vertical_speed >= 0.0:
                self.stall_mode = "climb"
                self.pitch_cmd = None
                self.log(cues.t, "climb_back")
            return replace(self.last, elevator=elev, trim_crank_rate=0.0, throttle=1.0)
        # climb back to the pre-event altitude while cranking the stabilizer home
        err = self.stall_alt_reference - cues.altitude
        vs_cmd = min(max(g.alt_kp * err, -g.vs_max), g.vs_max)
        elev = self._held_pitch(cues, self._vs_to_pitch(cues, vs_cmd, dt), dt)
        if cues.aoa > sp.max_recovery_aoa:
            elev = max(elev, g.pitch_kp * (cues.aoa - sp.max_recovery_aoa))
        if cues.hs_trim < self.stall_hs_reference:
            crank = self.response.crank_rate
        else:
            crank = self._autotrim(elev)
        thr = self._throttle_hold(cues, self.stall_ias_reference, dt)
        return replace(self.last, elevator=elev, trim_crank_rate=crank, throttle=thr)

    def _held_pitch(self, cues: Cues, pitch_cmd: float, dt: float) -> float:
        """Pitch tracking with a column-hold integrator against mistrim."""
        g = self.gains
        err = min(max(cues.pitch - pitch_cmd, -g.pitch_err_max), g.pitch_err_max)
        self.pull_elev = min(max(self.pull_elev + g.hold_ki * err * dt, -1.0), 1.0)
        return self.pull_elev + g.pitch_kp * err + g.pitch_kd * cues.pitch_rate

def pilot_step(cues: Cues, pilot: Pilot, dt: float) -> PilotControls:
    return pilot.step(cues, dt)
