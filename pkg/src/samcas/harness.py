"""Closed-loop scenario runner, stress sweeps and validation corpora."""
from __future__ import annotations

import copy
import csv
import hashlib
import itertools
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .config import ScenarioConfig, resolve, set_path
from .controllers import Controller
from .dynamics import (AircraftState, ControlInputs, EnvelopeError, apply_trim_rate,
                       isa_density, make_state, step, throttle_for, trim_from)
from .pilot import (Cues, Pilot, StallPlan, accelerate_script, landing_script, level_script,
                    takeoff_script, vertical_script)
from .sensing import M_TO_FT, MPS_TO_KT, RHO0, Sensors

TRACE_COLUMNS = ("t", "altitude_ft", "ias_kts", "aoa_true", "aoa_left", "aoa_right", "aoa_sads",
                 "pitch", "hs_trim", "elevator", "mcas_cmd", "pilot_crank", "verdict_flags")

FLAG_AIRBORNE = 1
FLAG_MCAS_ACTIVE = 2
FLAG_CRANKING = 4
FLAG_TRIM_CLAMPED = 8
FLAG_EVENT_OVER = 16

VERDICTS = ("recovered", "crashed", "timeout", "aborted")


class NonMonotoneError(RuntimeError):
    """Prescan of a sweep found recovered values above a failing one."""

    def __init__(self, path: str, table):
        self.path = path
        self.table = table
        rows = ", ".join(f"{v:g}:{'R' if ok else 'X'}" for v, ok in table)
        super().__init__(f"outcome not monotone in {path}: {rows}")


@dataclass
class SimOutcome:
    verdict: str
    min_altitude_ft: float
    mcas_activation_count: int
    consecutive_soft_deadline_misses: int
    t_end: float
    trace_hash: str
    config_hash: str
    trace: list = field(default_factory=list, repr=False)
    decisions: list = field(default_factory=list, repr=False)
    events: list = field(default_factory=list, repr=False)
    clamp_events: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def recovered(self) -> bool:
        return self.verdict == "recovered"

    def summary(self) -> dict:
        return {"verdict": self.verdict, "min_altitude_ft": self.min_altitude_ft,
                "mcas_activation_count": self.mcas_activation_count,
                "consecutive_soft_deadline_misses": self.consecutive_soft_deadline_misses,
                "t_end": self.t_end, "trace_hash": self.trace_hash,
                "config_hash": self.config_hash, "clamp_events": self.clamp_events,
                **self.diagnostics}


# ----------------------------------------------------------------------------
# initial conditions and scripts


def ias_to_tas(ias_kt: float, altitude_m: float) -> float:
    """Knots equivalent airspeed to true airspeed in m/s."""
    return ias_kt / MPS_TO_KT * math.sqrt(RHO0 / isa_density(altitude_m))


def _script(name: str, p: dict):
    if name == "takeoff":
        return takeoff_script(**p)
    if name == "landing":
        return landing_script(**p)
    if name == "level":
        return level_script(p["altitude"], p["ias"])
    if name == "level_turn":
        return level_script(p["altitude"], p["ias"], [(p["bank"], p["turn"], 20.0)],
                            name="level_turn")
    if name == "holding":
        legs = [(p["bank"], 180.0, p["leg_s"])] * 2
        return level_script(p["altitude"], p["ias"], legs, name="holding")
    if name in ("climb", "descend", "climb_turn", "descend_turn"):
        return vertical_script(p["altitude"], p["target_alt"], p["ias"], p["rate"],
                               p.get("bank", 0.0), name=name)
    if name == "accelerate":
        return accelerate_script(p["altitude"], p["ias"], p["target_ias"])
    raise ValueError(f"unknown maneuver {name!r}")


def initial_state(name: str, p: dict, params) -> AircraftState:
    """Trimmed initial condition for a maneuver (ground roll for takeoff)."""
    if name == "takeoff":
        climb_v = ias_to_tas(p["liftoff_ias"] + 20.0, 300.0)
        try:
            hs = trim_from(300.0, climb_v, 8.0, params, flaps_up=False).hs_trim
        except EnvelopeError:
            hs = 2.0
        st = make_state(0.0, 0.0, 5.0, 0.0, 0.0, 0.0, hs, flaps_up=False, on_ground=True)
        return st
    if name == "landing":
        h = p["initial_alt"] / M_TO_FT
        v = ias_to_tas(p["approach_ias"], h)
        gamma = -math.degrees(math.asin(min(p["descent_rate"] / M_TO_FT / 60.0 / v, 0.5)))
        return trim_from(h, v, gamma, params, flaps_up=False)
    h = p["altitude"] / M_TO_FT
    return trim_from(h, ias_to_tas(p["ias"], h), 0.0, params)


# ----------------------------------------------------------------------------
# the closed loop


def _pack_row(row) -> bytes:
    return struct.pack("<12dq", *(float("nan") if v is None else float(v) for v in row[:12]),
                       int(row[12]))


def run_scenario(cfg, *, record_trace: bool = True, record_decisions: bool = False,
                 early_stop: bool = True) -> SimOutcome:
    """Simulate one scenario in lockstep: sense, decide, actuate, pilot, integrate."""
    if isinstance(cfg, dict):
        cfg = ScenarioConfig.from_dict(cfg)
    r = cfg.raw
    params = cfg.airframe
    dt = cfg.dt
    man = r["maneuver"]
    rec = r["recovery"]
    state = initial_state(man["name"], man["params"], params)
    sensors = Sensors(cfg.noise, cfg.faults)
    ctrl = Controller(cfg.variant, cfg.mcas, params)
    stall = StallPlan(**{"start_t": 20.0, **r["stall"]}) if r.get("stall") else None
    pilot = Pilot(_script(man["name"], man["params"]), cfg.pilot, cfg.gains, stall,
                  stall_aoa=cfg.mcas.aoa_threshold)
    if man["name"] != "takeoff":
        pilot.throttle = throttle_for(state, params)
        pilot.flaps_up = state.flaps_up
        pilot.pitch_cmd = state.pitch

    event_t = None
    event_end = None
    if cfg.faults:
        event_t = min(f.t0 for f in cfg.faults)
        event_end = max(f.t_end for f in cfg.faults)
    if stall is not None:
        event_t = stall.start_t if event_t is None else min(event_t, stall.start_t)
        event_end = stall.start_t if event_end is None else max(event_end, stall.start_t)

    hasher = hashlib.blake2b(digest_size=8)
    trace: list = []
    decisions: list = []
    alt_ref = None
    airborne = not state.on_ground
    min_alt = state.altitude * M_TO_FT if airborne else math.inf
    hold_start = None
    verdict = None
    clamps = 0
    misses = 0
    max_misses = 0
    seq_hs_ref = None
    last_fire_seen = None
    crank_active = False
    n_steps = int(round(cfg.duration / dt))
    landing = man["name"] == "landing"
    touchdown_sink = None
    k = 0
    for k in range(n_steps):
        t = k * dt
        state = _with_time(state, t)
        left, right = sensors.measure(state, k)
        ctrl.decide(left, right, flaps_up=state.flaps_up, pilot_elevator=pilot.last.elevator,
                    inertial=(state.u, state.w), t=t)
        fired = ctrl.state.last_fire_t == t and ctrl.state.last_fire_t != last_fire_seen
        if fired:
            last_fire_seen = t
            if seq_hs_ref is None:
                seq_hs_ref = state.hs_trim
            elif state.hs_trim < seq_hs_ref - 0.05:
                misses += 1
            else:
                misses = 0
            max_misses = max(max_misses, misses)
        if record_decisions:
            decisions.append(ctrl.last_record)
        mcas_rate = ctrl.actuate(dt, pilot.last.elevator)
        if event_t is not None and alt_ref is None and t >= event_t:
            alt_ref = state.altitude * M_TO_FT
        ias = right.ias
        cues = Cues(t=t, pitch=state.pitch, pitch_rate=state.pitch_rate, ias=right.ias,
                    altitude=right.altitude, vertical_speed=state.vertical_speed * M_TO_FT * 60.0,
                    aoa=right.aoa, heading=state.heading, hs_trim=state.hs_trim,
                    uncommanded_trim=mcas_rate != 0.0, on_ground=state.on_ground)
        pc = pilot.step(cues, dt)
        crank = pc.trim_crank_rate
        crank_active = crank > 0.0 and (pilot.cranking or pilot.stall_mode == "climb")
        state, clamped = apply_trim_rate(state, mcas_rate + crank, dt, params)
        clamps += clamped
        if not airborne and not state.on_ground and state.altitude * M_TO_FT > 10.0:
            airborne = True
        event_over = event_end is not None and t >= event_end
        flags = (FLAG_AIRBORNE * airborne | FLAG_MCAS_ACTIVE * (mcas_rate != 0.0)
                 | FLAG_CRANKING * crank_active | FLAG_TRIM_CLAMPED * clamped
                 | FLAG_EVENT_OVER * event_over)
        row = (t, state.altitude * M_TO_FT, ias, state.aoa, left.aoa, right.aoa,
               ctrl.last_sads, state.pitch, state.hs_trim, pc.elevator, mcas_rate,
               crank, flags)
        hasher.update(_pack_row(row))
        if record_trace:
            trace.append(row)
        try:
            state = step(state, ControlInputs(pc.elevator, pc.throttle, pc.bank, pc.flaps_up),
                         params, dt)
        except ValueError as exc:
            verdict = "aborted"
            pilot.log(t, "aborted", reason=str(exc))
            break
        if not state.is_finite():
            verdict = "aborted"
            break
        alt_ft = state.altitude * M_TO_FT
        if airborne and (event_t is None or state.t >= event_t):
            min_alt = min(min_alt, alt_ft)
        if airborne and state.altitude <= 0.0:
            sink = -state.vertical_speed * M_TO_FT * 60.0
            if landing and sink <= rec["touchdown_sink_fpm"] and state.aoa < cfg.mcas.aoa_threshold:
                verdict = "recovered"
                touchdown_sink = sink
            else:
                verdict = "crashed"
            break
        if event_t is not None and event_over and alt_ref is not None:
            vs_fpm = state.vertical_speed * M_TO_FT * 60.0
            ok = (abs(alt_ft - alt_ref) <= rec["altitude_band_ft"]
                  and abs(state.aoa) < cfg.mcas.aoa_threshold
                  and abs(vs_fpm) < rec["max_vs_fpm"]
                  and (stall is None or pilot.stall_mode == "climb"))
            if ok:
                hold_start = state.t if hold_start is None else hold_start
                if state.t - hold_start >= rec["hold_s"] and early_stop:
                    verdict = "recovered"
                    break
            else:
                hold_start = None
    else:
        k = n_steps
    t_end = state.t
    if verdict is None:
        if event_t is None and not landing:
            verdict = "recovered" if _maneuver_done(pilot, state) else "timeout"
        elif event_t is not None and hold_start is not None and \
                t_end - hold_start >= rec["hold_s"]:
            verdict = "recovered"
        else:
            verdict = "timeout"
    diag = {"activations_by_time": ctrl.state.last_fire_t, "alt_ref_ft": alt_ref,
            "final_altitude_ft": state.altitude * M_TO_FT, "final_hs": state.hs_trim,
            "phase": pilot.phase.name, "stall_mode": pilot.stall_mode}
    if touchdown_sink is not None:
        diag["touchdown_sink_fpm"] = touchdown_sink
    return SimOutcome(verdict, min_alt, ctrl.state.activations, max_misses, t_end,
                      hasher.hexdigest(), cfg.hash(), trace, decisions, pilot.events,
                      clamps, diag)


def _with_time(state: AircraftState, t: float) -> AircraftState:
    # re-anchor the clock on the step index so long runs do not drift
    if state.t == t:
        return state
    from dataclasses import replace
    return replace(state, t=t)


def _maneuver_done(pilot: Pilot, state: AircraftState) -> bool:
    return pilot.phase.until is None and not state.on_ground


def write_trace(outcome: SimOutcome, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for row in outcome.trace:
            w.writerow(["" if v is None else (f"{v:.6g}" if isinstance(v, float) else v)
                        for v in row])


# ----------------------------------------------------------------------------
# sweeps


def _run_point(args):
    base, path, value = args
    cfg = copy.deepcopy(base)
    set_path(cfg, path, value)
    out = run_scenario(resolve(cfg), record_trace=False)
    return value, out.recovered, out.summary()


def _map(fn, items, jobs: int):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


@dataclass
class BoundaryResult:
    path: str
    boundary: float | None
    bracket: tuple
    prescan: list
    runs: int

    def to_dict(self) -> dict:
        return {"path": self.path, "boundary": self.boundary, "bracket": list(self.bracket),
                "prescan": [[v, ok] for v, ok in self.prescan], "runs": self.runs}


def find_boundary(base: dict, path: str, lo: float, hi: float, *, tol: float = 0.1,
                  points: int = 9, jobs: int = 1) -> BoundaryResult:
    """Smallest value of ``path`` in [lo, hi] whose run is not recovered.

    A uniform prescan checks that outcomes switch from recovered to not
    recovered at most once; bisection then narrows the bracket to ``tol``.
    Returns boundary None when every prescan point recovers.
    """
    if not hi > lo:
        raise ValueError("need hi > lo")
    grid = [lo + (hi - lo) * i / (points - 1) for i in range(points)]
    res = _map(_run_point, [(base, path, v) for v in grid], jobs)
    table = [(v, ok) for v, ok, _ in res]
    runs = len(table)
    flips = sum(1 for (_, a), (_, b) in zip(table, table[1:]) if a != b)
    if flips > 1 or (flips == 1 and not table[0][1]):
        raise NonMonotoneError(path, table)
    if all(ok for _, ok in table):
        return BoundaryResult(path, None, (hi, None), table, runs)
    if not table[0][1]:
        return BoundaryResult(path, lo, (None, lo), table, runs)
    i = next(i for i, (_, ok) in enumerate(table) if not ok)
    good, bad = table[i - 1][0], table[i][0]
    while bad - good > tol:
        mid = 0.5 * (good + bad)
        _, ok, _ = _run_point((base, path, mid))
        runs += 1
        if ok:
            good = mid
        else:
            bad = mid
    return BoundaryResult(path, bad, (good, bad), table, runs)


def sweep(base: dict, path: str, values, jobs: int = 1) -> list:
    return [{"value": v, "recovered": ok, **s}
            for v, ok, s in _map(_run_point, [(base, path, v) for v in values], jobs)]


# ----------------------------------------------------------------------------
# stress suites


def stress_base(variant: str = "mcas_old", kind: str = "sudden", delta: float | None = 18.0,
                a: float | None = None, b: float | None = None, t0: float = 100.0,
                t_end: float = 150.0, target: str = "left", **pilot) -> dict:
    """Takeoff-then-climb scenario with one AoA fault on one side."""
    fault = {"kind": kind, "t0": t0, "t_end": t_end, "target": target, "channel": "aoa"}
    if kind in ("sudden", "delta"):
        fault["delta"] = delta
    else:
        fault["a"] = a
        if kind == "gradual-quadratic":
            fault["b"] = 0.0 if b is None else b
    return {"name": f"{variant}-{kind}", "variant": variant, "duration": 320.0,
            "maneuver": {"name": "takeoff"}, "faults": [fault], "pilot": dict(pilot)}


STALL_ALTITUDE = 2000.0  # low enough that the altitude lost while stalled decides the outcome


def stall_base(variant: str = "mcas_old", target_pitch: float = 50.0, **pilot) -> dict:
    return {"name": f"{variant}-stall", "variant": variant, "duration": 240.0,
            "maneuver": {"name": "level", "params": {"altitude": STALL_ALTITUDE, "ias": 220.0}},
            "stall": {"target_pitch": target_pitch, "start_t": 10.0}, "pilot": dict(pilot)}


# (name, base builder kwargs, swept path, lo, hi, tol)
STRESS_SUITES = {
    "sudden_value": ({"kind": "sudden", "tau_sensing": 5.0}, "faults.0.delta", 0.0, 90.0, 0.9),
    "sudden_duration": ({"kind": "sudden", "delta": 18.0, "t_end": 110.0, "tau_sensing": 5.0},
                        "faults.0.t_end", 110.0, 180.0, 0.7),
    "sudden_recovery_time": ({"kind": "sudden", "delta": 18.0}, "pilot.tau_sensing",
                             0.0, 10.0, 0.1),
    "delta_value": ({"kind": "delta", "tau_sensing": 5.0}, "faults.0.delta", 0.0, 90.0, 0.9),
    "delta_duration": ({"kind": "delta", "delta": 18.0, "t_end": 110.0, "tau_sensing": 5.0},
                       "faults.0.t_end", 110.0, 180.0, 0.7),
    "delta_recovery_time": ({"kind": "delta", "delta": 18.0}, "pilot.tau_sensing",
                            0.0, 10.0, 0.1),
    "gradual_linear": ({"kind": "gradual-linear", "a": 0.0, "tau_sensing": 5.0}, "faults.0.a",
                       0.0, 3.0, 0.03),
    "gradual_quadratic": ({"kind": "gradual-quadratic", "a": 0.0, "tau_sensing": 5.0},
                          "faults.0.a", 0.0, 3.0, 0.03),
    "gradual_log": ({"kind": "gradual-log", "a": 0.0, "tau_sensing": 5.0}, "faults.0.a",
                    0.0, 500.0, 5.0),
}

STALL_SUITES = {
    "stall_pitch": ({"target_pitch": 20.0, "tau_sensing": 5.0}, "stall.target_pitch",
                    20.0, 90.0, 0.5),
    "stall_recovery_time": ({"target_pitch": 50.0}, "pilot.tau_sensing", 0.0, 10.0, 0.1),
}


def suite_base(suite: str, variant: str) -> tuple[dict, str, float, float, float]:
    if suite in STRESS_SUITES:
        kw, path, lo, hi, tol = STRESS_SUITES[suite]
        kw = dict(kw)
        pilot = {k: kw.pop(k) for k in ("tau_sensing", "crank_rps") if k in kw}
        return stress_base(variant, **kw, **pilot), path, lo, hi, tol
    kw, path, lo, hi, tol = STALL_SUITES[suite]
    kw = dict(kw)
    pilot = {k: kw.pop(k) for k in ("tau_sensing", "crank_rps") if k in kw}
    return stall_base(variant, **kw, **pilot), path, lo, hi, tol


def run_suite(suite: str, variant: str, jobs: int = 1, tol: float | None = None) -> BoundaryResult:
    base, path, lo, hi, t = suite_base(suite, variant)
    return find_boundary(base, path, lo, hi, tol=tol or t, jobs=jobs)


def compare_variants(base: dict, variants=("mcas_old", "mcas_new", "sa_mcas")) -> dict:
    out = {}
    for v in variants:
        cfg = copy.deepcopy(base)
        cfg["variant"] = v
        out[v] = run_scenario(resolve(cfg), record_trace=False).summary()
    return out


def _stall_cell(args):
    variant, target_pitch, tau, rps = args
    out = run_scenario(resolve(stall_base(variant, target_pitch, tau_sensing=tau, crank_rps=rps)),
                       record_trace=False)
    return {"tau_sensing": tau, "crank_rps": rps, "verdict": out.verdict,
            "min_altitude_ft": out.min_altitude_ft,
            "mcas_activation_count": out.mcas_activation_count, "trace_hash": out.trace_hash}


def stall_grid(variant: str, reactions, rps_values, *, target_pitch: float = 50.0,
               jobs: int = 1) -> list[dict]:
    """Simulated stall recoveries over reaction time x crank rate, row-major in reaction."""
    cells = [(variant, target_pitch, float(t), float(n))
             for t in reactions for n in rps_values]
    return _map(_stall_cell, cells, jobs)


# ----------------------------------------------------------------------------
# safe-state grid


def safe_state_grid(h_ft, v_kts, x_stab, rps, *, tau_sensing: float = 5.0, rpd: float = 18.0,
                    cooldown: float = 11.0, params=None) -> list[dict]:
    """Closed-form recoverability over a grid of (altitude, airspeed, stabilizer
    offset, crank rate)."""
    from .timing import RecoveryTimingParams, analyze
    from .dynamics import AirframeParams
    ap = params or AirframeParams()
    rows = []
    for h, v, x, n in itertools.product(h_ft, v_kts, x_stab, rps):
        hm = h / M_TO_FT
        tp = RecoveryTimingParams(tau_sensing=tau_sensing, crank_rps=n, rpd=rpd,
                                  x_stab_offset=x, tau_mcas_cd=cooldown, mass=ap.mass,
                                  thrust=0.0, climb_angle=0.0, rho=isa_density(hm),
                                  area=ap.wing_area, cd=ap.cd(0.0), cl=ap.cl(0.0), g=ap.g,
                                  v0=0.0)
        verdict = analyze(tp, hm, 0.0, 0.0, 0.0 if x > 0 else None)
        rows.append({"h_ft": h, "v_kts": v, "x_stab": x, "rps": n, **verdict.to_dict()})
    return rows


# ----------------------------------------------------------------------------
# maneuver validation corpus


def validation_corpus(n_takeoff: int = 225, n_landing: int = 100, seed: int = 0) -> list[dict]:
    """Deterministic grid of no-fault takeoff and landing configurations."""
    cfgs = []
    lift = [160.0, 165.0, 170.0, 175.0, 180.0]
    cruise = [210.0, 220.0, 230.0]
    level = [4000.0, 5000.0, 6000.0]
    trans = [2000.0, 2500.0, 3000.0, 3500.0, 4000.0]
    for i, (lv, cr, lo, tr) in enumerate(itertools.product(lift, cruise, level, trans)):
        if i >= n_takeoff:
            break
        cfgs.append({"name": f"takeoff-{i:03d}", "seed": seed + i, "duration": 200.0,
                     "maneuver": {"name": "takeoff", "params": {
                         "liftoff_ias": lv, "cruise_ias": cr, "level_off_alt": lo,
                         "transition_alt": min(tr, lo - 500.0)}}})
    ias = [130.0, 135.0, 140.0, 145.0, 150.0]
    rate = [600.0, 700.0, 800.0, 900.0, 1000.0]
    alt = [1500.0, 2000.0, 2500.0, 3000.0]
    for i, (a, r, h) in enumerate(itertools.product(ias, rate, alt)):
        if i >= n_landing:
            break
        cfgs.append({"name": f"landing-{i:03d}", "seed": seed + 1000 + i,
                     "duration": h / r * 60.0 + 120.0,
                     "maneuver": {"name": "landing", "params": {
                         "initial_alt": h, "descent_rate": r, "approach_ias": a}}})
    return cfgs


def _validate_one(raw):
    out = run_scenario(resolve(raw), record_trace=False)
    return {"name": raw["name"], **out.summary()}


def validate_maneuvers(jobs: int = 1, **kw) -> list[dict]:
    return _map(_validate_one, validation_corpus(**kw), jobs)
