"""Scenario configuration: JSON schema, defaults, dotted overrides."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .controllers import VARIANTS, McasConfig
from .dynamics import AirframeParams
from .pilot import PilotGains, PilotResponseModel
from .sensing import CHANNELS, DEFAULT_SIGMA, FAULT_KINDS, FaultConfigError, FaultSpec, NoiseSpec, check_overlaps

MANEUVERS = ("takeoff", "landing", "level", "level_turn", "climb", "descend", "climb_turn",
             "descend_turn", "holding", "accelerate")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)

    def __reduce__(self):
        return type(self), (self.path, self.message)


_num = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_pos = {"type": "number", "exclusiveMinimum": 0}

FAULT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "t0", "t_end"],
    "properties": {
        "kind": {"enum": list(FAULT_KINDS)},
        "t0": _nonneg, "t_end": _nonneg,
        "target": {"enum": ["left", "right", "both"]},
        "channel": {"enum": list(CHANNELS)},
        "delta": _num, "a": _num, "b": _num,
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "duration": _pos,
        "dt": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1},
        "variant": {"enum": list(VARIANTS)},
        "maneuver": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": list(MANEUVERS)},
                "params": {"type": "object"},
            },
        },
        "faults": {"type": "array", "items": FAULT_SCHEMA},
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sigma": {"type": "object", "additionalProperties": False,
                          "properties": {ch: _nonneg for ch in CHANNELS}},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "mcas": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                **{k: _pos for k in ("aoa_threshold", "deflection_low_speed",
                                     "deflection_high_speed", "cooldown", "disagreement_limit",
                                     "trim_rate", "high_speed_mach", "gforce_threshold",
                                     "override_column")},
                "rearm_hysteresis": _nonneg,
                "epsilon": {"type": "object", "additionalProperties": False,
                            "properties": {ch: _pos for ch in CHANNELS}},
            },
        },
        "pilot": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tau_sensing": _nonneg, "crank_rps": _nonneg,
                "stall_recovery_elevator": {"type": "number", "minimum": 0, "maximum": 1},
                "misfire_elevator": {"type": "number", "minimum": -1, "maximum": 1},
                "rpd": _pos,
            },
        },
        "gains": {"type": "object", "additionalProperties": False,
                  "properties": {k: _num for k in PilotGains.__dataclass_fields__}},
        "stall": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "required": ["target_pitch"],
            "properties": {
                "target_pitch": {"type": "number", "minimum": 20, "maximum": 90},
                "start_t": _nonneg,
                "recovery_pitch": _num, "recovery_ias": _pos, "max_recovery_aoa": _pos,
            },
        },
        "recovery": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"altitude_band_ft": _pos, "max_vs_fpm": _pos, "hold_s": _nonneg,
                           "touchdown_sink_fpm": _pos},
        },
        "airframe": {"type": "object"},
    },
}

MANEUVER_DEFAULTS = {
    "takeoff": {"liftoff_ias": 170.0, "transition_alt": 1500.0, "cruise_ias": 200.0,
                "level_off_alt": 5000.0},
    "landing": {"initial_alt": 3000.0, "descent_rate": 800.0, "approach_ias": 140.0},
    "level": {"altitude": 8000.0, "ias": 220.0},
    "level_turn": {"altitude": 6000.0, "ias": 220.0, "bank": 25.0, "turn": 360.0},
    "climb": {"altitude": 5000.0, "target_alt": 9000.0, "ias": 230.0, "rate": 1500.0},
    "descend": {"altitude": 9000.0, "target_alt": 5000.0, "ias": 230.0, "rate": 1200.0},
    "climb_turn": {"altitude": 5000.0, "target_alt": 9000.0, "ias": 230.0, "rate": 1200.0,
                   "bank": 20.0},
    "descend_turn": {"altitude": 9000.0, "target_alt": 5000.0, "ias": 230.0, "rate": 1000.0,
                     "bank": 20.0},
    "holding": {"altitude": 8000.0, "ias": 210.0, "bank": 25.0, "leg_s": 60.0},
    "accelerate": {"altitude": 6000.0, "ias": 200.0, "target_ias": 280.0},
}

DEFAULTS = {
    "name": "scenario",
    "seed": 0,
    "duration": 320.0,
    "dt": 1.0 / 30.0,
    "variant": "mcas_old",
    "maneuver": {"name": "takeoff", "params": {}},
    "faults": [],
    "noise": {"sigma": dict(DEFAULT_SIGMA)},
    "mcas": {},
    "pilot": {},
    "gains": {},
    "stall": None,
    "recovery": {"altitude_band_ft": 500.0, "max_vs_fpm": 500.0, "hold_s": 10.0,
                 "touchdown_sink_fpm": 1000.0},
    "airframe": {},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_path(cfg: dict, path: str, value) -> dict:
    """Set a dotted path (list indices as integers) in place and return cfg."""
    keys = path.split(".")
    node = cfg
    try:
        for i, key in enumerate(keys[:-1]):
            nxt = keys[i + 1]
            if isinstance(node, list):
                node = node[int(key)]
                continue
            if node.get(key) is None:
                node[key] = [] if nxt.isdigit() else {}
            node = node[key]
        last = keys[-1]
        if isinstance(node, list):
            node[int(last)] = value
        else:
            node[last] = value
    except (IndexError, ValueError, AttributeError, TypeError):
        raise ConfigError(path, "override path does not exist") from None
    return cfg


def get_path(cfg: dict, path: str):
    node = cfg
    for key in path.split("."):
        node = node[int(key)] if isinstance(node, list) else node[key]
    return node


def apply_overrides(cfg: dict, overrides) -> dict:
    cfg = copy.deepcopy(cfg)
    for item in overrides or ():
        if isinstance(item, str):
            if "=" not in item:
                raise ConfigError(item, "override must look like dotted.path=value")
            path, text = item.split("=", 1)
            value = _parse_value(text)
        else:
            path, value = item
        set_path(cfg, path.strip(), value)
    return cfg


def _json_path(err) -> str:
    parts = []
    for p in err.absolute_path:
        parts.append(f"[{p}]" if isinstance(p, int) else (("." if parts else "") + str(p)))
    path = "".join(parts)
    if err.validator == "additionalProperties":
        extra = err.message.split("'")[1] if "'" in err.message else ""
        path = f"{path}.{extra}" if path else extra
    elif err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else ""
        path = f"{path}.{missing}" if path else missing
    return path


def resolve(raw: dict, overrides=()) -> dict:
    """Validate, apply defaults and overrides; returns the effective config dict."""
    cfg = apply_overrides(raw, overrides)
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(_json_path(err), err.message) from None
    cfg = _merge(DEFAULTS, cfg)
    if "stall" in raw or any(str(o).startswith("stall.") for o in overrides or ()):
        cfg["stall"] = apply_overrides(raw, overrides).get("stall")
    name = cfg["maneuver"]["name"]
    cfg["maneuver"]["params"] = _merge(MANEUVER_DEFAULTS[name], cfg["maneuver"].get("params", {}))
    unknown = set(cfg["maneuver"]["params"]) - set(MANEUVER_DEFAULTS[name])
    if unknown:
        raise ConfigError(f"maneuver.params.{sorted(unknown)[0]}", "unknown maneuver parameter")
    for i, f in enumerate(cfg["faults"]):
        if f["t_end"] > cfg["duration"]:
            raise ConfigError(f"faults[{i}].t_end", "fault window exceeds duration")
        if not f["t0"] < f["t_end"]:
            raise ConfigError(f"faults[{i}].t_end", "fault window needs t0 < t_end")
        if f["kind"] == "gradual-quadratic":
            f.setdefault("b", 0.0)
        try:
            FaultSpec.from_dict(f)
        except (FaultConfigError, TypeError) as exc:
            raise ConfigError(f"faults[{i}]", str(exc)) from None
    try:
        check_overlaps([FaultSpec.from_dict(f) for f in cfg["faults"]])
    except FaultConfigError as exc:
        raise ConfigError("faults", str(exc)) from None
    try:
        AirframeParams(**cfg["airframe"])
    except (TypeError, ValueError) as exc:
        raise ConfigError("airframe", str(exc)) from None
    try:
        McasConfig(**cfg["mcas"])
    except (TypeError, ValueError) as exc:
        raise ConfigError("mcas", str(exc)) from None
    if cfg["noise"].get("seed") is None:
        cfg["noise"]["seed"] = cfg["seed"]
    return cfg


def load_config(path, overrides=()) -> dict:
    p = Path(path)
    try:
        raw = json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigError("", f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("", "config root must be an object")
    return raw if _is_sweep(raw) else resolve(raw, overrides)


def _is_sweep(raw: dict) -> bool:
    return "sweep" in raw or "grid" in raw


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.blake2b(blob, digest_size=8).hexdigest()


@dataclass
class ScenarioConfig:
    """Typed view of a resolved configuration dict."""
    raw: dict
    airframe: AirframeParams = field(init=False)
    mcas: McasConfig = field(init=False)
    pilot: PilotResponseModel = field(init=False)
    gains: PilotGains = field(init=False)
    noise: NoiseSpec = field(init=False)
    faults: list = field(init=False)

    def __post_init__(self):
        r = self.raw
        self.airframe = AirframeParams(**r["airframe"])
        self.mcas = McasConfig(**r["mcas"])
        self.pilot = PilotResponseModel(**{"rpd": self.airframe.rpd, **r["pilot"]})
        self.gains = PilotGains(**r["gains"])
        self.noise = NoiseSpec(sigma=dict(r["noise"]["sigma"]), seed=int(r["noise"]["seed"]))
        self.faults = [FaultSpec.from_dict(f) for f in r["faults"]]

    @classmethod
    def from_dict(cls, raw: dict, overrides=()) -> "ScenarioConfig":
        return cls(resolve(raw, overrides))

    @property
    def variant(self) -> str:
        return self.raw["variant"]

    @property
    def dt(self) -> float:
        return float(self.raw["dt"])

    @property
    def duration(self) -> float:
        return float(self.raw["duration"])

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    def hash(self) -> str:
        return config_hash(self.raw)
