"""Left/right air-data frames with Gaussian noise and scheduled faults."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import AircraftState, isa_density, speed_of_sound, RHO0

MPS_TO_KT = 1.0 / 0.514444
M_TO_FT = 1.0 / 0.3048

SIDES = ("left", "right")
CHANNELS = ("aoa", "ias", "mach", "altitude", "gforce")
FAULT_KINDS = ("sudden", "delta", "gradual-linear", "gradual-quadratic", "gradual-log")
DEFAULT_SIGMA = {"aoa": 0.25, "ias": 1.0, "mach": 0.002, "altitude": 10.0, "gforce": 0.01}


class FaultConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AirDataFrame:
    side: str
    aoa: float
    ias: float
    mach: float
    altitude: float
    gforce: float
    t: float

    def get(self, channel: str) -> float:
        return getattr(self, channel)


@dataclass(frozen=True)
class FaultSpec:
    kind: str
    t0: float
    t_end: float
    target: str = "left"
    channel: str = "aoa"
    delta: float | None = None
    a: float | None = None
    b: float | None = None

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise FaultConfigError(f"unknown fault kind {self.kind!r}")
        if self.target not in ("left", "right", "both"):
            raise FaultConfigError(f"unknown fault target {self.target!r}")
        if self.channel not in CHANNELS:
            raise FaultConfigError(f"unknown channel {self.channel!r}")
        if not self.t0 < self.t_end:
            raise FaultConfigError("fault window needs t0 < t_end")
        needs = {
            "sudden": {"delta"}, "delta": {"delta"}, "gradual-linear": {"a"},
            "gradual-quadratic": {"a", "b"}, "gradual-log": {"a"},
        }[self.kind]
        present = {k for k in ("delta", "a", "b") if getattr(self, k) is not None}
        if present != needs:
            raise FaultConfigError(
                f"{self.kind} fault requires exactly {sorted(needs)}, got {sorted(present)}")

    def sides(self) -> tuple[str, ...]:
        return SIDES if self.target == "both" else (self.target,)

    def active(self, t: float) -> bool:
        return self.t0 <= t <= self.t_end

    @classmethod
    def from_dict(cls, d: dict) -> "FaultSpec":
        d = dict(d)
        if d.get("kind") == "gradual-quadratic":
            d.setdefault("b", 0.0)
        return cls(**d)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "t0": self.t0, "t_end": self.t_end,
             "target": self.target, "channel": self.channel}
        for k in ("delta", "a", "b"):
            if getattr(self, k) is not None:
                d[k] = getattr(self, k)
        return d


@dataclass(frozen=True)
class NoiseSpec:
    sigma: dict = field(default_factory=lambda: dict(DEFAULT_SIGMA))
    seed: int = 0

    def __post_init__(self):
        for ch, s in self.sigma.items():
            if ch not in CHANNELS:
                raise FaultConfigError(f"unknown noise channel {ch!r}")
            if not s >= 0:
                raise FaultConfigError(f"sigma for {ch} must be >= 0")


def check_overlaps(faults) -> None:
    """At most one active fault per (side, channel)."""
    by_key: dict = {}
    for i, f in enumerate(faults):
        for side in f.sides():
            by_key.setdefault((side, f.channel), []).append((f.t0, f.t_end, i))
    for (side, ch), spans in by_key.items():
        spans.sort()
        for (a0, a1, i), (b0, b1, j) in zip(spans, spans[1:]):
            if b0 <= a1:
                raise FaultConfigError(
                    f"faults[{i}] and faults[{j}] overlap on {side} {ch}")


def apply_fault(truth: float, spec: FaultSpec, t: float, latched: float | None = None) -> float:
    """Faulted reading of one channel at time ``t`` inside the fault window.

    ``latched`` is the reading captured at onset (gradual kinds); it
    defaults to ``truth`` for a call made at onset.
    """
    kind = spec.kind
    if kind == "sudden":
        return float(spec.delta)
    if kind == "delta":
        return truth + spec.delta
    base = truth if latched is None else latched
    dt = t - spec.t0
    if kind == "gradual-linear":
        return base + spec.a * dt
    if kind == "gradual-quadratic":
        return base + spec.a * dt * dt + (spec.b or 0.0) * dt
    # log argument shifted by one second so the drift starts at zero
    return base + spec.a * math.log(max(dt, 0.0) + 1.0)


class NoiseSource:
    """Keyed Gaussian samples: value(seed, side, channel, k) is fixed.

    Each (side, channel) pair owns a Philox stream keyed by the seed and the
    pair index, drawn in fixed blocks, so sample ``k`` never depends on which
    other samples were requested before it.
    """

    BLOCK = 4096

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._blocks: dict = {}

    def _block(self, side: int, ch: int, b: int) -> np.ndarray:
        key = (side, ch, b)
        blk = self._blocks.get(key)
        if blk is None:
            bitgen = np.random.Philox(key=[self.seed, (side << 40) | (ch << 32) | b])
            blk = np.random.Generator(bitgen).standard_normal(self.BLOCK).tolist()
            self._blocks[key] = blk
        return blk

    def sample(self, side: int, ch: int, k: int) -> float:
        b, i = divmod(k, self.BLOCK)
        return self._block(side, ch, b)[i]


def truth_channels(state: AircraftState) -> dict:
    rho = isa_density(state.altitude)
    v = state.airspeed
    return {
        "aoa": state.aoa,
        "ias": v * math.sqrt(rho / RHO0) * MPS_TO_KT,
        "mach": v / speed_of_sound(state.altitude),
        "altitude": state.altitude * M_TO_FT,
        "gforce": state.load_factor,
    }


class Sensors:
    """Dual ADIRU model. Owns the noise source and the gradual-fault latches."""

    def __init__(self, noise: NoiseSpec | None = None, faults=()):
        self.noise = noise or NoiseSpec()
        self.faults = list(faults)
        check_overlaps(self.faults)
        self.source = NoiseSource(self.noise.seed)
        self._latch: dict = {}
        self._sigma = [[self.noise.sigma.get(ch, 0.0) for ch in CHANNELS] for _ in SIDES]

    def measure(self, state: AircraftState, k: int) -> tuple[AirDataFrame, AirDataFrame]:
        truth = truth_channels(state)
        t = state.t
        out = []
        for si, side in enumerate(SIDES):
            vals = {}
            for ci, ch in enumerate(CHANNELS):
                s = self._sigma[si][ci]
                x = truth[ch]
                if s > 0.0:
                    x += s * self.source.sample(si, ci, k)
                vals[ch] = x
            out.append(vals)
        for fi, f in enumerate(self.faults):
            if not f.active(t):
                continue
            for side in f.sides():
                vals = out[SIDES.index(side)]
                key = (fi, side)
                if key not in self._latch:
                    self._latch[key] = vals[f.channel]
                vals[f.channel] = apply_fault(vals[f.channel], f, t, self._latch[key])
        return tuple(AirDataFrame(side=side, t=t, **vals) for side, vals in zip(SIDES, out))


def measure(state: AircraftState, noise: NoiseSpec, faults, t: float | None = None,
            k: int = 0, sensors: Sensors | None = None):
    """One-shot measurement. Pass ``sensors`` to keep gradual-fault latches
    across calls."""
    if t is not None and t != state.t:
        from dataclasses import replace
        state = replace(state, t=t)
    sensors = sensors or Sensors(noise, faults)
    return sensors.measure(state, k)
