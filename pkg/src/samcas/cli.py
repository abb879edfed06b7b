"""Batch command-line front end.

Every subcommand writes into ``--out`` only, echoes the effective config
there and stamps each JSON artifact with the config hash and tool version.
Exit codes: 0 success (whatever the flight verdict), 1 scenario aborted,
2 configuration error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, apply_overrides, config_hash, load_config, resolve
from .harness import (NonMonotoneError, compare_variants, find_boundary, run_scenario,
                      stall_grid, suite_base, validate_maneuvers, write_trace, STALL_SUITES,
                      STRESS_SUITES)
from .timing import RecoveryTimingParams, analyze

log = logging.getLogger("samcas")

EXIT_OK, EXIT_ABORT, EXIT_CONFIG = 0, 1, 2


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n")


def _stamp(obj: dict, cfg: dict) -> dict:
    return {**obj, "config_hash": config_hash(cfg), "version": __version__}


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)


def _scenario_overrides(args) -> list:
    extra = list(args.set or ())
    if args.seed is not None:
        extra.append(("seed", args.seed))
    return extra


def _read_raw(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError("", f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("", "config root must be an object")
    return raw


def _require(raw: dict, key: str) -> dict:
    node = raw.get(key)
    if not isinstance(node, dict):
        raise ConfigError(key, f"'{key}' section is required for this subcommand")
    return node


def _axis(spec, name: str) -> list[float]:
    """An explicit list, or {lo, hi, n} for evenly spaced values."""
    if isinstance(spec, list) and spec:
        return [float(v) for v in spec]
    if isinstance(spec, dict) and {"lo", "hi", "n"} <= set(spec):
        return [float(v) for v in np.linspace(spec["lo"], spec["hi"], int(spec["n"]))]
    raise ConfigError(name, "expected a non-empty list or {lo, hi, n}")


# ----------------------------------------------------------------------------
# subcommands


def cmd_run(args, out: Path) -> int:
    cfg = load_config(args.config, _scenario_overrides(args))
    _dump(out / "effective_config.json", cfg)
    outcome = run_scenario(cfg)
    write_trace(outcome, out / "trace.csv")
    summary = _stamp({"name": cfg["name"], "variant": cfg["variant"], **outcome.summary(),
                      "events": outcome.events}, cfg)
    _dump(out / "summary.json", summary)
    log.info("%s: %s (activations %d)", cfg["name"], outcome.verdict,
             outcome.mcas_activation_count)
    return EXIT_ABORT if outcome.verdict == "aborted" else EXIT_OK


def _sweep_setup(raw: dict, overrides) -> tuple[dict, str, float, float, float, int]:
    spec = _require(raw, "sweep")
    if "suite" in spec:
        suite = spec["suite"]
        if suite not in STRESS_SUITES and suite not in STALL_SUITES:
            raise ConfigError("sweep.suite", f"unknown suite {suite!r}")
        base, path, lo, hi, tol = suite_base(suite, spec.get("variant", "mcas_old"))
    else:
        for key in ("path", "lo", "hi"):
            if key not in spec:
                raise ConfigError(f"sweep.{key}", "required when no suite is named")
        base = raw.get("base", {})
        path, lo, hi = spec["path"], float(spec["lo"]), float(spec["hi"])
        tol = (hi - lo) * 1e-4
    lo, hi = float(spec.get("lo", lo)), float(spec.get("hi", hi))
    tol = float(spec.get("tol", tol))
    base = apply_overrides(base, overrides)
    resolve(base)  # surface config errors before any run
    return base, path, lo, hi, tol, int(spec.get("points", 9))


def cmd_sweep(args, out: Path) -> int:
    raw = _read_raw(args.config)
    base, path, lo, hi, tol, points = _sweep_setup(raw, _scenario_overrides(args))
    eff = {"base": base, "sweep": {"path": path, "lo": lo, "hi": hi, "tol": tol,
                                   "points": points}}
    _dump(out / "effective_config.json", eff)
    try:
        res = find_boundary(base, path, lo, hi, tol=tol, points=points, jobs=args.jobs)
    except NonMonotoneError as exc:
        _dump(out / "boundary.json", _stamp({"path": path, "error": str(exc),
                                             "prescan": exc.table}, eff))
        log.error("%s", exc)
        return EXIT_ABORT
    _dump(out / "boundary.json", _stamp(res.to_dict(), eff))
    _write_csv(out / "prescan.csv", [{"value": v, "recovered": ok} for v, ok in res.prescan])
    log.info("boundary of %s: %s", path, res.boundary)
    return EXIT_OK


def cmd_grid(args, out: Path) -> int:
    raw = _read_raw(args.config)
    spec = _require(raw, "grid")
    variant = spec.get("variant", "mcas_old")
    reactions = _axis(spec.get("reactions"), "grid.reactions")
    rps = _axis(spec.get("rps"), "grid.rps")
    pitch = float(spec.get("target_pitch", 50.0))
    eff = {"grid": {"variant": variant, "reactions": reactions, "rps": rps,
                    "target_pitch": pitch}}
    _dump(out / "effective_config.json", eff)
    rows = stall_grid(variant, reactions, rps, target_pitch=pitch, jobs=args.jobs)
    _write_csv(out / "grid.csv", rows)
    matrix = [[r["verdict"][0].upper() for r in rows[i * len(rps):(i + 1) * len(rps)]]
              for i in range(len(reactions))]
    _dump(out / "grid.json", _stamp({"reactions": reactions, "rps": rps, "verdicts": matrix},
                                    eff))
    return EXIT_OK


def cmd_compare(args, out: Path) -> int:
    cfg = load_config(args.config, _scenario_overrides(args))
    _dump(out / "effective_config.json", cfg)
    triple = compare_variants(cfg)
    ref = triple["mcas_old"]
    diff = {v: {"verdict_changed": s["verdict"] != ref["verdict"],
                "activation_delta": s["mcas_activation_count"] - ref["mcas_activation_count"],
                "min_altitude_delta_ft": s["min_altitude_ft"] - ref["min_altitude_ft"]}
            for v, s in triple.items() if v != "mcas_old"}
    _dump(out / "compare.json", _stamp({"variants": triple, "diff_vs_mcas_old": diff}, cfg))
    for v, s in triple.items():
        log.info("%s: %s", v, s["verdict"])
    aborted = any(s["verdict"] == "aborted" for s in triple.values())
    return EXIT_ABORT if aborted else EXIT_OK


def cmd_deadline(args, out: Path) -> int:
    raw = apply_overrides(_read_raw(args.config), args.set or ())
    spec = copy.deepcopy(_require(raw, "deadline"))
    where = {k: spec.pop(k, d) for k, d in
             (("h", None), ("t_current", 0.0), ("t_start", 0.0), ("last_mcas_fire_t", None))}
    if where["h"] is None:
        raise ConfigError("deadline.h", "altitude in metres is required")
    fields = RecoveryTimingParams.__dataclass_fields__
    for k in spec:
        if k not in fields:
            raise ConfigError(f"deadline.{k}", "unknown timing parameter")
    params = RecoveryTimingParams(**spec)
    eff = {"deadline": {**spec, **where}}
    _dump(out / "effective_config.json", eff)
    try:
        verdict = analyze(params, float(where["h"]), float(where["t_current"]),
                          float(where["t_start"]), where["last_mcas_fire_t"])
    except ValueError as exc:
        _dump(out / "deadline.json", _stamp({"error": str(exc)}, eff))
        log.error("%s", exc)
        return EXIT_ABORT
    _dump(out / "deadline.json", _stamp(verdict.to_dict(), eff))
    return EXIT_OK


def cmd_validate(args, out: Path) -> int:
    kw = {}
    if args.config:
        kw = _read_raw(args.config).get("validation", {})
        unknown = set(kw) - {"n_takeoff", "n_landing", "seed"}
        if unknown:
            raise ConfigError(f"validation.{sorted(unknown)[0]}", "unknown key")
    eff = {"validation": kw}
    _dump(out / "effective_config.json", eff)
    rows = validate_maneuvers(jobs=args.jobs, **kw)
    table = [{"name": r["name"], "verdict": r["verdict"],
              "pass": r["verdict"] == "recovered", "trace_hash": r["trace_hash"]} for r in rows]
    _write_csv(out / "validation.csv", table)
    passed = sum(r["pass"] for r in table)
    _dump(out / "validation.json", _stamp({"passed": passed, "total": len(table),
                                           "failed": [r["name"] for r in table
                                                      if not r["pass"]]}, eff))
    log.info("maneuver validation: %d/%d pass", passed, len(table))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "grid": cmd_grid, "compare": cmd_compare,
            "deadline": cmd_deadline, "validate-maneuvers": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="samcas", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"samcas {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=name != "validate-maneuvers")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--set", action="append", metavar="PATH=VALUE",
                        help="dotted-path override, repeatable")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--log", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log, format="%(levelname)s %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("config error: seed: must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
