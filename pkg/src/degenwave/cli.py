"""Command-line entry point: ``degenwave <command> --config FILE [--out DIR]``.

The configuration is an INI file with a ``[model]`` section and one section
per command. Every numeric setting has a default. Results are written as
JSON (echoing the resolved configuration) plus CSV tables; timing and host
details go to a separate ``run_meta.json`` so results stay reproducible.

Exit codes: 0 success, 1 usage or configuration error, 2 solver error,
3 fixed-point iteration did not converge.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import os
import platform
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .errors import DegenwaveError, InvalidParams

log = logging.getLogger("degenwave")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_NONCONVERGED = 0, 1, 2, 3
COMMANDS = ("variational", "speed", "simulate", "classify", "sweep")

DEFAULTS = {
    "model": {"m": 2.0, "chi": 0.0, "a": 1.0, "b": 1.0, "tau": 0.0},
    "variational": {"tol": 1e-6, "max_iter": 100, "damping": 0.5, "n_out": 201},
    "speed": {"h": 1e-3, "left": -20.0, "right_pad": 40.0, "profile_tol": 1e-6,
              "speed_tol": 1e-6, "max_iter": 60, "damping": 1.0, "bisect_tol": 1e-12},
    "simulate": {"left": -70.0, "right": 10.0, "h": 0.02, "dt": "auto", "t_final": 40.0,
                 "sample_dt": 0.1, "delta": "auto", "burn_in": 0.3, "margin": 20.0,
                 "snapshots": "", "backend": "auto"},
    "classify": {"h": 1e-3, "window_lo": "auto", "window_hi": "auto", "tolerance": 0.05},
    "sweep": {"m_values": "2", "chi_values": "0, 0.02, 0.05, 0.1", "simulate": False,
              "workers": 1},
}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Resolved configuration: every section of :data:`DEFAULTS` with values filled in."""

    sections: dict
    out_dir: Path
    workers: int = 1
    source: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def model(self) -> dict:
        return self.sections["model"]

    def params(self, **changes):
        from .model import ModelParams
        kw = dict(self.model)
        kw.update(changes)
        return ModelParams(**kw)

    def echo(self) -> dict:
        return {name: dict(sec) for name, sec in self.sections.items()}


def _convert(raw: str, default, key):
    if isinstance(default, bool):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    return raw.strip()


def load_config(path, out_dir=None, workers=None) -> RunConfig:
    """Read an INI file and fill in defaults; unknown keys are configuration errors."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    sections = {name: dict(vals) for name, vals in DEFAULTS.items()}
    for name in parser.sections():
        if name == "output":
            continue
        if name not in DEFAULTS:
            raise ConfigError(f"unknown section [{name}]")
        for key, raw in parser.items(name):
            if key not in DEFAULTS[name]:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
            sections[name][key] = _convert(raw, DEFAULTS[name][key], f"[{name}] {key}")
    if out_dir is None:
        out_dir = parser.get("output", "dir", fallback="degenwave_out")
    if workers is None:
        workers = sections["sweep"]["workers"]
    cfg = RunConfig(sections, Path(out_dir), int(workers), str(path))
    try:
        cfg.params()
    except InvalidParams as exc:
        raise ConfigError(f"[model]: {exc}") from None
    return cfg


def _opt_float(value):
    return None if value in ("auto", "", None) else float(value)


def _float_list(text, key):
    try:
        return [float(t) for t in str(text).replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected a comma-separated list of numbers") from None


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in row])


def _payload(cfg: RunConfig, command: str, result: dict) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "command": command, "config": cfg.echo()}
    out.update(result)
    return out


# commands ---------------------------------------------------------------


def cmd_variational(cfg: RunConfig) -> int:
    from .variational import extremal_weight
    sec = cfg.sections["variational"]
    p = cfg.params()
    res = extremal_weight(p.m, p, tol=sec["tol"], max_iter=sec["max_iter"],
                          damping=sec["damping"])
    w = res.weight
    s = np.linspace(0.0, p.capacity, max(int(sec["n_out"]), 2))
    write_csv(cfg.out_dir / "weight.csv", ["s", "g"], zip(s, w(s)))
    write_json(cfg.out_dir / "variational.json", _payload(cfg, "variational", {
        "m": p.m, "a": p.a, "b": p.b, "c_star_0": res.c_star_0, "sigma": res.sigma,
        "A": res.A, "iterations": res.iterations}))
    return EXIT_OK


def _fixed_point_config(cfg: RunConfig, h=None):
    from .fixed_point import FixedPointConfig
    sec = cfg.sections["speed"]
    return FixedPointConfig(max_iter=sec["max_iter"], profile_tol=sec["profile_tol"],
                            speed_tol=sec["speed_tol"], damping=sec["damping"],
                            h=h if h is not None else sec["h"], left=sec["left"],
                            right_pad=sec["right_pad"], bisect_tol=sec["bisect_tol"])


def speed_summary(res) -> dict:
    out = {
        "c_star_chi": res.speed,
        "c_star_0": res.c_star_0,
        "ratio": res.speed / res.c_star_0,
        "bounds_check": "pass" if res.bounds_report["pass"] else "fail",
        "bounds": res.bounds_report,
        "iterations": res.iterations,
        "converged": res.converged,
        "residuals": res.residuals,
    }
    if res.admissibility is not None:
        out["admissible"] = res.admissibility["admissible"]
        out["admissibility"] = res.admissibility
    return out


def cmd_speed(cfg: RunConfig) -> int:
    from .fixed_point import solve_wave
    p = cfg.params()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = solve_wave(p, _fixed_point_config(cfg))
    x = res.profile.xi
    write_csv(cfg.out_dir / "profile.csv", ["xi", "phi", "eta", "eta1"],
              zip(x, res.profile.values, res.signal.eta, res.signal.eta1))
    summary = speed_summary(res)
    write_json(cfg.out_dir / "speed.json", _payload(cfg, "speed", summary))
    if not res.converged:
        log.error("fixed-point iteration did not converge in %d iterations; "
                  "last iterate written", res.iterations)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    from .simulator import empirical_speed, initial_state, run
    sec = cfg.sections["simulate"]
    p = cfg.params()
    backend = None if sec["backend"] == "auto" else sec["backend"]
    snaps = _float_list(sec["snapshots"], "[simulate] snapshots")
    dt = _opt_float(sec["dt"])
    delta = _opt_float(sec["delta"])
    init = initial_state(p, sec["left"], sec["right"], sec["h"])
    res = run(p, init, sec["t_final"], dt=dt, delta=delta, sample_dt=sec["sample_dt"],
              snapshot_times=snaps, margin=sec["margin"], backend=backend)
    series = res.series
    write_csv(cfg.out_dir / "front.csv", ["t", "x_f"], zip(series.times, series.positions))
    for t, st in res.snapshots.items():
        write_csv(cfg.out_dir / f"snapshot_t{t:g}.csv", ["x", "u", "v"], zip(st.x, st.u, st.v))
    fit = empirical_speed(series, sec["burn_in"])
    grid = {"left": sec["left"], "right": sec["right"], "h": init.h, "cells": len(init.grid)}
    write_json(cfg.out_dir / "simulate.json", _payload(cfg, "simulate", {
        "empirical_speed": fit.speed, "stderr": fit.stderr, "samples": fit.n,
        "fit_window": fit.window, "delta": series.delta, "grid": grid,
        "dt": dt if dt is not None else "adaptive", "steps": res.steps}))
    return EXIT_OK


def cmd_classify(cfg: RunConfig) -> int:
    from .classifier import classify, consistency_check, edge_exponent
    from .fixed_point import solve_wave
    sec = cfg.sections["classify"]
    p = cfg.params()
    cls = classify(p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = solve_wave(p, _fixed_point_config(cfg, h=sec["h"]))
    lo, hi = _opt_float(sec["window_lo"]), _opt_float(sec["window_hi"])
    window = (lo, hi) if lo is not None and hi is not None else None
    fit = edge_exponent(res.profile, window)
    expected = 1.0 / (p.m - 1.0)
    report = consistency_check(res.profile, p)
    ok = abs(fit.exponent - expected) <= sec["tolerance"] * expected and report["agrees"]
    write_json(cfg.out_dir / "classify.json", _payload(cfg, "classify", {
        "m": p.m, "class": cls.value, "fitted_exponent": fit.exponent,
        "expected_exponent": expected, "fit_window": fit.window,
        "consistency": "pass" if ok else "fail", "edge_regime": report["regime"],
        "refinement": report, "speed": res.speed, "converged": res.converged}))
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def _sweep_cell(sections: dict, m: float, chi: float, simulate: bool) -> dict:
    """One (m, chi) cell; failures come back as a flagged row."""
    row = {"m": m, "chi": chi, "c_star_chi": math.nan, "c_star_0": math.nan,
           "ratio": math.nan, "empirical_speed": math.nan, "status": "ok"}
    cfg = RunConfig({k: dict(v) for k, v in sections.items()}, Path("."))
    cfg.sections["model"].update(m=m, chi=chi)
    try:
        from .fixed_point import solve_wave
        p = cfg.params()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = solve_wave(p, _fixed_point_config(cfg))
        row.update(c_star_chi=res.speed, c_star_0=res.c_star_0,
                   ratio=res.speed / res.c_star_0)
        if not res.converged:
            row["status"] = "not-converged"
        if simulate:
            from .simulator import empirical_speed, initial_state, run
            sec = cfg.sections["simulate"]
            init = initial_state(p, sec["left"], sec["right"], sec["h"])
            out = run(p, init, sec["t_final"], dt=_opt_float(sec["dt"]),
                      delta=_opt_float(sec["delta"]), sample_dt=sec["sample_dt"],
                      margin=sec["margin"])
            row["empirical_speed"] = empirical_speed(out.series, sec["burn_in"]).speed
    except (DegenwaveError, ValueError, ArithmeticError) as exc:
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    return row


def cmd_sweep(cfg: RunConfig) -> int:
    sec = cfg.sections["sweep"]
    ms = _float_list(sec["m_values"], "[sweep] m_values")
    chis = _float_list(sec["chi_values"], "[sweep] chi_values")
    if not ms or not chis:
        raise ConfigError("sweep lists must not be empty")
    cells = [(m, chi) for m in ms for chi in chis]
    sections = cfg.echo()
    workers = max(1, int(cfg.workers))
    if workers == 1:
        rows = [_sweep_cell(sections, m, chi, sec["simulate"]) for m, chi in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_sweep_cell, sections, m, chi, sec["simulate"])
                    for m, chi in cells]
            rows = [f.result() for f in futs]
    for r in rows:
        if r["status"] != "ok":
            log.warning("sweep cell m=%g chi=%g: %s", r["m"], r["chi"], r["status"])
    cols = ["m", "chi", "c_star_chi", "c_star_0", "ratio", "empirical_speed", "status"]
    write_csv(cfg.out_dir / "sweep.csv", cols, ([r[c] for c in cols] for r in rows))
    write_json(cfg.out_dir / "sweep.json", _payload(cfg, "sweep", {"rows": rows}))
    return EXIT_OK


HANDLERS = {"variational": cmd_variational, "speed": cmd_speed, "simulate": cmd_simulate,
            "classify": cmd_classify, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="degenwave",
                                 description="Semi-finite traveling waves with chemotaxis.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="INI configuration file")
    ap.add_argument("--out", help="output directory (overrides [output] dir)")
    ap.add_argument("--workers", type=int, help="parallel sweep cells")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, args.out, args.workers)
    except ConfigError as exc:
        print(f"degenwave: {exc}", file=sys.stderr)
        ap.print_usage(sys.stderr)
        return EXIT_USAGE
    started = time.time()
    try:
        code = HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"degenwave: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenwaveError, ValueError, ArithmeticError) as exc:
        print(f"degenwave: {args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_SOLVER
    write_json(cfg.out_dir / "run_meta.json", {
        "command": args.command, "config_file": cfg.source, "exit_code": code,
        "version": __version__, "kernels": _backend.name, "python": platform.python_version(),
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
        "elapsed_s": round(time.time() - started, 3), "pid": os.getpid()})
    return code


if __name__ == "__main__":
    sys.exit(main())
