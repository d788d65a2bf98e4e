"""Batch execution of the CLI subcommands: sweep expansion, workers, CSV/JSON export, manifest."""
from __future__ import annotations

import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .bae import BaeSteadyState, bae_spectrum, bae_steady_state, bistability_map
from .config import BISTABILITY_GRIDS, RunConfig, _json_default
from .core import HBAR, K_B, TWO_PI, derive
from .noise import VACUUM
from .response import (
    default_grid,
    local_peaks,
    optimal_homodyne_angle,
    solve_steady_state,
    spectral_density,
)
from .sensitivity import (
    SpectrumModel,
    default_sensitivity_grid,
    noise_budget_vs_power,
    sensitivity_curve,
    to_db,
)

__all__ = ["COMMANDS", "PointResult", "run", "write_csv", "read_csv", "SolverError"]


class SolverError(RuntimeError):
    pass


@dataclass
class PointResult:
    columns: list  # [(name, unit)]
    rows: np.ndarray
    summary: dict
    status: str = "ok"


UNITLESS = "dimensionless"
CHANNEL_COLS = [("S_total", UNITLESS), ("S_sn", UNITLESS), ("S_rp", UNITLESS), ("S_th", UNITLESS), ("S_add", UNITLESS)]


def _grid_rad(cfg: RunConfig, fallback):
    return TWO_PI * cfg.grid.values() if cfg.grid is not None else fallback


def _spectrum_rows(res):
    return np.column_stack([res.omega_hz, res.total, res.sn, res.rp, res.th, res.add])


def cmd_spectrum(cfg: RunConfig) -> PointResult:
    p = cfg.system
    fr = derive(p)
    ss = solve_steady_state(p, fr=fr)
    w = _grid_rad(cfg, default_grid(fr))
    res = spectral_density(w, cfg.phi, p, cfg.squeeze, ss=ss)
    peaks = local_peaks(w, res.total, 2) / TWO_PI
    floor = 0.5  # vacuum shot-noise level of the unit-normalised output quadrature
    summary = {
        "peaks_hz": peaks.tolist(),
        "Omega_c_hz": fr.Omega_c / TWO_PI,
        "Omega_d_hz": fr.Omega_d / TWO_PI,
        "min_S_total": float(res.total.min()),
        "shot_noise_floor": floor,
        "below_shot_noise": bool(res.total.min() < floor),
        "branch_count": ss.branch_count,
    }
    return PointResult([("omega_hz", "Hz")] + CHANNEL_COLS, _spectrum_rows(res), summary, "ok" if ss.monostable else "bistable-skipped")


def _bae_state(cfg: RunConfig) -> BaeSteadyState:
    return bae_steady_state(cfg.system, cfg.drive)


def cmd_bae_spectrum(cfg: RunConfig) -> PointResult:
    p = cfg.system
    fr = derive(p)
    bss = _bae_state(cfg)
    w = _grid_rad(cfg, np.linspace(TWO_PI * 1.0, 2 * fr.Omega, 20001))
    res = bae_spectrum(w, p, bss, cfg.squeeze)
    i = int(np.argmax(res.total))
    summary = {
        "peak_hz": float(res.omega_hz[i]),
        "Omega_hz": fr.Omega / TWO_PI,
        "a_bar": bss.a_bar,
        "monostable": bss.monostable,
    }
    return PointResult([("omega_hz", "Hz")] + CHANNEL_COLS, _spectrum_rows(res), summary, "ok" if bss.monostable else "bistable-skipped")


def cmd_sensitivity(cfg: RunConfig) -> PointResult:
    p, sq = cfg.system, cfg.squeeze
    w = _grid_rad(cfg, default_sensitivity_grid(cfg.scheme, p))
    kw = {"drive": cfg.drive} if cfg.scheme == "bae" else {"phi": cfg.phi}
    m = SpectrumModel(cfg.scheme, p, sq, **kw)
    curve = sensitivity_curve(cfg.scheme, p, sq, w, model=m)
    ref = sensitivity_curve(cfg.scheme, p, replace(VACUUM, convention=sq.convention), w, **kw)
    s = m.spectrum(w).total
    t = m.measurement_time(w)
    rows = np.column_stack([w / TWO_PI, curve.zeta, s, t])
    ratio = ref.zeta_opt / curve.zeta_opt
    summary = {
        "omega_opt_hz": curve.omega_opt / TWO_PI,
        "zeta_opt": curve.zeta_opt,
        "minima_hz": [[a / TWO_PI, b] for a, b in curve.minima],
        "enhancement": ratio,
        "enhancement_db": float(to_db(ratio)),
    }
    cols = [("omega_hz", "Hz"), ("zeta", "hbar*s^0.5"), ("S_total", UNITLESS), ("t_meas", "s")]
    return PointResult(cols, rows, summary)


def cmd_budget(cfg: RunConfig) -> PointResult:
    powers = cfg.powers.values()
    b = noise_budget_vs_power(cfg.scheme, cfg.system, cfg.squeeze, powers, drive=cfg.drive)
    rows = np.column_stack([b.powers, b.omega_opt / TWO_PI, b.S_total, b.S_sn, b.S_rp, b.S_th, b.S_add])
    finite = np.isfinite(b.S_total)
    i = int(np.nanargmin(b.S_total)) if finite.any() else -1
    summary = {
        "S_min": b.S_min,
        "S_SQL": b.S_SQL,
        "P_opt_w": float(b.powers[i]) if i >= 0 else None,
        "S_total_min": float(b.S_total[i]) if i >= 0 else None,
        "below_SQL_powers_w": b.powers[finite & (b.S_total < b.S_SQL)].tolist(),
        "point_status": list(b.status),
    }
    cols = [("power_w", "W"), ("omega_opt_hz", "Hz")] + [(n, "s") for n, _ in CHANNEL_COLS]
    if "failed" in b.status:
        status = "failed"
    elif "bistable-skipped" in b.status:
        status = "bistable-skipped"
    else:
        status = "ok"
    return PointResult(cols, rows, summary, status)


def cmd_bistability(cfg: RunConfig) -> PointResult:
    grid = cfg.bistability_grid or BISTABILITY_GRIDS[cfg.bistability_axis]
    m = bistability_map(cfg.system, grid.values(), cfg.bistability_axis, cfg.drive)
    rows = np.column_stack([m.values, m.branch_count, m.n_plus1, m.n_minus1, m.converged.astype(int)])
    unit = "W" if m.axis == "power" else "Hz"
    cols = [(m.axis, unit), ("branch_count", "count"), ("n_plus1", "photons"), ("n_minus1", "photons"), ("converged", "bool")]
    summary = {"axis": m.axis, "boundaries": m.boundaries(), "max_branch_count": int(m.branch_count.max())}
    return PointResult(cols, rows, summary)


def cmd_steady_state(cfg: RunConfig) -> PointResult:
    p = cfg.system
    if cfg.scheme == "bae":
        s = _bae_state(cfg)
        cols = [("n_plus1", "photons"), ("n_minus1", "photons"), ("a_bar", UNITLESS), ("Omega_eff_hz", "Hz"), ("branch_count", "count"), ("monostable", "bool"), ("residual", UNITLESS)]
        row = [s.n_plus1, s.n_minus1, s.a_bar, s.Omega_eff / TWO_PI, s.branch_count, int(s.monostable), s.residual]
        mono = s.monostable
    else:
        s = solve_steady_state(p)
        cols = [("a_s", UNITLESS), ("X_c_s", UNITLESS), ("X_d_s", UNITLESS), ("branch_count", "count"), ("monostable", "bool"), ("detuning_bare_hz", "Hz"), ("detuning_effective_hz", "Hz"), ("residual", UNITLESS)]
        row = [s.a_s, s.X_c_s, s.X_d_s, s.branch_count, int(s.monostable), s.detuning_bare / TWO_PI, s.detuning_effective / TWO_PI, s.residual]
        mono = s.monostable
    summary = dict(zip([c for c, _ in cols], row))
    return PointResult(cols, np.array([row], dtype=float), summary, "ok" if mono else "bistable-skipped")


def cmd_angle_scan(cfg: RunConfig) -> PointResult:
    p = cfg.system
    fr = derive(p)
    ss = solve_steady_state(p, fr=fr)
    lo, hi = 0.5 * fr.Omega_d, 1.2 * fr.Omega_c
    w = _grid_rad(cfg, np.union1d(np.linspace(lo, hi, 401), [fr.Omega_d, fr.Omega_c]))
    phis = np.linspace(0.0, np.pi, cfg.angles)
    S = np.array([spectral_density(w, ph, p, cfg.squeeze, ss=ss).total for ph in phis])
    P, W = np.meshgrid(phis, w, indexing="ij")
    rows = np.column_stack([P.ravel() / np.pi, W.ravel() / TWO_PI, S.ravel()])
    ridge = phis[np.argmax(S, axis=0)] / np.pi
    star = optimal_homodyne_angle(w, p, cfg.squeeze, ss=ss) / np.pi
    at = [int(np.argmin(np.abs(w - pk))) for pk in (fr.Omega_d, fr.Omega_c)]
    summary = {
        "ridge_phi_over_pi_at_peaks": [float(ridge[i]) for i in at],
        "phi_star_over_pi_at_peaks": [float(star[i]) for i in at],
        "global_max_phi_over_pi": float(P.ravel()[np.argmax(S)] / np.pi),
    }
    cols = [("phi_over_pi", UNITLESS), ("omega_hz", "Hz"), ("S_total", UNITLESS)]
    return PointResult(cols, rows, summary)


COMMANDS = {
    "spectrum": cmd_spectrum,
    "bae-spectrum": cmd_bae_spectrum,
    "sensitivity": cmd_sensitivity,
    "budget": cmd_budget,
    "bistability": cmd_bistability,
    "steady-state": cmd_steady_state,
    "angle-scan": cmd_angle_scan,
}


def _fmt(v: float) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.16e}"


def write_csv(path: Path, columns, rows: np.ndarray, title: str = "") -> None:
    names = [c for c, _ in columns]
    lines = []
    if title:
        lines.append(f"# {title}")
    lines.append("# schema: " + ",".join(names))
    lines += [f"# {c}: {u}" for c, u in columns]
    lines.append(",".join(names))
    for r in np.atleast_2d(rows):
        lines.append(",".join(_fmt(float(v)) for v in r))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path: Path):
    """Parse an emitted CSV; returns (column names, units dict, data array)."""
    units, schema, header, data = {}, None, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# schema: "):
            schema = line[len("# schema: "):].split(",")
        elif line.startswith("# ") and ": " in line:
            k, _, u = line[2:].partition(": ")
            units[k] = u
        elif line.startswith("#"):
            continue
        elif header is None:
            header = line.split(",")
        else:
            data.append([float(x) for x in line.split(",")])
    if schema is None or header != schema:
        raise ValueError(f"{path}: schema line missing or inconsistent with header")
    missing = [c for c in header if c not in units]
    if missing:
        raise ValueError(f"{path}: no units for {missing}")
    return header, units, np.array(data, dtype=float).reshape(-1, len(header))


def expand_sweep(cfg: RunConfig) -> list[tuple[dict, RunConfig]]:
    if not cfg.sweep:
        return [({}, cfg)]
    grids = [ax.grid.values() for ax in cfg.sweep]
    points = []
    for combo in itertools.product(*grids):
        c = cfg
        over = {}
        for ax, v in zip(cfg.sweep, combo):
            val = float(v)
            c = c.with_override(ax.path, val)
            over[ax.path] = val
        points.append((over, c))
    return points


def _worker(args):
    command, cfg = args
    try:
        res = COMMANDS[command](cfg)
        return res, None
    except Exception as exc:  # recorded per point, the run continues
        return None, {"error": type(exc).__name__, "message": str(exc)}


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default, allow_nan=True) + "\n")


def run(command: str, cfg: RunConfig, out: str | Path, *, force: bool = False, jobs: int | None = None) -> dict:
    """Execute ``command`` over the sweep and write artifacts under ``out``.

    Layout: ``<out>/<command>-<hash12>/points/point_NNNNN.{csv,json}``,
    ``summary.json`` and ``manifest.json``.  Point files that already exist
    are reused unless ``force`` is set.
    """
    if command not in COMMANDS:
        raise KeyError(command)
    t0 = time.perf_counter()
    h = cfg.config_hash(command)
    run_dir = Path(out) / f"{command}-{h[:12]}"
    pts_dir = run_dir / "points"
    pts_dir.mkdir(parents=True, exist_ok=True)
    points = expand_sweep(cfg)
    todo, results = [], {}
    for i, (over, c) in enumerate(points):
        csv_p, js_p = pts_dir / f"point_{i:05d}.csv", pts_dir / f"point_{i:05d}.json"
        want_csv = cfg.emit in ("csv", "both")
        if not force and js_p.exists() and (csv_p.exists() or not want_csv):
            results[i] = json.loads(js_p.read_text())
            results[i]["reused"] = True
        else:
            todo.append(i)
    n_jobs = jobs if jobs is not None else (cfg.jobs or os.cpu_count() or 1)
    tasks = [(command, points[i][1]) for i in todo]
    if n_jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(n_jobs, len(tasks))) as ex:
            outs = list(ex.map(_worker, tasks))
    else:
        outs = [_worker(t) for t in tasks]
    for i, (res, err) in zip(todo, outs):
        over = points[i][0]
        js_p = pts_dir / f"point_{i:05d}.json"
        if err is not None:
            rec = {"index": i, "overrides": over, "status": "failed", "error": err}
            (pts_dir / f"point_{i:05d}.csv").unlink(missing_ok=True)
        else:
            rec = {"index": i, "overrides": over, "status": res.status, "summary": res.summary}
            if cfg.emit in ("csv", "both"):
                write_csv(pts_dir / f"point_{i:05d}.csv", res.columns, res.rows, f"ringsense {command} point {i}")
        _dump_json(js_p, rec)
        rec["reused"] = False
        results[i] = rec
    ordered = [results[i] for i in range(len(points))]
    summary = {
        "command": command,
        "config_hash": h,
        "points": [{k: r[k] for k in ("index", "overrides", "status", "summary", "error") if k in r} for r in ordered],
    }
    if cfg.emit in ("json", "both"):
        _dump_json(run_dir / "summary.json", summary)
    manifest = {
        "command": command,
        "config_hash": h,
        "tool_version": __version__,
        "constants": {"hbar": HBAR, "k_B": K_B},
        "config": cfg.canonical(),
        "wall_clock_s": time.perf_counter() - t0,
        "points": [{"index": r["index"], "status": r["status"], "reused": r.get("reused", False)} for r in ordered],
    }
    _dump_json(run_dir / "manifest.json", manifest)
    return {"run_dir": str(run_dir), "summary": summary, "manifest": manifest}
