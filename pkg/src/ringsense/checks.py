"""Invariant suite behind the ``validate`` subcommand."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .bae import bae_spectrum, bae_steady_state, floquet_coefficient
from .config import RunConfig
from .core import derive, sidemode_frequencies, winding_gap
from .noise import SqueezeParams, VACUUM, optical_kernel, thermal_kernel
from .response import (
    default_grid,
    output_coefficients_matrix,
    solve_steady_state,
    spectral_density,
)
from .runner import read_csv

__all__ = ["run_checks"]

_SQUEEZES = [VACUUM, SqueezeParams(2.0, np.pi), SqueezeParams(1.0, 2 * np.pi / 3), SqueezeParams(0.5, 0.3, 0.2)]


def _check(name, passed, detail=""):
    return {"name": name, "passed": bool(passed), "detail": detail}


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def run_checks(cfg: RunConfig, out_dir: str | Path | None = None) -> list[dict]:
    p = cfg.system
    fr = derive(p)
    ss = solve_steady_state(p, fr=fr)
    w = default_grid(fr, points=1000, refine=4)
    res = []

    res.append(_check(
        "commutator residue",
        all(optical_kernel(s).chi_QP - optical_kernel(s).chi_PQ == 2 for s in _SQUEEZES),
    ))

    wc, wd = sidemode_frequencies(p)
    gap = winding_gap(p.winding_number, p.oam_order, p.moment_of_inertia_over_hbar)[0]
    res.append(_check("sidemode gap", abs((wc - wd) - gap) <= 1e-12 * abs(gap) + 1e-15, f"{wc - wd} vs {gap}"))

    res.append(_check("steady-state residual", ss.residual < 1e-10, f"{ss.residual:.3e}"))

    worst_neg, worst_closure = 0.0, 0.0
    for s in _SQUEEZES:
        sp = spectral_density(w, cfg.phi, p, s, ss=ss)
        worst_neg = min(worst_neg, float(sp.total.min()))
        worst_closure = max(worst_closure, _rel(sp.sn + sp.rp + sp.th + sp.add, sp.total))
    res.append(_check("spectrum non-negative", worst_neg >= 0, f"min {worst_neg:.3e}"))
    res.append(_check("channel closure", worst_closure < 1e-10, f"{worst_closure:.3e}"))

    # vacuum path coded from modulus squares of the matrix-path coefficients
    sp = spectral_density(w, cfg.phi, p, VACUUM, ss=ss)
    q = output_coefficients_matrix(w, p, ss, fr=fr)
    a, b, c, d = q.row(cfg.phi)
    vac = 0.5 * (np.abs(a) ** 2 + np.abs(b) ** 2) - np.imag(a * np.conj(b))
    vac = vac + (np.abs(c) ** 2 * thermal_kernel(w, fr.omega_c, p.bec_temperature, fr.gamma)
                 + np.abs(d) ** 2 * thermal_kernel(w, fr.omega_d, p.bec_temperature, fr.gamma)) / (2 * np.pi)
    res.append(_check("vacuum reduction", _rel(sp.total, vac) < 1e-12 and np.all(sp.add == 0), f"{_rel(sp.total, vac):.3e}"))

    mp = spectral_density(w, cfg.phi, p, cfg.squeeze, ss=ss, method="matrix")
    cp = spectral_density(w, cfg.phi, p, cfg.squeeze, ss=ss)
    res.append(_check("matrix-path equivalence", _rel(cp.total, mp.total) < 1e-9, f"{_rel(cp.total, mp.total):.3e}"))

    bss = bae_steady_state(p, cfg.drive)
    res.append(_check("BAE steady-state residual", bss.residual < 1e-10, f"{bss.residual:.3e}"))
    nu = np.linspace(0.1, 3.0, 50) * fr.omega_m
    trunc = max(float(np.max(np.abs(floquet_coefficient(k, n, nu, p, bss)))) for k in "QPcd" for n in (3, -3, 4, -4))
    res.append(_check("Floquet truncation", trunc == 0.0, f"max |coef| at |n|>=3: {trunc}"))
    wb = np.linspace(0.05, 2.0, 2001) * fr.Omega
    worst = min(float(bae_spectrum(wb, p, bss, s).total.min()) for s in _SQUEEZES)
    res.append(_check("BAE spectrum non-negative", worst >= 0, f"min {worst:.3e}"))

    if out_dir is not None and Path(out_dir).exists():
        bad = []
        files = sorted(Path(out_dir).rglob("*.csv"))
        for f in files:
            try:
                read_csv(f)
            except (ValueError, OSError) as exc:
                bad.append(f"{f}: {exc}")
        res.append(_check("emitted CSV schema", not bad, f"{len(files)} files; " + "; ".join(bad[:3])))
    return res
