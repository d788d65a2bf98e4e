"""Polynomial root enumeration and branch continuation shared by both steady-state solvers."""
from __future__ import annotations

import numpy as np

__all__ = ["nonnegative_real_roots", "continue_root"]


def _polish(coeffs: np.ndarray, x: float, iters: int = 8) -> float:
    d = np.polyder(coeffs)
    for _ in range(iters):
        f = np.polyval(coeffs, x)
        fp = np.polyval(d, x)
        if fp == 0:
            break
        step = f / fp
        x -= step
        if abs(step) <= 1e-16 * max(abs(x), 1e-300):
            break
    return x


def nonnegative_real_roots(coeffs, imag_tol: float = 1e-7) -> np.ndarray:
    """Real roots ≥ 0 of a polynomial (highest degree first), Newton-polished and sorted.

    A root counts as real when its imaginary part is below ``imag_tol`` times
    its modulus (or the scale of the coefficients for roots near zero).
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    # a vanishing leading coefficient only carries roots beyond float range; drop it
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        while c.size > 1 and not np.all(np.isfinite(c[1:] / c[0])):
            c = c[1:]
    if c.size <= 1:
        return np.empty(0)
    if c[-1] == 0.0:
        # x = 0 is a root; deflate and add it back
        rest = nonnegative_real_roots(c[:-1], imag_tol)
        return np.unique(np.concatenate([[0.0], rest]))
    raw = np.roots(c)
    scale = max(np.max(np.abs(raw)), 1e-300)
    out = []
    for z in raw:
        if abs(z.imag) <= imag_tol * max(abs(z), 1e-12 * scale):
            x = _polish(c, float(z.real))
            if x >= 0:
                out.append(x)
    out.sort()
    # merge numerically coincident roots
    merged: list[float] = []
    for x in out:
        if merged and abs(x - merged[-1]) <= 1e-9 * max(abs(x), 1e-300):
            continue
        merged.append(x)
    return np.asarray(merged)


def continue_root(poly_at, steps: int = 200, start: float = 0.0) -> tuple[float, np.ndarray]:
    """Follow the root that starts at ``start`` for s=0 as s ramps to 1.

    ``poly_at(s)`` returns the polynomial coefficients at ramp parameter s.
    Returns the tracked root at s=1 and all non-negative real roots there.
    """
    x = start
    roots = nonnegative_real_roots(poly_at(0.0))
    for s in np.linspace(0.0, 1.0, steps + 1)[1:]:
        roots = nonnegative_real_roots(poly_at(float(s)))
        if roots.size == 0:
            raise RuntimeError(f"continuation lost all real roots at s={s:.4g}")
        x = float(roots[np.argmin(np.abs(roots - x))])
    return x, roots
