"""Shared quadrature node builders: mapped Gauss-Legendre panels and ladders.

All builders are deterministic and return plain (nodes, weights) arrays; node
ladders are constructed relative to caller-supplied scales so that quadratures
built from them commute with parabolic rescaling.
"""

from __future__ import annotations

import numpy as np
from scipy.special import roots_legendre

__all__ = [
    "gl_panel",
    "panels_gl",
    "geometric_edges",
    "radial_shell_nodes",
    "bump",
    "smooth_step",
]

_GL_CACHE: dict = {}


def _gl(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = roots_legendre(n)
    return _GL_CACHE[n]


def gl_panel(a: float, b: float, n: int):
    """Gauss-Legendre nodes/weights on [a, b]."""
    x, w = _gl(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def panels_gl(edges: np.ndarray, n: int):
    """Concatenated GL rules over consecutive [edges[i], edges[i+1]] panels."""
    edges = np.asarray(edges, dtype=float)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gl_panel(a, b, n)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def geometric_edges(inner: float, outer: float, ratio: float) -> np.ndarray:
    """Edges inner, inner*ratio, ... capped so the last edge equals outer."""
    if not (inner > 0 and outer > inner and ratio > 1):
        raise ValueError("need 0 < inner < outer and ratio > 1")
    edges = [inner]
    while edges[-1] * ratio < outer:
        edges.append(edges[-1] * ratio)
    edges.append(outer)
    return np.asarray(edges)


def bump(s):
    """exp(-1/s) for s > 0, zero otherwise; the basic smooth cutoff seed."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0.0
    out[pos] = np.exp(-1.0 / s[pos])
    return out if out.ndim else float(out)


def smooth_step(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1, strictly monotone between.

    Built as bump(s) / (bump(s) + bump(1 - s)), so all derivatives vanish at
    both endpoints.
    """
    s = np.asarray(s, dtype=float)
    lo = bump(s)
    hi = bump(1.0 - s)
    out = np.where(s <= 0.0, 0.0, np.where(s >= 1.0, 1.0, lo / (lo + hi + 1e-300)))
    return out if out.ndim else float(out)


def radial_shell_nodes(edges: np.ndarray, n_per_panel: int, n_theta: int, n_phi: int):
    """Spherical-shell product nodes: radial GL panels x unit-sphere rule.

    Returns (points (M, 3), weights (M,)) with weights including the r^2
    Jacobian, so sums approximate int_{shell} f dV.
    """
    from .fields import sphere_rule

    r, wr = panels_gl(edges, n_per_panel)
    dirs, wd = sphere_rule(n_theta, n_phi)
    pts = r[:, None, None] * dirs[None, :, :]
    wts = (wr * r**2)[:, None] * wd[None, :]
    return pts.reshape(-1, 3), wts.reshape(-1)
