"""Field handles, radial-spherical grids, finite differences, and weighted norms.

Everything downstream consumes these primitives: vectorized field evaluation,
product Gauss-Legendre x uniform-azimuth sphere rules, geometric radial grids,
central finite differences, and the weighted sup / weak-Lebesgue norms used to
certify pointwise decay.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import roots_legendre

__all__ = [
    "FieldHandle",
    "RadialSphericalGrid",
    "NormReport",
    "sphere_rule",
    "sphere_integral",
    "fd_derivative",
    "xk_norm",
    "weak_lq_norm",
]


_ARITY_SHAPES = {"scalar": (), "vector3": (3,), "tensor3x3": (3, 3)}


@dataclasses.dataclass(frozen=True)
class FieldHandle:
    """A pure, vectorized field.

    ``eval`` receives points as an (N, 3) array (plus a scalar time first for
    space_time fields) and returns (N,), (N, 3) or (N, 3, 3) according to
    arity.  Evaluation must be deterministic; handles carry no mutable state.
    ``analytic_gradient``, when given, maps (N, 3) points to (N, 3, 3) with
    entry [n, i, j] = d_i f_j and lets fd_derivative skip the stencil.
    """

    arity: str
    domain: str
    eval: Callable[..., np.ndarray]
    analytic_gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.arity not in _ARITY_SHAPES:
            raise ValueError(f"unknown arity {self.arity!r}")
        if self.domain not in ("space", "space_time"):
            raise ValueError(f"unknown domain {self.domain!r}")

    def __call__(self, *args) -> np.ndarray:
        """Evaluate at x of shape (..., 3); space_time fields take (t, x)."""
        if self.domain == "space":
            (x,) = args
        else:
            t, x = args
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        pts = np.atleast_2d(x)
        out = self.eval(pts) if self.domain == "space" else self.eval(args[0], pts)
        out = np.asarray(out, dtype=float)
        want = (pts.shape[0],) + _ARITY_SHAPES[self.arity]
        if out.shape != want:
            raise ValueError(
                f"field returned shape {out.shape}, expected {want} for arity {self.arity}"
            )
        return out[0] if squeeze else out


def constant_field(value, domain: str = "space") -> FieldHandle:
    """Constant field of the arity implied by value's shape."""
    value = np.asarray(value, dtype=float)
    arity = {0: "scalar", 1: "vector3", 2: "tensor3x3"}[value.ndim]

    if domain == "space":
        def ev(x):
            return np.broadcast_to(value, (x.shape[0],) + value.shape).copy()
    else:
        def ev(t, x):
            return np.broadcast_to(value, (x.shape[0],) + value.shape).copy()

    return FieldHandle(arity=arity, domain=domain, eval=ev)


def zero_field(arity: str = "vector3", domain: str = "space") -> FieldHandle:
    shape = _ARITY_SHAPES[arity]
    return constant_field(np.zeros(shape), domain=domain)


def sphere_rule(n_theta: int, n_phi: int):
    """Unit-sphere quadrature: Gauss-Legendre in cos(theta) x uniform azimuth.

    Returns (points, weights) with points of shape (n_theta*n_phi, 3) and
    weights summing to 4 pi.  Exact for spherical harmonics with polar degree
    < 2 n_theta and azimuthal order < n_phi.
    """
    if n_theta < 1 or n_phi < 1:
        raise ValueError("rule orders must be positive")
    mu, w_mu = roots_legendre(n_theta)
    phi = (np.arange(n_phi) + 0.5) * (2.0 * np.pi / n_phi)
    s = np.sqrt(1.0 - mu**2)
    ct, cp = np.meshgrid(mu, np.cos(phi), indexing="ij")
    st, sp = np.meshgrid(s, np.sin(phi), indexing="ij")
    pts = np.stack([st * cp, st * sp, ct], axis=-1).reshape(-1, 3)
    wts = np.repeat(w_mu, n_phi) * (2.0 * np.pi / n_phi)
    return pts, wts


@dataclasses.dataclass(frozen=True)
class RadialSphericalGrid:
    """Geometric radii crossed with a product sphere rule.

    Radii are r_min * q^i for i = 0..n_r-1 with q = (r_max/r_min)^(1/(n_r-1)).
    """

    r_min: float
    r_max: float
    n_r: int
    n_theta: int
    n_phi: int

    def __post_init__(self):
        if not (0.0 < self.r_min < self.r_max):
            raise ValueError("need 0 < r_min < r_max")
        if self.n_r < 2 or self.n_theta < 1 or self.n_phi < 1:
            raise ValueError("grid sizes too small")

    @property
    def radii(self) -> np.ndarray:
        return np.geomspace(self.r_min, self.r_max, self.n_r)

    def sphere(self):
        return sphere_rule(self.n_theta, self.n_phi)

    def nodes(self) -> np.ndarray:
        """All grid points, shape (n_r * n_theta * n_phi, 3)."""
        dirs, _ = self.sphere()
        return (self.radii[:, None, None] * dirs[None, :, :]).reshape(-1, 3)

    def cell_volumes(self) -> np.ndarray:
        """Per-node volumes: angular weight x radial shell third, same order as
        nodes().  Shell boundaries at geometric midpoints (endpoints clamped to
        r_min, r_max), so the volumes tile the annulus r_min <= |x| <= r_max."""
        r = self.radii
        mid = np.sqrt(r[1:] * r[:-1])
        lo = np.concatenate([[r[0]], mid])
        hi = np.concatenate([mid, [r[-1]]])
        shell = (hi**3 - lo**3) / 3.0
        _, w = self.sphere()
        return (shell[:, None] * w[None, :]).reshape(-1)

    def descriptor(self) -> str:
        """Plain key=value text block for embedding in reports."""
        return "\n".join(
            [
                f"r_min = {self.r_min!r}",
                f"r_max = {self.r_max!r}",
                f"n_r = {self.n_r}",
                f"n_theta = {self.n_theta}",
                f"n_phi = {self.n_phi}",
            ]
        )

    @staticmethod
    def from_descriptor(text: str) -> "RadialSphericalGrid":
        kv = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            kv[key.strip()] = val.strip()
        return RadialSphericalGrid(
            r_min=float(kv["r_min"]),
            r_max=float(kv["r_max"]),
            n_r=int(kv["n_r"]),
            n_theta=int(kv["n_theta"]),
            n_phi=int(kv["n_phi"]),
        )


DEFAULT_GRID = RadialSphericalGrid(r_min=0.1, r_max=100.0, n_r=64, n_theta=32, n_phi=64)


@dataclasses.dataclass(frozen=True)
class NormReport:
    xk_value: float
    weak_lq_value: float
    grid_used: str

    def __post_init__(self):
        if not (np.isfinite(self.xk_value) and self.xk_value >= 0.0):
            raise ValueError("xk_value must be finite and nonnegative")
        if not (np.isfinite(self.weak_lq_value) and self.weak_lq_value >= 0.0):
            raise ValueError("weak_lq_value must be finite and nonnegative")


def _magnitudes(f: FieldHandle, pts: np.ndarray) -> np.ndarray:
    vals = f(pts)
    if f.arity == "scalar":
        mags = np.abs(vals)
    else:
        mags = np.sqrt(np.sum(vals.reshape(pts.shape[0], -1) ** 2, axis=1))
    if not np.all(np.isfinite(mags)):
        bad = int(np.argmax(~np.isfinite(mags)))
        raise FloatingPointError(
            f"non-finite field value at node {bad}, x = {pts[bad].tolist()}"
        )
    return mags


def xk_norm(f: FieldHandle, k: float, grid: RadialSphericalGrid = DEFAULT_GRID) -> float:
    """Grid max of (1 + |x|)^k |f(x)|, a lower bound of the true sup."""
    pts = grid.nodes()
    r = np.sqrt(np.sum(pts**2, axis=1))
    mags = _magnitudes(f, pts)
    return float(np.max((1.0 + r) ** k * mags))


def weak_lq_norm(f: FieldHandle, q: float, grid: RadialSphericalGrid = DEFAULT_GRID) -> float:
    """Discrete weak-L^q norm: sup over sampled thresholds lam of
    lam * meas({|f| > lam})^(1/q), with the measure counted from grid cell
    volumes.  Thresholds are the sampled |f| values themselves."""
    if q <= 1.0:
        raise ValueError("need q > 1")
    pts = grid.nodes()
    mags = _magnitudes(f, pts)
    vols = grid.cell_volumes()
    order = np.argsort(mags)[::-1]
    sorted_mags = mags[order]
    cum = np.cumsum(vols[order])
    # measure of {|f| > lam} at lam just below sorted_mags[i] is cum[i]
    vals = sorted_mags * cum ** (1.0 / q)
    return float(np.max(vals, initial=0.0))


_UNIT = np.eye(3)


def fd_derivative(f: FieldHandle, order: str, x: np.ndarray, h: Optional[float] = None):
    """Central second-order finite differences of a spatial field at one point.

    order 'grad': scalar f -> (3,), vector f -> (3, 3) with [i, j] = d_i f_j
    (dispatches to f.analytic_gradient when present).
    order 'div': vector f -> scalar sum_i d_i f_i.
    order 'laplacian': componentwise sum_i d_i^2 f.
    Default step h = 1e-4 * max(1, |x|).
    """
    x = np.asarray(x, dtype=float).reshape(3)
    if h is None:
        h = 1e-4 * max(1.0, float(np.linalg.norm(x)))
    if h <= 0.0:
        raise ValueError("need h > 0")
    if order in ("grad", "div") and f.analytic_gradient is not None:
        g = np.asarray(f.analytic_gradient(x[None, :]))[0]
        return float(np.trace(g)) if order == "div" else g

    if order in ("grad", "div"):
        plus = f(x[None, :] + h * _UNIT)
        minus = f(x[None, :] - h * _UNIT)
        g = (plus - minus) / (2.0 * h)
        if order == "div":
            if f.arity != "vector3":
                raise ValueError("div needs a vector3 field")
            return float(np.trace(g))
        return g if f.arity != "scalar" else np.asarray(g, dtype=float)
    if order == "laplacian":
        plus = f(x[None, :] + h * _UNIT)
        minus = f(x[None, :] - h * _UNIT)
        center = f(x[None, :].repeat(3, axis=0))
        lap = np.sum(plus + minus - 2.0 * center, axis=0) / h**2
        if f.arity == "scalar":
            return float(lap)
        return lap
    raise ValueError(f"unknown order {order!r}")


def sphere_integral(f: FieldHandle, rho: float, rule=None):
    """Quadrature of int_{|x|=rho} f dS (componentwise for non-scalars)."""
    if rho <= 0.0:
        raise ValueError("need rho > 0")
    if rule is None:
        rule = sphere_rule(32, 64)
    dirs, wts = rule
    vals = f(rho * dirs)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite value on sphere")
    scaled = wts * rho**2
    if f.arity == "scalar":
        return float(np.sum(scaled * vals))
    return np.tensordot(scaled, vals, axes=(0, 0))
