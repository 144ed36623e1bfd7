"""Space-time potential operators over the unsteady Stokes kernel.

Lambda convolves a vector source with the velocity kernel S over all past
times; Theta convolves a tensor source with the kernel gradient:

    (Lambda g)_i(t, x) = int_0^inf int S_ij(s, x-y) g_j(t-s, y) dy ds
    (Theta G)_i(t, x) = -int_0^inf int d_k S_ij(s, x-y) G_jk(t-s, y) dy ds

Both are evaluated by graded product quadrature: geometric time panels
clustered at s = 0 (optionally width-capped so oscillating sources stay
resolved), and per time node a two-patch spatial rule whose smooth partition
of unity separates the kernel center x from the origin where sources
concentrate.  The time integral is truncated at t_max and every result
carries a truncation-error estimate combining a coarse/fine discretization
difference with analytic tail bounds driven by the caller-supplied decay
envelope.

int_est_value / int_est_ratio probe the scaling-weighted convolution bound

    int (|x-y|+lam)^(-b) |x-y|^(-c) (|y|+sqrt(t))^(-3-mu) dy
      ~ sqrt(t)^(-mu) (|x|+lam+sqrt(t))^(-b) (|x|+sqrt(t))^(-c),

with node ladders built only from the scales |x|, lam, sqrt(t), so the
parabolic change of variables maps the quadrature onto itself exactly and the
reduction to t = 1 holds to rounding.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np

from .fields import FieldHandle, sphere_rule
from .oseen import _w_general, oseen_grad_batch, oseen_tensor_batch
from .quadrules import panels_gl, smooth_step

__all__ = [
    "DecayEnvelope",
    "PotentialQuadratureSpec",
    "PotentialResult",
    "default_spec",
    "theta_apply",
    "lambda_apply",
    "IntEstParams",
    "int_est_value",
    "int_est_ratio",
]

# conservative sups of the weighted kernel magnitudes |S| (|x|+sqrt(s))^3 and
# |dS| (|x|+sqrt(s))^4, used only inside tail estimates
_KERNEL_SUP = {3: 0.6, 4: 2.2}

_SPHERE_CACHE: dict = {}


def _sphere(n_theta: int, n_phi: int):
    key = (n_theta, n_phi)
    if key not in _SPHERE_CACHE:
        _SPHERE_CACHE[key] = sphere_rule(n_theta, n_phi)
    return _SPHERE_CACHE[key]


@dataclasses.dataclass(frozen=True)
class DecayEnvelope:
    """Caller-certified bound |f(t, y)| <= amplitude * (1 + |y|^2)^(-exponent/2).

    support_radius, when set, states the field vanishes beyond that radius;
    spatial ladders then stop there and the space tail is exactly zero.
    """

    amplitude: float
    exponent: float
    support_radius: Optional[float] = None

    def __post_init__(self):
        if self.amplitude < 0.0:
            raise ValueError("envelope amplitude must be nonnegative")
        if self.exponent <= 0.0:
            raise ValueError("envelope exponent must be positive")
        if self.support_radius is not None and self.support_radius <= 0.0:
            raise ValueError("support radius must be positive")

    def bound(self, pts: np.ndarray) -> np.ndarray:
        r2 = np.einsum("ni,ni->n", pts, pts)
        return self.amplitude * (1.0 + r2) ** (-0.5 * self.exponent)


@dataclasses.dataclass(frozen=True)
class PotentialQuadratureSpec:
    """Product quadrature controls for the potential operators.

    Time nodes live on (0, t_max], geometrically clustered at 0;
    time_panel_cap bounds panel width so oscillation at a known time scale
    stays resolved.  space_box_halfwidth sets the outer spatial radius as a
    multiple of |x| + sqrt(s) + 1, and singularity_split_radius scales the
    innermost radii of the patch around the kernel center.
    """

    t_max: float
    n_time_panels: int = 26
    gl_order: int = 4
    n_theta: int = 10
    n_phi: int = 20
    space_box_halfwidth: float = 30.0
    singularity_split_radius: float = 1.0
    radial_ratio: float = 1.6
    inner_frac: float = 1e-5
    time_inner_frac: float = 1e-6
    time_panel_cap: Optional[float] = None

    def __post_init__(self):
        if self.t_max <= 0.0:
            raise ValueError("t_max must be positive")
        if self.n_time_panels < 2:
            raise ValueError("need at least 2 time panels")
        if self.gl_order < 4 or self.n_theta < 4 or self.n_phi < 4:
            raise ValueError("quadrature orders must be at least 4")
        if self.space_box_halfwidth <= 1.0 or self.singularity_split_radius <= 0.0:
            raise ValueError("bad spatial extents")
        if not (1.0 < self.radial_ratio < 4.0):
            raise ValueError("radial_ratio must be in (1, 4)")
        if self.time_panel_cap is not None and self.time_panel_cap <= 0.0:
            raise ValueError("time_panel_cap must be positive")
        nodes = self.time_nodes
        if not (np.all(nodes > 0.0) and np.all(np.diff(nodes) > 0.0)):
            raise ValueError("time nodes must be strictly positive and increasing")

    def time_panel_edges(self) -> np.ndarray:
        inner = self.time_inner_frac * self.t_max
        k = np.arange(self.n_time_panels + 1)
        geo = inner * (self.t_max / inner) ** (k / self.n_time_panels)
        edges = np.concatenate([[0.0], geo])
        if self.time_panel_cap is not None:
            pieces = []
            for a, b in zip(edges[:-1], edges[1:]):
                m = max(1, int(math.ceil((b - a) / self.time_panel_cap)))
                pieces.append(np.linspace(a, b, m + 1)[:-1])
            edges = np.concatenate(pieces + [[edges[-1]]])
        return edges

    @property
    def time_nodes(self) -> np.ndarray:
        return panels_gl(self.time_panel_edges(), self.gl_order)[0]

    @property
    def time_weights(self) -> np.ndarray:
        return panels_gl(self.time_panel_edges(), self.gl_order)[1]

    def refined(self, factor: int = 2) -> "PotentialQuadratureSpec":
        return dataclasses.replace(
            self,
            n_time_panels=self.n_time_panels * factor,
            gl_order=self.gl_order * factor,
            n_theta=self.n_theta * factor,
            n_phi=self.n_phi * factor,
        )

    def _coarsened(self) -> "PotentialQuadratureSpec":
        return dataclasses.replace(
            self,
            n_time_panels=max(6, self.n_time_panels // 2),
            n_theta=max(4, self.n_theta // 2),
            n_phi=max(6, self.n_phi // 2),
            radial_ratio=min(3.9, self.radial_ratio**2),
        )


def default_spec(t: float, time_scale: Optional[float] = None) -> PotentialQuadratureSpec:
    """Spec with horizon t_max = 100 (1 + t); time_scale caps panel widths at
    a quarter of that scale so periodic sources stay resolved."""
    cap = None if time_scale is None else 0.25 * float(time_scale)
    return PotentialQuadratureSpec(t_max=100.0 * (1.0 + float(t)), time_panel_cap=cap)


@dataclasses.dataclass(frozen=True)
class PotentialResult:
    value: np.ndarray
    truncation_error: float


def _chi_center(dist: np.ndarray, d: float) -> np.ndarray:
    """Partition factor: 1 within d/2 of the kernel center, 0 beyond d."""
    return 1.0 - smooth_step((dist - 0.5 * d) / (0.5 * d))


def _geometric_radii(inner: float, outer: float, ratio: float, gl: int):
    if outer <= inner:
        return np.empty(0), np.empty(0)
    n = max(1, int(math.ceil(math.log(outer / inner) / math.log(ratio))))
    edges = inner * (outer / inner) ** (np.arange(n + 1) / n)
    return panels_gl(edges, gl)


def _spatial_rule(x: np.ndarray, s: float, spec: PotentialQuadratureSpec, support_radius):
    """Two-patch nodes/weights for int f(y) dy with kernel center x.

    The partition-of-unity factors are folded into the weights; returns
    (points, weights).
    """
    rx = float(np.linalg.norm(x))
    sq = math.sqrt(s)
    dirs, wd = _sphere(spec.n_theta, spec.n_phi)
    d = 0.5 * rx

    r_out = (
        support_radius
        if support_radius is not None
        else spec.space_box_halfwidth * (rx + sq + 1.0)
    )

    use_x_patch = d > 0.0 and not (
        support_radius is not None and rx - d > support_radius * 1.000001
    )

    pts_list, wts_list = [], []
    if use_x_patch:
        sc_x = rx + spec.singularity_split_radius * sq
        r, wr = _geometric_radii(spec.inner_frac * sc_x, d, spec.radial_ratio, spec.gl_order)
        if r.size:
            chi = _chi_center(r, d)
            pts = x[None, None, :] + r[:, None, None] * dirs[None, :, :]
            wts = (wr * r**2 * chi)[:, None] * wd[None, :]
            pts_list.append(pts.reshape(-1, 3))
            wts_list.append(wts.reshape(-1))

    sc_0 = 1.0 + sq
    r, wr = _geometric_radii(spec.inner_frac * sc_0, r_out, spec.radial_ratio, spec.gl_order)
    pts = r[:, None, None] * dirs[None, :, :]
    pts = pts.reshape(-1, 3)
    wts = ((wr * r**2)[:, None] * wd[None, :]).reshape(-1)
    if use_x_patch:
        dist = np.linalg.norm(pts - x[None, :], axis=1)
        wts = wts * (1.0 - _chi_center(dist, d))
    pts_list.append(pts)
    wts_list.append(wts)
    return np.concatenate(pts_list), np.concatenate(wts_list)


def _check_envelope(vals: np.ndarray, pts: np.ndarray, env: DecayEnvelope):
    mags = np.sqrt(np.sum(vals.reshape(pts.shape[0], -1) ** 2, axis=1))
    bound = env.bound(pts)
    bad = mags > bound * (1.0 + 1e-9) + 1e-14 * (env.amplitude + 1.0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(
            f"decay envelope violated at y = {pts[i].tolist()}: "
            f"|f| = {mags[i]:.6e} > bound {bound[i]:.6e}"
        )


def _time_tail(kappa: int, env: DecayEnvelope, t_max: float) -> float:
    e_eff = 3.0 if env.support_radius is not None else min(env.exponent, 3.0)
    p = 0.5 * (kappa - 3.0 + e_eff)
    if p <= 1.0:
        return math.inf
    return env.amplitude * _KERNEL_SUP[kappa] * 4.0 * math.pi / (p - 1.0) * t_max ** (1.0 - p)


def _space_tail(kappa: int, env: DecayEnvelope, r_out: float, s: float) -> float:
    if env.support_radius is not None:
        return 0.0
    joint = env.exponent + kappa - 3.0
    return (
        env.amplitude
        * _KERNEL_SUP[kappa]
        * 4.0
        * math.pi
        * 2.0**kappa
        * r_out ** (-joint)
        / joint
    )


def _convolve_compact(kind: str, field: FieldHandle, t: float, x: np.ndarray, spec, env):
    """Fast route for compactly supported sources viewed from outside.

    The spatial nodes are time-independent (no kernel singularity inside the
    support), so the kernel profiles are evaluated on an (s-chunk, node)
    product in one shot instead of per time node.
    """
    r_supp = env.support_radius
    edges = np.concatenate([[0.0], r_supp * np.geomspace(1.0 / 64.0, 1.0, 9)])
    r_nodes, wr = panels_gl(edges, spec.gl_order)
    dirs, wd = _sphere(spec.n_theta, spec.n_phi)
    pts = (r_nodes[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    wts = ((wr * r_nodes**2)[:, None] * wd[None, :]).reshape(-1)

    z = x[None, :] - pts
    rz = np.linalg.norm(z, axis=1)
    zz = z[:, :, None] * z[:, None, :]
    eye = np.eye(3)

    s_nodes = spec.time_nodes
    s_weights = spec.time_weights
    acc = np.zeros(3)
    chunk = 24 if kind == "theta" else 64
    for lo in range(0, len(s_nodes), chunk):
        sc = s_nodes[lo : lo + chunk]
        wc = s_weights[lo : lo + chunk]
        vals = np.empty((len(sc), pts.shape[0], 3))
        for i, s in enumerate(sc):
            vals[i] = field(t - float(s), pts)
            _check_envelope(vals[i], pts, env)
        sqt2 = 2.0 * np.sqrt(sc)[:, None] * np.ones_like(rz)[None, :]
        rr = np.broadcast_to(rz, sqt2.shape)
        gam = (np.pi * sqt2**2) ** -1.5 * np.exp(-((rr / sqt2) ** 2))
        w1, w2, w3 = _w_general(rr, sqt2)
        inv4pi = 1.0 / (4.0 * math.pi)
        if kind == "lambda":
            ker = (gam + inv4pi * w1)[:, :, None, None] * eye
            ker = ker + (inv4pi * w2)[:, :, None, None] * zz[None]
            acc += np.einsum("kmij,kmj,m,k->i", ker, vals, wts, wc)
        else:
            dgam = -z[None] / (2.0 * sc[:, None, None]) * gam[:, :, None]
            zk = z[:, :, None, None]
            zi = z[:, None, :, None]
            zj = z[:, None, None, :]
            third = (
                eye[None, None, :, :] * zk
                + eye[None, :, None, :] * zi
                + eye[None, :, :, None] * zj
            )
            ker = w2[:, :, None, None, None] * third[None]
            ker += w3[:, :, None, None, None] * (zk * zi * zj)[None]
            ker *= inv4pi
            ker += dgam[:, :, :, None, None] * eye[None, None, None, :, :]
            acc += np.einsum("kmaij,kmja,m,k->i", ker, vals, wts, wc)
    if kind == "theta":
        acc = -acc
    kappa = 4 if kind == "theta" else 3
    return acc, _time_tail(kappa, env, spec.t_max)


def _convolve(kind: str, field: FieldHandle, t: float, x: np.ndarray, spec, env):
    kappa = 4 if kind == "theta" else 3
    rx = float(np.linalg.norm(x))
    if env.support_radius is not None and rx > 2.0 * env.support_radius:
        return _convolve_compact(kind, field, t, x, spec, env)
    s_nodes = spec.time_nodes
    s_weights = spec.time_weights
    acc = np.zeros(3)
    space_tail = 0.0
    for s, ws in zip(s_nodes, s_weights):
        pts, wts = _spatial_rule(x, float(s), spec, env.support_radius)
        vals = field(t - float(s), pts)
        _check_envelope(vals, pts, env)
        z = x[None, :] - pts
        if kind == "theta":
            ker = oseen_grad_batch(float(s), z)
            acc += ws * np.einsum("mkij,mjk,m->i", ker, vals, wts)
        else:
            ker = oseen_tensor_batch(float(s), z)
            acc += ws * np.einsum("mij,mj,m->i", ker, vals, wts)
        r_out = spec.space_box_halfwidth * (rx + math.sqrt(s) + 1.0)
        space_tail += ws * _space_tail(kappa, env, r_out, float(s))
    if kind == "theta":
        acc = -acc
    return acc, space_tail + _time_tail(kappa, env, spec.t_max)


def _apply(kind: str, field: FieldHandle, t: float, x, spec, envelope) -> PotentialResult:
    want = "tensor3x3" if kind == "theta" else "vector3"
    if field.arity != want or field.domain != "space_time":
        raise ValueError(f"{kind} needs a space_time {want} field")
    if not (t > 0.0):
        raise ValueError("need t > 0")
    x = np.asarray(x, dtype=float).reshape(3)
    if spec is None:
        spec = default_spec(t)
    value, tail = _convolve(kind, field, t, x, spec, envelope)
    coarse, _ = _convolve(kind, field, t, x, spec._coarsened(), envelope)
    disc = float(np.linalg.norm(value - coarse))
    return PotentialResult(value=value, truncation_error=disc + tail)


def theta_apply(
    G: FieldHandle, t: float, x, spec: Optional[PotentialQuadratureSpec] = None, *, envelope: DecayEnvelope
) -> PotentialResult:
    """Apply Theta to a tensor source; see module docstring for the integral."""
    return _apply("theta", G, t, x, spec, envelope)


def lambda_apply(
    g: FieldHandle, t: float, x, spec: Optional[PotentialQuadratureSpec] = None, *, envelope: DecayEnvelope
) -> PotentialResult:
    """Apply Lambda to a vector source; see module docstring for the integral."""
    return _apply("lambda", g, t, x, spec, envelope)


@dataclasses.dataclass(frozen=True)
class IntEstParams:
    """Exponents and scales of the weighted convolution estimate.

    n is the ambient dimension and fixed at 3; b, c split the kernel decay
    between the shifted and pure power, mu sets the source decay, lam the
    kernel shift, t the parabolic time scale.
    """

    b: float
    c: float
    mu: float
    lam: float = 0.0
    t: float = 1.0
    n: int = 3

    def __post_init__(self):
        if self.n != 3:
            raise ValueError("only dimension n = 3 is supported")
        if self.b < 0.0 or self.c < 0.0:
            raise ValueError("b and c must be nonnegative")
        if self.b + self.c >= self.n:
            raise ValueError(f"need b + c < {self.n}, got {self.b + self.c}")
        if self.mu <= 0.0:
            raise ValueError("mu must be positive")
        if self.lam < 0.0 or self.t <= 0.0:
            raise ValueError("need lam >= 0 and t > 0")


def _int_est_quadrature(
    p: IntEstParams, x: np.ndarray, ratio: float, gl: int, n_theta: int, n_phi: int
) -> float:
    """J(x) by two covariant patches; all radii are multiples of the problem
    scale |x| + lam + sqrt(t), so parabolic rescaling maps nodes onto nodes."""
    rx = float(np.linalg.norm(x))
    sq = math.sqrt(p.t)
    scale = rx + p.lam + sq
    dirs, wd = _sphere(n_theta, n_phi)
    inner = 1e-5 * scale
    r_out = 300.0 * scale
    d = 0.5 * rx

    total = 0.0
    # patch around the kernel center x: radial factors are exact in rho
    r, wr = _geometric_radii(inner, d, ratio, gl)
    if r.size:
        chi = _chi_center(r, d)
        y = x[None, None, :] + r[:, None, None] * dirs[None, :, :]
        src = (np.linalg.norm(y, axis=-1) + sq) ** (-3.0 - p.mu)
        radial = wr * r ** (2.0 - p.c) * (r + p.lam) ** (-p.b) * chi
        total += float(np.einsum("r,rd,d->", radial, src, wd))

    # patch around the origin with the center hole removed
    r, wr = _geometric_radii(inner, r_out, ratio, gl)
    y = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    dist = np.linalg.norm(y - x[None, :], axis=1)
    hole = 1.0 - _chi_center(dist, d) if d > 0.0 else 1.0
    ker = dist ** (-p.c) * (dist + p.lam) ** (-p.b)
    src = (np.linalg.norm(y, axis=1) + sq) ** (-3.0 - p.mu)
    wts = ((wr * r**2)[:, None] * wd[None, :]).reshape(-1)
    total += float(np.sum(wts * hole * ker * src))
    return total


def int_est_value(p: IntEstParams, x) -> tuple:
    """Returns (J(x), comparator) where the estimate claims J ~ comparator."""
    x = np.asarray(x, dtype=float).reshape(3)
    if not np.any(x != 0.0):
        raise ValueError("sample points must be nonzero")
    j = _int_est_quadrature(p, x, ratio=1.6, gl=5, n_theta=10, n_phi=20)
    j_coarse = _int_est_quadrature(p, x, ratio=2.2, gl=4, n_theta=6, n_phi=12)
    if not (math.isfinite(j) and math.isfinite(j_coarse)) or abs(j - j_coarse) > 0.3 * abs(j):
        raise ValueError(
            f"quadrature not converged at x = {x.tolist()}: "
            f"fine = {j:.6e}, coarse = {j_coarse:.6e}"
        )
    rx = float(np.linalg.norm(x))
    sq = math.sqrt(p.t)
    comparator = sq ** (-p.mu) * (rx + p.lam + sq) ** (-p.b) * (rx + sq) ** (-p.c)
    return j, comparator


def int_est_ratio(p: IntEstParams, x_samples) -> tuple:
    """Extremal ratios J / comparator over the sample points."""
    ratios = []
    for x in x_samples:
        j, comp = int_est_value(p, x)
        ratios.append(j / comp)
    return float(np.min(ratios)), float(np.max(ratios))
