"""Time-dependent Stokes fundamental tensor built from the heat kernel.

The velocity kernel is

    S_ij(t, x) = Gamma(t, x) delta_ij + (1/4pi) d_i d_j N(t, x),

where Gamma is the 3-d heat kernel and N(t, x) = erf(|x| / (2 sqrt(t))) / |x|
is its Newtonian potential.  Radial derivatives of N reduce to two scalar
profiles W1, W2:

    d_i d_j N = delta_ij W1 + x_i x_j W2,

with closed forms in erf / exp and a power-series branch near x = 0 where the
closed forms lose digits to cancellation.  The associated pressure kernel is
the gradient of the Newtonian monopole, x / (4 pi |x|^3), carried by a delta
in time; only its spatial factor is represented here.

Two evaluation modes are kept deliberately separate and are never collapsed:
``erf_closed_form`` (the profiles above) and ``brute_quadrature``, which
integrates second derivatives of the Gaussian against 1/|x - y| in spherical
coordinates centered at x.  The brute mode exists to cross-check the closed
form, so it shares none of its algebra.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf as _erf

from .fields import sphere_rule
from .quadrules import geometric_edges, panels_gl

__all__ = [
    "heat_kernel",
    "oseen_eval",
    "oseen_tensor_batch",
    "oseen_grad_batch",
    "oseen_dt_closed",
    "oseen_derivative",
    "pressure_kernel_q",
    "decay_constant",
    "MODES",
]

MODES = ("erf_closed_form", "brute_quadrature")

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)

# Series branch for the W profiles, used for xi = |x|/(2 sqrt(t)) below
# _SERIES_XI.  Coefficients multiply xi^(2k - 2), xi^(2k - 4), xi^(2k - 6)
# for W1, W2, W2'/r respectively; each series starts at the first index with
# a nonzero coefficient, so the profiles stay smooth through x = 0.
_SERIES_XI = 0.5
_SERIES_TERMS = 16


def _series_coefficients(terms: int):
    c1 = np.zeros(terms)
    c2 = np.zeros(terms)
    c3 = np.zeros(terms)
    for k in range(1, terms):
        fk = math.factorial(k)
        sign = -1.0 if k % 2 else 1.0
        c1[k] = sign * 2.0 * k / (fk * (2 * k + 1))
        if k >= 2:
            c2[k] = sign * (
                3.0 / (fk * (2 * k + 1)) - 3.0 / fk + 2.0 / math.factorial(k - 1)
            )
        if k >= 3:
            c3[k] = sign * (
                4.0 / math.factorial(k - 2)
                - 10.0 / math.factorial(k - 1)
                + 15.0 / fk
                - 15.0 / (fk * (2 * k + 1))
            )
    return (
        _TWO_OVER_SQRT_PI * c1[1:],
        _TWO_OVER_SQRT_PI * c2[2:],
        _TWO_OVER_SQRT_PI * c3[3:],
    )


_C1, _C2, _C3 = _series_coefficients(_SERIES_TERMS)


def _check_time(t: float) -> float:
    t = float(t)
    if not (t > 0.0) or not math.isfinite(t):
        raise ValueError(f"time must be positive and finite, got {t}")
    return t


def heat_kernel(t: float, x) -> np.ndarray:
    """3-d heat kernel (4 pi t)^(-3/2) exp(-|x|^2 / 4t), vectorized over x."""
    t = _check_time(t)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r2 = np.einsum("ni,ni->n", x, x)
    out = (4.0 * math.pi * t) ** -1.5 * np.exp(-r2 / (4.0 * t))
    return out if out.shape[0] > 1 else out[0]


def _w_profiles(t: float, r: np.ndarray):
    """Return W1, W2, W2'/r at radii r > 0 (r = 0 allowed: series limit)."""
    return _w_general(r, 2.0 * math.sqrt(t) * np.ones_like(r))


def _w_general(r: np.ndarray, sqt2: np.ndarray):
    """W profiles with a per-entry time scale sqt2 = 2 sqrt(t); shapes match."""
    xi = r / sqt2
    w1 = np.empty_like(r)
    w2 = np.empty_like(r)
    w3 = np.empty_like(r)

    small = xi < _SERIES_XI
    if np.any(small):
        z = xi[small] ** 2
        sq = sqt2[small]
        w1[small] = _polyval_ascending(_C1, z) / sq**3
        w2[small] = _polyval_ascending(_C2, z) / sq**5
        w3[small] = _polyval_ascending(_C3, z) / sq**7
    big = ~small
    if np.any(big):
        xb, rb = xi[big], r[big]
        e = _erf(xb)
        g = _TWO_OVER_SQRT_PI * np.exp(-(xb**2))
        gx = g * xb
        w1[big] = (gx - e) / rb**3
        w2[big] = (3.0 * e - 3.0 * gx - 2.0 * xb**3 * g) / rb**5
        w3[big] = (4.0 * xb**5 * g + 10.0 * xb**3 * g + 15.0 * gx - 15.0 * e) / rb**7
    return w1, w2, w3


def _polyval_ascending(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(z)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


def _validate_points(x) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if pts.shape[-1] != 3:
        raise ValueError("points must have 3 components")
    if np.any(np.all(pts == 0.0, axis=1)):
        raise ValueError("kernel is singular on the time axis x = 0")
    return pts


def oseen_tensor_batch(t: float, x) -> np.ndarray:
    """Closed-form S(t, x) for a batch of points, shape (n, 3, 3)."""
    t = _check_time(t)
    pts = _validate_points(x)
    r = np.linalg.norm(pts, axis=1)
    gam = np.asarray(heat_kernel(t, pts), dtype=float).reshape(-1)
    w1, w2, _ = _w_profiles(t, r)
    eye = np.eye(3)
    out = gam[:, None, None] * eye
    out += (1.0 / (4.0 * math.pi)) * (
        w1[:, None, None] * eye + w2[:, None, None] * pts[:, :, None] * pts[:, None, :]
    )
    return out


def oseen_grad_batch(t: float, x) -> np.ndarray:
    """Closed-form spatial gradient, shape (n, 3, 3, 3), [n, k, i, j] = d_k S_ij."""
    t = _check_time(t)
    pts = _validate_points(x)
    r = np.linalg.norm(pts, axis=1)
    gam = np.asarray(heat_kernel(t, pts), dtype=float).reshape(-1)
    _, w2, w3 = _w_profiles(t, r)
    dgam = -pts / (2.0 * t) * gam[:, None]

    eye = np.eye(3)
    xk = pts[:, :, None, None]
    xi = pts[:, None, :, None]
    xj = pts[:, None, None, :]
    third = (
        eye[None, None, :, :] * xk
        + eye[None, :, None, :] * xi
        + eye[None, :, :, None] * xj
    ) * w2[:, None, None, None]
    third += xk * xi * xj * w3[:, None, None, None]
    out = dgam[:, :, None, None] * eye[None, None, :, :]
    out += third / (4.0 * math.pi)
    return out


def oseen_dt_closed(t: float, x) -> np.ndarray:
    """Closed-form time derivative d_t S, shape (n, 3, 3).

    Follows from d_t N = -4 pi Gamma, so d_t S_ij = d_t Gamma delta_ij
    - d_i d_j Gamma, with Gaussian derivatives taken analytically.
    """
    t = _check_time(t)
    pts = _validate_points(x)
    r2 = np.einsum("ni,ni->n", pts, pts)
    gam = np.asarray(heat_kernel(t, pts), dtype=float).reshape(-1)
    dtg = gam * (r2 / (4.0 * t**2) - 1.5 / t)
    eye = np.eye(3)
    hess = gam[:, None, None] * (
        pts[:, :, None] * pts[:, None, :] / (4.0 * t**2) - eye / (2.0 * t)
    )
    return dtg[:, None, None] * eye - hess


def _brute_tensor(t: float, x: np.ndarray) -> np.ndarray:
    """Quadrature route: S = Gamma I + (1/4pi) * potential of hess(Gamma).

    The Newtonian potential of d_i d_j Gamma equals d_i d_j N, and writing it
    in spherical coordinates around x cancels the 1/|x - y| singularity
    against the volume Jacobian, leaving a smooth integrand.
    """
    t = _check_time(t)
    x = np.asarray(x, dtype=float).reshape(3)
    sq = math.sqrt(t)
    rho_max = float(np.linalg.norm(x)) + 12.0 * sq
    edges = np.concatenate(
        [np.linspace(0.0, sq, 5), geometric_edges(sq, rho_max, 1.5)[1:]]
    )
    rho, wr = panels_gl(edges, 10)
    dirs, wd = sphere_rule(24, 48)

    y = x[None, None, :] + rho[:, None, None] * dirs[None, :, :]
    yf = y.reshape(-1, 3)
    gam = np.asarray(heat_kernel(t, yf), dtype=float).reshape(-1)
    hess = gam[:, None, None] * (
        yf[:, :, None] * yf[:, None, :] / (4.0 * t**2) - np.eye(3) / (2.0 * t)
    )
    w = (wr[:, None] * rho[:, None] * wd[None, :]).reshape(-1)
    pot = np.einsum("n,nij->ij", w, hess)
    return float(heat_kernel(t, x)) * np.eye(3) + pot / (4.0 * math.pi)


def oseen_eval(t: float, x, mode: str = "erf_closed_form") -> np.ndarray:
    """Velocity kernel S(t, x) at a single point, shape (3, 3)."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    x = np.asarray(x, dtype=float).reshape(3)
    if mode == "brute_quadrature":
        return _brute_tensor(t, x)
    return oseen_tensor_batch(t, x[None, :])[0]


def pressure_kernel_q(x) -> np.ndarray:
    """Spatial factor of the pressure kernel, x / (4 pi |x|^3).

    The full kernel carries a delta(t) in time, which callers account for
    symbolically; only the spatial vector is returned.
    """
    pts = _validate_points(x)
    r = np.linalg.norm(pts, axis=1)
    out = pts / (4.0 * math.pi * r[:, None] ** 3)
    return out if out.shape[0] > 1 else out[0]


def oseen_derivative(
    t: float, x, ell: int = 0, k: int = 0, h_scale: float = 1e-3, mode: str = "erf_closed_form"
) -> np.ndarray:
    """Finite-difference derivative d_x^ell d_t^k S of the velocity kernel.

    ell in {0, 1, 2} spatial orders, k in {0, 1} time order.  ell = k = 0
    returns oseen_eval exactly.  Steps are scale-aware: spatial step
    h = h_scale * (|x| + sqrt(t)), time step h_scale * (|x| + sqrt(t))^2
    capped to keep t - h positive.  Output shape has one leading axis of
    length 3 per spatial derivative: [a, ..., i, j] = d_a ... S_ij.
    """
    t = _check_time(t)
    if ell not in (0, 1, 2) or k not in (0, 1):
        raise ValueError("supported orders: ell in {0,1,2}, k in {0,1}")
    x = np.asarray(x, dtype=float).reshape(3)
    scale = float(np.linalg.norm(x)) + math.sqrt(t)

    def base(tt, xx):
        return oseen_eval(tt, xx, mode=mode)

    if k == 1:
        ht = min(h_scale * scale**2, 0.45 * t)

        def spatial_at(tt):
            return _spatial_fd(lambda xx: base(tt, xx), x, ell, h_scale * scale)
        return (spatial_at(t + ht) - spatial_at(t - ht)) / (2.0 * ht)
    return _spatial_fd(lambda xx: base(t, xx), x, ell, h_scale * scale)


def _spatial_fd(f, x: np.ndarray, ell: int, h: float) -> np.ndarray:
    if ell == 0:
        return f(x)
    eye = np.eye(3)
    if ell == 1:
        rows = [(f(x + h * eye[a]) - f(x - h * eye[a])) / (2.0 * h) for a in range(3)]
        return np.stack(rows)
    out = np.empty((3, 3, 3, 3))
    f0 = f(x)
    for a in range(3):
        for b in range(a, 3):
            if a == b:
                val = (f(x + h * eye[a]) - 2.0 * f0 + f(x - h * eye[a])) / h**2
            else:
                val = (
                    f(x + h * (eye[a] + eye[b]))
                    - f(x + h * (eye[a] - eye[b]))
                    - f(x - h * (eye[a] - eye[b]))
                    + f(x - h * (eye[a] + eye[b]))
                ) / (4.0 * h**2)
            out[a, b] = val
            out[b, a] = val
    return out


def decay_constant(
    ell: int = 0,
    k: int = 0,
    n_t: int = 20,
    n_x: int = 20,
    t_range=(1e-2, 1e2),
    x_range=(1e-2, 1e2),
    direction=(1.0, 2.0, 2.0),
) -> float:
    """Sup of |d^ell d_t^k S| (|x| + sqrt(t))^(3 + ell + 2k) over a log grid.

    The kernel norm is rotation invariant, so a single generic direction
    suffices; the Frobenius norm is taken over all tensor slots.  Derivatives
    go through the finite-difference path so the certificate is independent
    of the closed-form gradient algebra.
    """
    d = np.asarray(direction, dtype=float)
    d /= np.linalg.norm(d)
    ts = np.geomspace(*t_range, n_t)
    rs = np.geomspace(*x_range, n_x)
    power = 3 + ell + 2 * k
    best = 0.0
    for t in ts:
        for r in rs:
            val = oseen_derivative(t, r * d, ell=ell, k=k)
            best = max(best, float(np.sqrt(np.sum(val**2))) * (r + math.sqrt(t)) ** power)
    return best
