"""Exact point-force (Landau) solutions of the stationary Navier-Stokes system.

The solution family is axisymmetric about axis = b/|b| and (-1)-homogeneous:
in spherical coordinates with polar angle measured from the axis,

    U = (2/rho) [ (A^2 - 1)/(A - cos phi)^2 - 1 ] e_rho
        - (2 sin phi / (rho (A - cos phi))) e_phi,

with profile parameter A in (1, inf].  The force magnitude is

    |b| = 16 pi ( A + A^2/2 log((A-1)/(A+1)) + 4A / (3(A^2-1)) ),

strictly decreasing in A, so A <-> |b| is a bijection.  The pressure partner
(derived once, gated by the gradient-consistency tests) is

    p = 4 (A c - 1) / (r^2 (A - c)^2),   c = cos phi,

normalized so p -> 0 as |x| -> infinity.  The pair solves
-Delta U + (U.grad)U + grad p = b delta_0 in the distributional sense; away
from the origin both residuals vanish.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np

from .fields import FieldHandle, RadialSphericalGrid, fd_derivative

__all__ = [
    "LandauSolution",
    "b_of_A",
    "a_of_b",
    "db_dA",
    "eval_velocity",
    "eval_velocity_gradient",
    "eval_pressure",
    "landau_residual",
    "velocity_handle",
    "pressure_handle",
    "A_INFINITY",
]

A_INFINITY = math.inf

# Series branch: b_of_A = 16 pi sum_{k>=1} (4/3 - 1/(2k+1)) A^{1-2k}.  The
# direct formula loses ~A^2 eps to cancellation in A + (A^2/2) log(...), so the
# series takes over where its truncation is already below machine precision.
_SERIES_SWITCH_A = 20.0
_SERIES_TERMS = 14


def b_of_A(A: float) -> float:
    """Force magnitude |b| as a function of the profile parameter A > 1."""
    A = float(A)
    if not A > 1.0:
        raise ValueError(f"need A > 1, got {A}")
    if math.isinf(A):
        return 0.0
    if A >= _SERIES_SWITCH_A:
        ks = np.arange(1, _SERIES_TERMS + 1)
        coeff = 4.0 / 3.0 - 1.0 / (2.0 * ks + 1.0)
        return float(16.0 * math.pi * np.sum(coeff * A ** (1.0 - 2.0 * ks)))
    L = math.log1p(-2.0 / (A + 1.0))  # log((A-1)/(A+1)) without forming the ratio
    return 16.0 * math.pi * (A + 0.5 * A * A * L + 4.0 * A / (3.0 * (A * A - 1.0)))


def db_dA(A: float) -> float:
    """Derivative of b_of_A, used for the Newton polish of a_of_b."""
    A = float(A)
    if A >= _SERIES_SWITCH_A:
        ks = np.arange(1, _SERIES_TERMS + 1)
        coeff = (4.0 / 3.0 - 1.0 / (2.0 * ks + 1.0)) * (1.0 - 2.0 * ks)
        return float(16.0 * math.pi * np.sum(coeff * A ** (-2.0 * ks)))
    L = math.log1p(-2.0 / (A + 1.0))
    return 16.0 * math.pi * (
        1.0 + A * L + A * A / (A * A - 1.0) - (4.0 / 3.0) * (A * A + 1.0) / (A * A - 1.0) ** 2
    )


def a_of_b(mag_b: float, tol: float = 1e-12) -> float:
    """Invert b_of_A: the unique A in (1, inf] with b_of_A(A) = mag_b.

    Bisection on the monotone formula (bracket [1 + 1e-12, 1e12]) followed by
    one Newton polish; mag_b = 0 maps to the infinity sentinel.
    """
    if tol <= 0.0:
        raise ValueError("need tol > 0")
    mag_b = float(mag_b)
    if mag_b < 0.0:
        raise ValueError("need mag_b >= 0")
    if mag_b == 0.0:
        return A_INFINITY
    lo, hi = 1.0 + 1e-12, 1e12
    if mag_b >= b_of_A(lo):
        return lo
    for _ in range(60):
        mid = math.sqrt(lo * hi)  # geometric bisection suits the huge bracket
        if b_of_A(mid) > mag_b:
            lo = mid
        else:
            hi = mid
    A = 0.5 * (lo + hi)
    step = math.inf
    for _ in range(4):
        step = (b_of_A(A) - mag_b) / db_dA(A)
        A_next = A - step
        if A_next > 1.0:
            A = A_next
    # Converged when the residual meets tol or Newton has hit the fp floor of
    # b_of_A itself (steps below ~A eps cannot improve further).
    if abs(b_of_A(A) - mag_b) > tol * max(1.0, mag_b) and abs(step) > 64.0 * np.finfo(float).eps * A:
        raise ArithmeticError(f"inversion stalled at A={A}")
    return A


@dataclasses.dataclass(frozen=True)
class LandauSolution:
    """Immutable solution descriptor: force vector b, parameter A, axis b/|b|."""

    b: np.ndarray
    A: float
    axis: Optional[np.ndarray]
    pressure_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).reshape(3))
        if self.axis is not None:
            axis = np.asarray(self.axis, dtype=float).reshape(3)
            object.__setattr__(self, "axis", axis / np.linalg.norm(axis))
        mag = float(np.linalg.norm(self.b))
        if mag > 0.0:
            rel = abs(b_of_A(self.A) - mag) / max(1.0, mag)
            if rel > 1e-10:
                raise ValueError(f"A and |b| inconsistent (relative defect {rel:.2e})")

    @staticmethod
    def from_A(A: float, axis=(0.0, 0.0, 1.0)) -> "LandauSolution":
        axis = np.asarray(axis, dtype=float).reshape(3)
        axis = axis / np.linalg.norm(axis)
        return LandauSolution(b=b_of_A(A) * axis, A=float(A), axis=axis)

    @staticmethod
    def from_b(b, tol: float = 1e-12) -> "LandauSolution":
        b = np.asarray(b, dtype=float).reshape(3)
        mag = float(np.linalg.norm(b))
        if mag == 0.0:
            return LandauSolution(b=np.zeros(3), A=A_INFINITY, axis=None)
        return LandauSolution(b=b, A=a_of_b(mag, tol), axis=b / mag)

    @property
    def is_zero(self) -> bool:
        return self.axis is None or math.isinf(self.A)


def _frame(sol: LandauSolution, x: np.ndarray):
    """Common geometric quantities: r, cos(angle to axis), unit radial."""
    r = np.sqrt(np.sum(x * x, axis=1))
    if np.any(r == 0.0):
        raise ZeroDivisionError("Landau fields are singular at the origin")
    xhat = x / r[:, None]
    c = xhat @ sol.axis
    return r, xhat, c


def eval_velocity(sol: LandauSolution, x: np.ndarray) -> np.ndarray:
    """Velocity at points x of shape (N, 3), in Cartesian components.

    Equivalent Cartesian form of the spherical-frame formula:
    U = (2/r) [beta(c) xhat + gamma(c) a] with a the axis,
    beta = (A^2-1)/(A-c)^2 - 1 - c/(A-c), gamma = 1/(A-c).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if sol.is_zero:
        return np.zeros_like(x)
    r, xhat, c = _frame(sol, x)
    A = sol.A
    d = A - c
    beta = (A * A - 1.0) / d**2 - 1.0 - c / d
    gamma = 1.0 / d
    return (2.0 / r)[:, None] * (beta[:, None] * xhat + gamma[:, None] * sol.axis)


def eval_velocity_gradient(sol: LandauSolution, x: np.ndarray) -> np.ndarray:
    """Analytic gradient, shape (N, 3, 3) with [n, i, j] = d_i U_j."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if sol.is_zero:
        return np.zeros((x.shape[0], 3, 3))
    r, xhat, c = _frame(sol, x)
    A = sol.A
    a = sol.axis
    d = A - c
    beta = (A * A - 1.0) / d**2 - 1.0 - c / d
    gamma = 1.0 / d
    dbeta = 2.0 * (A * A - 1.0) / d**3 - A / d**2
    dgamma = 1.0 / d**2
    # c = (a.x)/r, d_j c = (a_j - c x_j / r)/r
    cj = (a[None, :] - c[:, None] * xhat) / r[:, None]
    delta = np.eye(3)
    term1 = 2.0 * dbeta[:, None, None] * cj[:, :, None] * xhat[:, None, :] / r[:, None, None]
    term2 = 2.0 * beta[:, None, None] * (
        delta[None, :, :] - 2.0 * xhat[:, :, None] * xhat[:, None, :]
    ) / r[:, None, None] ** 2
    term3 = 2.0 * dgamma[:, None, None] * cj[:, :, None] * a[None, None, :] / r[:, None, None]
    term4 = -2.0 * gamma[:, None, None] * a[None, None, :] * xhat[:, :, None] / r[:, None, None] ** 2
    return term1 + term2 + term3 + term4


def eval_pressure(sol: LandauSolution, x: np.ndarray) -> np.ndarray:
    """Pressure at points x, normalized to vanish at infinity."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if sol.is_zero:
        return np.zeros(x.shape[0]) + sol.pressure_offset
    r, _, c = _frame(sol, x)
    A = sol.A
    return 4.0 * (A * c - 1.0) / (r**2 * (A - c) ** 2) + sol.pressure_offset


def velocity_handle(sol: LandauSolution) -> FieldHandle:
    return FieldHandle(
        arity="vector3",
        domain="space",
        eval=lambda pts: eval_velocity(sol, pts),
        analytic_gradient=lambda pts: eval_velocity_gradient(sol, pts),
    )


def pressure_handle(sol: LandauSolution) -> FieldHandle:
    return FieldHandle(arity="scalar", domain="space", eval=lambda pts: eval_pressure(sol, pts))


def momentum_rhs(sol: LandauSolution, x: np.ndarray, h: float = None) -> np.ndarray:
    """(Delta U - (U.grad)U)(x), the gradient of p.

    The Laplacian uses Richardson-extrapolated central differences (fourth
    order): plain second-order stencils cannot reach the 1e-8 level the
    path-independence oracle demands (roundoff eps/h^2 vs truncation h^2 meet
    near 5e-8).
    """
    x = np.asarray(x, dtype=float).reshape(3)
    u = velocity_handle(sol)
    if h is None:
        h = 2e-3 * max(1.0, float(np.linalg.norm(x)))
    lap_h = fd_derivative(u, "laplacian", x, h=h)
    lap_h2 = fd_derivative(u, "laplacian", x, h=0.5 * h)
    lap = (4.0 * lap_h2 - lap_h) / 3.0
    grad = eval_velocity_gradient(sol, x[None, :])[0]
    uval = eval_velocity(sol, x[None, :])[0]
    advect = uval @ grad  # (u.grad)u_j = u_i d_i u_j
    return lap - advect


def landau_residual(sol: LandauSolution, grid: RadialSphericalGrid, h_scale: float = 1e-3):
    """Scale-uniform PDE residuals over the grid.

    Returns (momentum_residual, divergence_residual): the grid maxima of
    |-Delta U + (U.grad)U + grad p| |x|^3 and |div U| |x|^2.  Derivatives by
    central differences with step h = h_scale * |x| (the fields are
    homogeneous, so a proportional step keeps the check scale-uniform).
    """
    if sol.is_zero:
        return 0.0, 0.0
    pts = grid.nodes()
    r = np.sqrt(np.sum(pts**2, axis=1))
    h = (h_scale * r)[:, None]
    u0 = eval_velocity(sol, pts)
    lap = np.zeros_like(pts)
    divu = np.zeros(pts.shape[0])
    gradp = np.zeros_like(pts)
    for i in range(3):
        shift = np.zeros(3)
        shift[i] = 1.0
        xp = pts + h * shift
        xm = pts - h * shift
        up = eval_velocity(sol, xp)
        um = eval_velocity(sol, xm)
        lap += (up + um - 2.0 * u0) / h**2
        divu += (up[:, i] - um[:, i]) / (2.0 * h[:, 0])
        gradp[:, i] = (eval_pressure(sol, xp) - eval_pressure(sol, xm)) / (2.0 * h[:, 0])
    grad = eval_velocity_gradient(sol, pts)
    advect = np.einsum("ni,nij->nj", u0, grad)
    resid = -lap + advect + gradp
    mom = float(np.max(np.linalg.norm(resid, axis=1) * r**3))
    div = float(np.max(np.abs(divu) * r**2))
    return mom, div
