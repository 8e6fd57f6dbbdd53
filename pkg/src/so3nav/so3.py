"""SO(3)/so(3) primitives: wedge/vee maps, Rodrigues exponential and logarithm,
rotation energy, symmetric 3x3 eigenvalues, and one-step geometric integrators.

All rotations are 3x3 numpy arrays, all tangent vectors are length-3 arrays.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from .errors import NotSkewSymmetric, NotSymmetric

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])
I3 = np.eye(3)

# below this angle the sin/cos coefficient ratios switch to their Taylor series
SMALL_ANGLE = 1e-8
# above pi - this margin the logarithm switches to the symmetric-part branch
PI_BRANCH_MARGIN = 1e-6

ROTATION_TOL = 1e-9
SKEW_TOL = 1e-6
SYM_TOL = 1e-9


class AxisAngle(NamedTuple):
    axis: np.ndarray
    angle: float


def hat(v) -> np.ndarray:
    """Map a 3-vector to the skew-symmetric matrix with hat(v) @ w = v x w."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m) -> np.ndarray:
    """Inverse of hat. Raises NotSkewSymmetric if m is not skew within tolerance."""
    m = np.asarray(m, dtype=float)
    if np.linalg.norm(m + m.T) > SKEW_TOL:
        raise NotSkewSymmetric(f"matrix is not skew-symmetric: ||m + m^T|| = {np.linalg.norm(m + m.T):.3e}")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def _vee_unchecked(m) -> np.ndarray:
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def sk(m) -> np.ndarray:
    """Skew-symmetric part (m - m^T)/2."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m - m.T)


def sym(m) -> np.ndarray:
    """Symmetric part (m + m^T)/2."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def exp_so3(v) -> np.ndarray:
    """Rodrigues formula exp(hat(v)) = I + hat(v) sin(t)/t + hat(v)^2 (1-cos(t))/t^2.

    Uses second-order Taylor coefficients below the small-angle threshold.
    """
    v = np.asarray(v, dtype=float)
    theta = math.sqrt(float(v @ v))
    k = hat(v)
    if theta < SMALL_ANGLE:
        a = 1.0 - theta * theta / 6.0
        b = 0.5 - theta * theta / 24.0
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / (theta * theta)
    return I3 + a * k + b * (k @ k)


def log_so3(r) -> np.ndarray:
    """Rotation logarithm as a vector of length theta in [0, pi].

    Near theta = pi the axis is recovered from the diagonal of sym(r); the sign
    tie at exactly pi is broken by making the first nonzero component positive.
    """
    r = np.asarray(r, dtype=float)
    cos_theta = max(-1.0, min(1.0, 0.5 * (np.trace(r) - 1.0)))
    s_vec = _vee_unchecked(sk(r))  # equals axis * sin(theta)
    sin_theta = float(np.linalg.norm(s_vec))
    theta = math.atan2(sin_theta, cos_theta)
    if theta < SMALL_ANGLE:
        return s_vec
    if theta < math.pi - PI_BRANCH_MARGIN:
        return s_vec * (theta / sin_theta)
    # pi branch: sym(r) = I cos + (1 - cos) axis axis^T
    d = np.diag(sym(r))
    k = int(np.argmax(d))
    one_minus_cos = 1.0 - cos_theta
    axis = np.empty(3)
    axis[k] = math.sqrt(max(0.0, (d[k] - cos_theta) / one_minus_cos))
    sym_r = sym(r)
    for j in range(3):
        if j != k:
            axis[j] = sym_r[j, k] / (axis[k] * one_minus_cos)
    axis /= np.linalg.norm(axis)
    if sin_theta > 1e-12:
        if float(axis @ s_vec) < 0.0:
            axis = -axis
    else:
        for c in axis:
            if c != 0.0:
                if c < 0.0:
                    axis = -axis
                break
    return axis * theta


def axis_angle(r) -> AxisAngle:
    """Axis-angle of a rotation; returns (e_3, 0) for the identity."""
    v = log_so3(r)
    theta = float(np.linalg.norm(v))
    if theta < SMALL_ANGLE:
        return AxisAngle(E3.copy(), 0.0)
    return AxisAngle(v / theta, theta)


def phi(r) -> float:
    """Rotation energy phi(R) = tr(I - R)/2, in [0, 2], zero only at identity."""
    r = np.asarray(r, dtype=float)
    return 0.5 * (3.0 - float(r[0, 0] + r[1, 1] + r[2, 2]))


def det3(m) -> float:
    """Closed-form 3x3 determinant."""
    return float(
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )


def lambda_min_sym3(m) -> float:
    """Smallest eigenvalue of a symmetric 3x3 matrix, by the closed-form
    trigonometric eigensolve. Raises NotSymmetric for asymmetric input."""
    m = np.asarray(m, dtype=float)
    if np.linalg.norm(m - m.T) > SYM_TOL * max(1.0, np.linalg.norm(m)):
        raise NotSymmetric("matrix is not symmetric within tolerance")
    return _lambda_min_sym3_unchecked(m)


def _lambda_min_sym3_unchecked(m: np.ndarray) -> float:
    p1 = m[0, 1] ** 2 + m[0, 2] ** 2 + m[1, 2] ** 2
    if p1 == 0.0:
        return float(min(m[0, 0], m[1, 1], m[2, 2]))
    q = float(m[0, 0] + m[1, 1] + m[2, 2]) / 3.0
    p2 = (m[0, 0] - q) ** 2 + (m[1, 1] - q) ** 2 + (m[2, 2] - q) ** 2 + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
    b = (m - q * I3) / p
    det_b = (
        b[0, 0] * (b[1, 1] * b[2, 2] - b[1, 2] * b[2, 1])
        - b[0, 1] * (b[1, 0] * b[2, 2] - b[1, 2] * b[2, 0])
        + b[0, 2] * (b[1, 0] * b[2, 1] - b[1, 1] * b[2, 0])
    )
    rr = max(-1.0, min(1.0, det_b / 2.0))
    angle = math.acos(rr) / 3.0
    # eigenvalues are q + 2 p cos(angle + 2 pi k / 3); k = 1 gives the smallest
    return q + 2.0 * p * math.cos(angle + 2.0 * math.pi / 3.0)


def normalize_rotation(r) -> np.ndarray:
    """One Newton step of the symmetric polar projection, R <- R (3I - R^T R)/2.

    Cheap re-orthonormalization that preserves the determinant sign.
    """
    r = np.asarray(r, dtype=float)
    return r @ (1.5 * I3 - 0.5 * (r.T @ r))


def check_rotation(r, tol: float = ROTATION_TOL) -> None:
    """Raise ValueError if r is not in SO(3) within tol."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {r.shape}")
    err = np.linalg.norm(r.T @ r - I3)
    if err > tol:
        raise ValueError(f"matrix is not orthonormal: ||R^T R - I|| = {err:.3e}")
    if abs(det3(r) - 1.0) > tol:
        raise ValueError(f"matrix has det {det3(r):.6f}, expected +1")


def step_rotation(r, omega_body, dt: float) -> np.ndarray:
    """Lie-Euler step of R' = R hat(omega) in the body frame, re-orthonormalized."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return normalize_rotation(np.asarray(r, dtype=float) @ exp_so3(np.asarray(omega_body, dtype=float) * dt))


def step_rotation_spatial(r, omega_spatial, dt: float) -> np.ndarray:
    """Lie-Euler step of R' = hat(omega) R in the spatial frame, re-orthonormalized."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return normalize_rotation(exp_so3(np.asarray(omega_spatial, dtype=float) * dt) @ np.asarray(r, dtype=float))


def integrate_constant(r, omega_body, dt: float, steps: int) -> np.ndarray:
    """Apply `steps` Lie-Euler body-frame steps with a constant angular velocity.

    Equivalent to repeated step_rotation calls; the per-step exponential is
    hoisted out of the loop because the velocity does not change.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    r = np.asarray(r, dtype=float).copy()
    r_step = exp_so3(np.asarray(omega_body, dtype=float) * dt)
    for _ in range(steps):
        m = r @ r_step
        r = m @ (1.5 * I3 - 0.5 * (m.T @ m))
    return r


def dexpinv_body(u, w) -> np.ndarray:
    """Truncated inverse right-trivialized differential of exp for R' = R hat(omega)."""
    uxw = np.cross(u, w)
    return w + 0.5 * uxw + (1.0 / 12.0) * np.cross(u, uxw)


def dexpinv_spatial(u, w) -> np.ndarray:
    """Truncated inverse left-trivialized differential of exp for R' = hat(omega) R."""
    uxw = np.cross(u, w)
    return w - 0.5 * uxw + (1.0 / 12.0) * np.cross(u, uxw)


def step_rotation_rkmk4(
    r,
    omega_fn: Callable[[np.ndarray, float], np.ndarray],
    t: float,
    dt: float,
) -> np.ndarray:
    """One 4th-order Runge-Kutta-Munthe-Kaas step of R' = R hat(omega(R, t))."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    r = np.asarray(r, dtype=float)
    k1 = np.asarray(omega_fn(r, t), dtype=float)
    u2 = 0.5 * dt * k1
    k2 = dexpinv_body(u2, np.asarray(omega_fn(r @ exp_so3(u2), t + 0.5 * dt), dtype=float))
    u3 = 0.5 * dt * k2
    k3 = dexpinv_body(u3, np.asarray(omega_fn(r @ exp_so3(u3), t + 0.5 * dt), dtype=float))
    u4 = dt * k3
    k4 = dexpinv_body(u4, np.asarray(omega_fn(r @ exp_so3(u4), t + dt), dtype=float))
    u = (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return normalize_rotation(r @ exp_so3(u))
