"""Quaternion and rotation-vector utilities.

Conventions:
    * quaternions are scalar-first numpy arrays (v, ux, uy, uz), Hamilton
      product convention
    * rotation vectors encode axis * angle in radians; the unit quaternion of
      a rotation vector r is (cos(phi/2), sin(phi/2) * r/phi) with phi = |r|
    * world-frame angular velocity relates to the rotation-vector rate via
      omega = Jl(r) @ r_dot with Jl the left Jacobian of SO(3)
"""

import numpy as np

_EPS = 1e-12
_SMALL_ANGLE = 1e-7


def quat_mul(a, b):
    """Hamilton product a * b (components spelled out; this is a hot path)."""
    av, ax, ay, az = a
    bv, bx, by, bz = b
    out = np.empty(4)
    out[0] = av * bv - ax * bx - ay * by - az * bz
    out[1] = av * bx + ax * bv + ay * bz - az * by
    out[2] = av * by - ax * bz + ay * bv + az * bx
    out[3] = av * bz + ax * by - ay * bx + az * bv
    return out


def quat_conj(p):
    """Conjugate (= inverse for a unit quaternion)."""
    return np.concatenate(([p[0]], -p[1:]))


def quat_normalize(p):
    n = np.linalg.norm(p)
    if n < _EPS:
        raise ValueError("cannot normalize a zero quaternion")
    return np.asarray(p, dtype=float) / n


def quat_canonical(p):
    """Flip sign so the scalar part is nonnegative (same rotation)."""
    if p[0] < 0.0 or (p[0] == 0.0 and _first_nonzero_negative(p[1:])):
        return -p
    return p


def _first_nonzero_negative(u):
    for x in u:
        if x != 0.0:
            return x < 0.0
    return False


def quat_log(p):
    """Unit-quaternion logarithm: arccos(v) * u/|u|, zero when |u| = 0.

    Evaluated as atan2(|u|, v), identical on the unit sphere but stable
    where arccos loses precision (v near 1).
    """
    p = np.asarray(p, dtype=float)
    u = p[1:]
    un = np.linalg.norm(u)
    if un <= _EPS:
        return np.zeros(3)
    return np.arctan2(un, p[0]) * u / un


def quat_from_rotvec(r):
    """Unit quaternion of a rotation vector (axis * angle)."""
    r = np.asarray(r, dtype=float)
    phi = np.linalg.norm(r)
    if phi < _SMALL_ANGLE:
        # second-order series of sin(phi/2)/phi keeps this smooth at zero
        s = 0.5 - phi * phi / 48.0
        return quat_normalize(np.concatenate(([np.cos(phi / 2.0)], s * r)))
    return np.concatenate(([np.cos(phi / 2.0)], np.sin(phi / 2.0) * r / phi))


def rotvec_from_quat(p):
    """Rotation vector of a unit quaternion (angle in [0, 2*pi))."""
    return 2.0 * quat_log(p)


def quat_to_matrix(p):
    """Rotation matrix of a unit quaternion."""
    v, x, y, z = p
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - v * z), 2 * (x * z + v * y)],
            [2 * (x * y + v * z), 1 - 2 * (x * x + z * z), 2 * (y * z - v * x)],
            [2 * (x * z - v * y), 2 * (y * z + v * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotvec_to_matrix(r):
    return quat_to_matrix(quat_from_rotvec(r))


def skew(w):
    return np.array(
        [
            [0.0, -w[2], w[1]],
            [w[2], 0.0, -w[0]],
            [-w[1], w[0], 0.0],
        ]
    )


def rotation_jacobian(r_o):
    """J_rot = d p / d r_o (4x3) of the rotation-vector-to-quaternion map.

    Three element types appear: the scalar row A_j = -(r_j / 2phi) sin(phi/2),
    diagonal entries B and off-diagonal entries C of the vector block, which
    together are s(phi) I3 + s'(phi)/phi * outer(r, r) with s = sin(phi/2)/phi.
    Requires |r_o| bounded away from zero (the map is still smooth there but
    this closed form divides by phi); callers gate on angle_eps.
    """
    r = np.asarray(r_o, dtype=float)
    phi = np.linalg.norm(r)
    if phi <= _EPS:
        raise ValueError("rotation_jacobian needs |r_o| > 0")
    half = 0.5 * phi
    s, c = np.sin(half), np.cos(half)
    J = np.empty((4, 3))
    J[0, :] = -(r / (2.0 * phi)) * s
    J[1:, :] = (s / phi) * np.eye(3) + (c / (2.0 * phi * phi) - s / phi**3) * np.outer(r, r)
    return J


def so3_left_jacobian(r):
    """Jl(r) with omega_world = Jl(r) @ r_dot."""
    r = np.asarray(r, dtype=float)
    phi = np.linalg.norm(r)
    K = skew(r)
    if phi < _SMALL_ANGLE:
        return np.eye(3) + 0.5 * K + K @ K / 6.0
    return (
        np.eye(3)
        + ((1.0 - np.cos(phi)) / phi**2) * K
        + ((phi - np.sin(phi)) / phi**3) * (K @ K)
    )


def so3_left_jacobian_inv(r):
    """Inverse of the left Jacobian: r_dot = Jl_inv(r) @ omega_world."""
    r = np.asarray(r, dtype=float)
    phi = np.linalg.norm(r)
    K = skew(r)
    if phi < _SMALL_ANGLE:
        return np.eye(3) - 0.5 * K + K @ K / 12.0
    a = 1.0 / phi**2 - (1.0 + np.cos(phi)) / (2.0 * phi * np.sin(phi))
    return np.eye(3) - 0.5 * K + a * (K @ K)
