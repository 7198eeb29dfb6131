"""Region functions, potential energies, and the regional feedback vectors.

Four region families drive the controller:
    * joint-space repulsion regions (quadratic forms around configurations to
      avoid, each wrapped by a larger reference region that decelerates the
      arm before it reaches the inner boundary),
    * a Cartesian box that attracts the end-effector translation,
    * an orientation tolerance cone around a goal quaternion,
    * a vision-space ellipse that pulls the tracked feature to the detected
      target pixel once the feature is inside it.

Each potential is a clamped quadratic; its feedback vector is the exact
gradient wherever the potential is differentiable, and zero on the clamp set.
The orientation gradient comes in two flavors: the analytic path
differentiates the potential through the quaternion parameterization
(P_o -> p -> r_o chain), while the geometric path scales the error rotation
vector directly. The two agree in descent direction but not numerically.
"""

from dataclasses import dataclass, field

import numpy as np

from .rotations import quat_conj, quat_log, quat_mul, quat_normalize, rotation_jacobian

ANGLE_EPS = 1e-6  # rad; below this the analytic orientation path is refused


class SmallAngleError(RuntimeError):
    """Analytic orientation gradient undefined near zero rotation; use geometric."""


@dataclass(frozen=True)
class JointRegion:
    """Quadratic-form repulsion region over a subset of joints.

    f(q) = sum_j coeffs[j] * (q[idx[j]] - center[j])^2 - radius^2 <= 0 is the
    inner region; the reference region uses radius_ref > radius.
    """

    joint_indices: tuple
    center: np.ndarray
    radius: float
    radius_ref: float
    coeffs: np.ndarray = None
    k_q: float = 10.0
    k_r: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "joint_indices", tuple(int(i) for i in self.joint_indices))
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", center)
        coeffs = self.coeffs
        if coeffs is None:
            coeffs = np.ones_like(center)
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if coeffs.shape != center.shape or np.any(coeffs <= 0):
            raise ValueError("coeffs must be positive and match center length")
        object.__setattr__(self, "coeffs", coeffs)
        if len(self.joint_indices) != center.size:
            raise ValueError("joint_indices and center length mismatch")
        if not (self.radius_ref > self.radius > 0):
            raise ValueError("need radius_ref > radius > 0")
        if self.k_q <= 0 or self.k_r <= 0:
            raise ValueError("gains must be positive")

    def values(self, q):
        s = float(np.sum(self.coeffs * (q[list(self.joint_indices)] - self.center) ** 2))
        return s - self.radius**2, s - self.radius_ref**2


@dataclass(frozen=True)
class CartesianBoxRegion:
    r_c: np.ndarray
    c: np.ndarray  # half sizes
    k_c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r_c", np.asarray(self.r_c, dtype=float))
        c = np.asarray(self.c, dtype=float)
        if np.any(c <= 0):
            raise ValueError("half sizes must be strictly positive")
        object.__setattr__(self, "c", c)
        k_c = np.asarray(self.k_c, dtype=float)
        if np.any(k_c < 0):
            raise ValueError("gains must be nonnegative")
        object.__setattr__(self, "k_c", k_c)

    def values(self, r_t):
        return ((np.asarray(r_t) - self.r_c) / self.c) ** 2 - 1.0


@dataclass(frozen=True)
class OrientationConeRegion:
    p_g: np.ndarray
    alpha_o: float = 15.0
    k_o: float = 1.0

    def __post_init__(self):
        if self.alpha_o <= 0 or self.k_o <= 0:
            raise ValueError("alpha_o and k_o must be positive")
        object.__setattr__(self, "p_g", quat_normalize(np.asarray(self.p_g, dtype=float)))


@dataclass(frozen=True)
class VisionEllipseRegion:
    x_d: np.ndarray
    b: np.ndarray
    k_v: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "x_d", np.asarray(self.x_d, dtype=float))
        b = np.asarray(self.b, dtype=float)
        if np.any(b <= 0):
            raise ValueError("ellipse half sizes must be positive")
        object.__setattr__(self, "b", b)
        if self.k_v <= 0:
            raise ValueError("k_v must be positive")

    def value(self, x):
        d = (np.asarray(x) - self.x_d) / self.b
        return float(d @ d) - 1.0


@dataclass
class RegionSet:
    joint_regions: list
    box: CartesianBoxRegion
    cone: OrientationConeRegion
    vision: VisionEllipseRegion


# ---------------------------------------------------------------------------
# joint space


def joint_potential(regions, q):
    q = np.asarray(q, dtype=float)
    P = 0.0
    for reg in regions:
        f, f_ref = reg.values(q)
        P += 0.5 * reg.k_q * min(0.0, f) ** 2 + 0.5 * reg.k_r * min(0.0, f_ref) ** 2
    return P


def joint_feedback(regions, q):
    """xi_q = dP_s/dq; zero outside every reference region."""
    q = np.asarray(q, dtype=float)
    xi = np.zeros_like(q)
    for reg in regions:
        f, f_ref = reg.values(q)
        w = reg.k_q * min(0.0, f) + reg.k_r * min(0.0, f_ref)
        if w != 0.0:
            idx = list(reg.joint_indices)
            xi[idx] += w * 2.0 * reg.coeffs * (q[idx] - reg.center)
    return xi


# ---------------------------------------------------------------------------
# Cartesian translation


def box_potential(box, r_t):
    return float(np.sum(0.5 * box.k_c * np.maximum(0.0, box.values(r_t)) ** 2))


def box_feedback(box, r_t):
    """dP_t/dr_t; zero inside the box, quadratic growth outside."""
    r_t = np.asarray(r_t, dtype=float)
    f = box.values(r_t)
    return box.k_c * np.maximum(0.0, f) * 2.0 * (r_t - box.r_c) / box.c**2


# ---------------------------------------------------------------------------
# orientation


def quaternion_log(p):
    """Logarithm of a unit quaternion (renormalized internally)."""
    return quat_log(quat_normalize(p))


def _error_quat(cone, p):
    return quat_mul(quat_normalize(p), quat_conj(cone.p_g))


def orientation_region_value(cone, p):
    """f_o = alpha_o * arccos(v_e) * [|u_e| > 0] - 1; <= 0 inside the cone."""
    e = _error_quat(cone, p)
    if np.linalg.norm(e[1:]) <= 1e-12:
        return -1.0
    return cone.alpha_o * float(np.arccos(np.clip(e[0], -1.0, 1.0))) - 1.0


def orientation_potential(cone, p):
    return 0.5 * cone.k_o * max(0.0, orientation_region_value(cone, p)) ** 2


def orientation_feedback_analytic(cone, p, r_o):
    """dP_o/dr_o through the quaternion chain dP_o/dp * dp/dr_o.

    dP_o/dp = -(alpha_o k_o max(0,f_o)/|u_e|) * (v_g, -u_g) with (v_g, u_g)
    the components of the inverse goal quaternion, and dp/dr_o the 4x3
    rotation Jacobian. Refuses |r_o| <= ANGLE_EPS where that Jacobian's
    closed form degenerates; callers fall back to the geometric path there.
    """
    r_o = np.asarray(r_o, dtype=float)
    if np.linalg.norm(r_o) <= ANGLE_EPS:
        raise SmallAngleError("analytic orientation path needs |r_o| > angle_eps")
    f_o = orientation_region_value(cone, p)
    if f_o <= 0.0:
        return np.zeros(3)
    e = _error_quat(cone, p)
    u_norm = np.linalg.norm(e[1:])
    if u_norm <= 1e-12:
        return np.zeros(3)
    g_inv = quat_conj(quat_normalize(cone.p_g))
    dve_dp = np.concatenate(([g_inv[0]], -g_inv[1:]))
    dPo_dp = -(cone.alpha_o * cone.k_o * max(0.0, f_o) / u_norm) * dve_dp
    return rotation_jacobian(r_o).T @ dPo_dp


def orientation_feedback_geometric(cone, p):
    """alpha_o k_o max(0,f_o) r_e with r_e the error rotation vector.

    A descent direction for P_o, not its exact gradient; selected when the
    controller runs with the geometric Jacobian flavor.
    """
    f_o = orientation_region_value(cone, p)
    if f_o <= 0.0:
        return np.zeros(3)
    r_e = 2.0 * quat_log(_error_quat(cone, p))
    return cone.alpha_o * cone.k_o * max(0.0, f_o) * r_e


def cartesian_feedback(box, cone, pose, mode="analytic"):
    """xi_r: stacked translation and orientation feedback (length task_dim).

    mode must match the controller's Jacobian flavor. Planar poses carry no
    orientation region; their third component is zero.
    """
    if mode not in ("analytic", "geometric"):
        raise ValueError("mode must be 'analytic' or 'geometric'")
    trans = box_feedback(box, pose.r_t)
    if pose.task_dim == 3:
        return np.array([trans[0], trans[1], 0.0])
    if mode == "analytic":
        rot = orientation_feedback_analytic(cone, pose.p, pose.r_o)
    else:
        rot = orientation_feedback_geometric(cone, pose.p)
    return np.concatenate([trans, rot])


# ---------------------------------------------------------------------------
# vision space


def vision_potential(region, x, visible):
    if not visible:
        return 0.5 * region.k_v  # plateau value outside the region
    f_v = region.value(x)
    return 0.5 * region.k_v * (1.0 - min(0.0, f_v) ** 2)


def vision_feedback(region, x, visible):
    """xi_x = dP_v/dx, active only when visible and strictly inside the ellipse."""
    if not visible:
        return np.zeros(2)
    x = np.asarray(x, dtype=float)
    f_v = region.value(x)
    if f_v >= 0.0:
        return np.zeros(2)
    return -region.k_v * min(0.0, f_v) * 2.0 * (x - region.x_d) / region.b**2
