"""Serial-chain kinematics: forward map, Jacobians, pseudo-inverse, null projector.

A robot is an ordered chain of revolute joints. Joint i contributes the local
transform Trans(offset_i) * Rot(axis_i, q_i); the end effector sits at a fixed
tool offset after the last joint. The task-space pose is either the full
spatial tuple (translation + rotation vector, task_dim = 6) or the planar
tuple (x, y, yaw, task_dim = 3) for flat test rigs built from z-axis joints.
"""

from dataclasses import dataclass, field

import numpy as np

from .rotations import (
    quat_canonical,
    quat_from_rotvec,
    quat_mul,
    quat_normalize,
    quat_to_matrix,
    rotvec_from_quat,
    so3_left_jacobian_inv,
)

DEFAULT_RANK_TOL = 1e-8


class SingularityError(RuntimeError):
    """Raised when a Jacobian loses rank; carries the smallest singular value."""

    def __init__(self, sigma_min):
        super().__init__(f"Jacobian rank-deficient (sigma_min = {sigma_min:.3e})")
        self.sigma_min = float(sigma_min)


@dataclass(frozen=True)
class Joint:
    """One revolute joint: rotation axis (unit, local frame) after a fixed offset."""

    axis: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        n = np.linalg.norm(axis)
        if not np.isfinite(n) or n < 1e-12:
            raise ValueError("joint axis must be a nonzero finite vector")
        object.__setattr__(self, "axis", axis / n)
        offset = np.asarray(self.offset, dtype=float)
        if offset.shape != (3,) or not np.all(np.isfinite(offset)):
            raise ValueError("joint offset must be a finite 3-vector")
        object.__setattr__(self, "offset", offset)


@dataclass(frozen=True)
class RobotModel:
    joints: tuple
    joint_limits: np.ndarray  # (n, 2) radians, min < max
    ee_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    task_dim: int = 6

    def __post_init__(self):
        joints = tuple(self.joints)
        object.__setattr__(self, "joints", joints)
        limits = np.asarray(self.joint_limits, dtype=float)
        if limits.shape != (len(joints), 2):
            raise ValueError("joint_limits must be (n_dof, 2)")
        if not np.all(limits[:, 0] < limits[:, 1]):
            raise ValueError("joint limits require min < max")
        object.__setattr__(self, "joint_limits", limits)
        object.__setattr__(self, "ee_offset", np.asarray(self.ee_offset, dtype=float))
        if self.task_dim not in (3, 6):
            raise ValueError("task_dim must be 3 (planar) or 6 (spatial)")

    @property
    def n_dof(self):
        return len(self.joints)


@dataclass
class JointState:
    q: np.ndarray
    q_dot: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.q_dot = np.asarray(self.q_dot, dtype=float)
        if self.q.shape != self.q_dot.shape or self.q.ndim != 1:
            raise ValueError("q and q_dot must be equal-length vectors")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.q_dot))):
            raise ValueError("joint state must be finite")


@dataclass(frozen=True)
class Pose:
    """End-effector pose: translation, unit quaternion, rotation vector."""

    r_t: np.ndarray
    p: np.ndarray
    r_o: np.ndarray
    task_dim: int = 6

    def task_vector(self):
        """The task-space coordinate vector r (length task_dim)."""
        if self.task_dim == 3:
            return np.array([self.r_t[0], self.r_t[1], self.r_o[2]])
        return np.concatenate([self.r_t, self.r_o])


def _check_q(model, q):
    q = np.asarray(q, dtype=float)
    if q.shape != (model.n_dof,):
        raise ValueError(f"q must have length {model.n_dof}, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("q must be finite")
    return q


def _frames(model, q):
    """Per-joint world origins, world axes, and the chain quaternion."""
    pos = np.zeros(3)
    quat = np.array([1.0, 0.0, 0.0, 0.0])
    origins = np.empty((model.n_dof, 3))
    axes = np.empty((model.n_dof, 3))
    for i, joint in enumerate(model.joints):
        R = quat_to_matrix(quat)
        pos = pos + R @ joint.offset
        origins[i] = pos
        axes[i] = R @ joint.axis
        quat = quat_mul(quat, quat_from_rotvec(joint.axis * q[i]))
    ee = pos + quat_to_matrix(quat) @ model.ee_offset
    return origins, axes, ee, quat


def forward_kinematics(model, q):
    """End-effector pose for joint vector q."""
    q = _check_q(model, q)
    _, _, ee, quat = _frames(model, q)
    p = quat_canonical(quat_normalize(quat))
    return Pose(r_t=ee, p=p, r_o=rotvec_from_quat(p), task_dim=model.task_dim)


def joint_world_positions(model, q):
    """World origins of every joint frame plus the end effector (n+1, 3)."""
    q = _check_q(model, q)
    origins, _, ee, _ = _frames(model, q)
    return np.vstack([origins, ee])


def fk_jacobian(model, q, flavor="analytic"):
    """Pose and task Jacobian from a single chain traversal."""
    q = _check_q(model, q)
    if flavor not in ("analytic", "geometric"):
        raise ValueError("flavor must be 'analytic' or 'geometric'")
    origins, axes, ee, quat = _frames(model, q)
    p = quat_canonical(quat_normalize(quat))
    r_o = rotvec_from_quat(p)
    pose = Pose(r_t=ee, p=p, r_o=r_o, task_dim=model.task_dim)
    Jv = np.cross(axes, ee - origins).T  # (3, n)
    Jw = axes.T  # (3, n)
    if model.task_dim == 3:
        J = np.vstack([Jv[:2], Jw[2:3]])
    elif flavor == "geometric":
        J = np.vstack([Jv, Jw])
    else:
        J = np.vstack([Jv, so3_left_jacobian_inv(r_o) @ Jw])
    return pose, J


def jacobian(model, q, flavor="analytic"):
    """Task Jacobian J with r_dot = J q_dot.

    flavor selects the rotation rows for the spatial case: "geometric" gives
    world angular velocity, "analytic" gives the rotation-vector rate (the
    parameterization the Cartesian orientation gradient lives in). Planar
    models use (x_dot, y_dot, yaw_rate) and both flavors coincide.
    """
    return fk_jacobian(model, q, flavor=flavor)[1]


def point_jacobian(model, q, joint_index):
    """Translational Jacobian of the distal end of link joint_index (1-based).

    Columns beyond joint_index are zeroed; the point is the next joint frame
    origin, or the end effector for the last link.
    """
    q = _check_q(model, q)
    if not 1 <= joint_index <= model.n_dof:
        raise ValueError(f"joint_index must be in 1..{model.n_dof}")
    origins, axes, ee, _ = _frames(model, q)
    point = origins[joint_index] if joint_index < model.n_dof else ee
    J = np.zeros((3, model.n_dof))
    k = joint_index
    J[:, :k] = np.cross(axes[:k], point - origins[:k]).T
    return J


def pseudo_inverse(J, rank_tol=DEFAULT_RANK_TOL):
    """Moore-Penrose pseudo-inverse; raises SingularityError below rank_tol.

    For a full-row-rank J this equals J^T (J J^T)^(-1); the SVD route also
    covers tall full-column-rank matrices (planar rigs with n < task_dim).
    """
    J = np.asarray(J, dtype=float)
    U, s, Vt = np.linalg.svd(J, full_matrices=False)
    if s[-1] <= rank_tol:
        raise SingularityError(s[-1])
    return (Vt.T / s) @ U.T


def null_projector(J, rank_tol=DEFAULT_RANK_TOL):
    """N = I - J^+ J, the projector onto the Jacobian null space."""
    J = np.asarray(J, dtype=float)
    n = J.shape[1]
    return np.eye(n) - pseudo_inverse(J, rank_tol=rank_tol) @ J


def planar_arm(link_lengths, limits=None):
    """Planar serial arm in the xy plane, all joints about +z, task_dim = 3."""
    link_lengths = [float(l) for l in link_lengths]
    n = len(link_lengths)
    joints = []
    prev = 0.0
    for l in link_lengths:
        joints.append(Joint(axis=np.array([0.0, 0.0, 1.0]), offset=np.array([prev, 0.0, 0.0])))
        prev = l
    if limits is None:
        limits = np.tile([-np.pi, np.pi], (n, 1))
    return RobotModel(
        joints=tuple(joints),
        joint_limits=limits,
        ee_offset=np.array([link_lengths[-1], 0.0, 0.0]),
        task_dim=3,
    )
