"""Synthetic pinhole camera.

The camera provides ground truth for the simulator and the tests: projection
of world points to pixels, FOV membership, and the true image Jacobian of the
tracked feature (the end-effector origin). The controller never sees any of
this directly; it only receives pixel measurements and visibility flags.
"""

from dataclasses import dataclass, field

import numpy as np

DEPTH_MIN = 0.01  # meters; closer than this counts as invisible


class VisibilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    R: np.ndarray = field(default_factory=lambda: np.eye(3))  # camera axes in world frame
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))  # camera origin in world frame

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        R = np.asarray(self.R, dtype=float)
        if R.shape != (3, 3) or np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9:
            raise ValueError("extrinsic rotation must be orthonormal")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))


@dataclass(frozen=True)
class Feature:
    x: np.ndarray
    visible: bool


def in_fov(cam, x):
    """Inclusive rectangle membership of a pixel coordinate."""
    return bool(0.0 <= x[0] <= cam.width and 0.0 <= x[1] <= cam.height)


def project(cam, point_world):
    """Perspective projection of a world point; invisibility is data, not error."""
    point_world = np.asarray(point_world, dtype=float)
    if not np.all(np.isfinite(point_world)):
        raise ValueError("point must be finite")
    pc = cam.R.T @ (point_world - cam.t)
    depth = pc[2]
    if depth <= DEPTH_MIN:
        return Feature(x=np.array([np.nan, np.nan]), visible=False)
    x = np.array([cam.cx + cam.fx * pc[0] / depth, cam.cy + cam.fy * pc[1] / depth])
    return Feature(x=x, visible=in_fov(cam, x))


def true_image_jacobian(cam, pose):
    """Ground-truth J_s with x_dot = J_s r_dot for the end-effector-origin feature.

    Only the translation columns are nonzero: the tracked point is the
    end-effector origin, so orientation rates do not move it. Sealed for
    simulator oracles and tests; the controller estimates its own copy.
    """
    pc = cam.R.T @ (pose.r_t - cam.t)
    depth = pc[2]
    if depth <= DEPTH_MIN:
        raise VisibilityError("feature not visible (behind or too close)")
    feat = project(cam, pose.r_t)
    if not feat.visible:
        raise VisibilityError("feature outside the image rectangle")
    # d(pixel)/d(camera point), the pinhole derivative
    dpx = np.array(
        [
            [cam.fx / depth, 0.0, -cam.fx * pc[0] / depth**2],
            [0.0, cam.fy / depth, -cam.fy * pc[1] / depth**2],
        ]
    )
    J_translation = dpx @ cam.R.T  # (2, 3) world-frame translation columns
    Js = np.zeros((2, pose.task_dim))
    if pose.task_dim == 3:
        Js[:, :2] = J_translation[:, :2]
    else:
        Js[:, :3] = J_translation
    return Js
