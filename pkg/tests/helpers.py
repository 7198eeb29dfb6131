"""Shared rigs for the unit tests: a 7-DOF arm, an overhead camera, a region
set around the grasp goal, and a small planar scenario document."""

import numpy as np

from coservo.camera import CameraModel
from coservo.kinematics import Joint, RobotModel
from coservo.regions import (
    CartesianBoxRegion,
    JointRegion,
    OrientationConeRegion,
    RegionSet,
    VisionEllipseRegion,
)

GOAL_QUAT = np.array([-0.28, 0.63, 0.66, 0.28])


def spatial_arm():
    axes = [
        [0, 0, 1],
        [0, 1, 0],
        [0, 0, 1],
        [0, 1, 0],
        [0, 0, 1],
        [0, 1, 0],
        [1, 0, 0],
    ]
    offsets = [
        [0, 0, 0.3],
        [0, 0, 0.2],
        [0, 0, 0.25],
        [0.05, 0, 0.2],
        [0, 0, 0.2],
        [0, 0, 0.15],
        [0.05, 0, 0.1],
    ]
    joints = tuple(
        Joint(axis=np.array(a, float), offset=np.array(o, float)) for a, o in zip(axes, offsets)
    )
    return RobotModel(
        joints=joints,
        joint_limits=np.tile([-2.9, 2.9], (7, 1)),
        ee_offset=np.array([0, 0, 0.08]),
        task_dim=6,
    )


def overhead_camera():
    R = np.column_stack([[-1, 0, 0], [0, 1, 0], [0, 0, -1]]).astype(float)
    return CameraModel(
        fx=1500.0,
        fy=2400.0,
        cx=1440.0,
        cy=1080.0,
        width=2880,
        height=2160,
        R=R,
        t=np.array([0.45, 0.0, 1.5]),
    )


def planar_doc():
    """A minimal valid 3-DOF scenario document (plain dict, YAML-shaped)."""
    return {
        "robot": {
            "joints": [
                {"axis": [0, 0, 1], "offset": [0.0, 0.0, 0.1]},
                {"axis": [0, 0, 1], "offset": [0.3, 0.0, 0.0]},
                {"axis": [0, 0, 1], "offset": [0.25, 0.0, 0.0]},
            ],
            "joint_limits": [[-3.0, 3.0]] * 3,
            "ee_offset": [0.2, 0.0, 0.0],
            "task_dim": 3,
        },
        "q0": [0.3, -0.2, 0.4],
        "camera": {
            "fx": 800.0,
            "fy": 800.0,
            "width": 1280,
            "height": 960,
            "R": [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]],
            "t": [0.4, 0.0, 1.2],
        },
        "regions": {
            "box": {
                "center": [0.4, 0.0, 0.1],
                "half_sizes": [0.1, 0.1, 0.05],
                "gains": [1e-3, 1e-3, 1e-3],
            },
            "vision": {"b": [600.0, 450.0], "k_v": 0.3},
        },
        "adaptive": {"centers": [[0.35, -0.05], [0.45, 0.05]], "sigma": 0.2},
        "prior": [[-800.0, 0.0, 0.0], [0.0, 800.0, 0.0]],
        "tasks": [{"object": [0.4, 0.0, 0.1]}],
    }


def demo_region_set(box_center=(0.3, 0.1, 0.4)):
    box = CartesianBoxRegion(
        r_c=np.asarray(box_center, float),
        c=np.array([0.05, 0.05, 0.05]),
        k_c=np.array([20.0, 20.0, 20.0]),
    )
    cone = OrientationConeRegion(p_g=GOAL_QUAT, alpha_o=15.0, k_o=1.0)
    vision = VisionEllipseRegion(x_d=np.array([1440.0, 1080.0]), b=np.array([1440.0, 1080.0]), k_v=0.3)
    joint_regions = [
        JointRegion(joint_indices=(3,), center=[2.0], radius=0.3, radius_ref=0.6, k_q=10.0, k_r=1.0)
    ]
    return RegionSet(joint_regions=joint_regions, box=box, cone=cone, vision=vision)
