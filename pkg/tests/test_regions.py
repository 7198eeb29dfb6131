"""Region potentials and their feedback vectors.

Every differentiable feedback is validated against central finite
differences of its own potential; the clamp sets (inside the cone, outside
the reference region, invisible feature) are checked to produce exact zeros.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from coservo.kinematics import Pose
from coservo.regions import (
    ANGLE_EPS,
    CartesianBoxRegion,
    JointRegion,
    OrientationConeRegion,
    SmallAngleError,
    VisionEllipseRegion,
    box_feedback,
    box_potential,
    cartesian_feedback,
    joint_feedback,
    joint_potential,
    orientation_feedback_analytic,
    orientation_feedback_geometric,
    orientation_potential,
    orientation_region_value,
    quaternion_log,
    vision_feedback,
    vision_potential,
)
from coservo.rotations import quat_conj, quat_from_rotvec, quat_mul

TABLE_GOAL = np.array([-0.28, 0.63, 0.66, 0.28])


def fd_grad(fun, x, h=1e-6):
    g = np.zeros_like(np.asarray(x, dtype=float))
    for k in range(g.size):
        e = np.zeros_like(g)
        e[k] = h
        g[k] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


# ---------------------------------------------------------------------------
# joint regions


def two_joint_regions():
    avoid = JointRegion(joint_indices=(0,), center=[1.2], radius=0.3, radius_ref=0.6, k_q=10.0, k_r=2.0)
    pair = JointRegion(
        joint_indices=(1, 2), center=[-0.5, 0.8], coeffs=[1.0, 2.0], radius=0.4, radius_ref=0.9, k_q=5.0, k_r=1.0
    )
    return [avoid, pair]


def test_joint_region_values_signs():
    reg = JointRegion(joint_indices=(0,), center=[0.0], radius=0.5, radius_ref=1.0)
    f, f_ref = reg.values(np.array([2.0]))
    assert f > 0 and f_ref > 0  # far away: outside both
    f, f_ref = reg.values(np.array([0.7]))
    assert f > 0 and f_ref < 0  # between the two boundaries
    f, f_ref = reg.values(np.array([0.1]))
    assert f < 0 and f_ref < 0  # deep inside


def test_joint_feedback_is_gradient():
    regs = two_joint_regions()
    rng = np.random.default_rng(0)
    for _ in range(40):
        q = rng.uniform(-1.5, 2.0, size=4)
        g = fd_grad(lambda x: joint_potential(regs, x), q)
        assert_allclose(joint_feedback(regs, q), g, atol=1e-5)


def test_joint_feedback_zero_outside_reference():
    regs = two_joint_regions()
    q = np.array([3.0, 3.0, -3.0, 0.0])
    assert_allclose(joint_feedback(regs, q), np.zeros(4))
    assert joint_potential(regs, q) == 0.0


def test_joint_feedback_pushes_away_from_center():
    reg = JointRegion(joint_indices=(0,), center=[1.0], radius=0.3, radius_ref=0.8)
    q = np.array([1.2])  # inside both regions, right of center
    xi = joint_feedback([reg], q)
    # xi is the gradient of the potential; the repulsion -xi points away
    assert -xi[0] > 0


def test_joint_region_validation():
    with pytest.raises(ValueError):
        JointRegion(joint_indices=(0,), center=[0.0], radius=0.5, radius_ref=0.4)
    with pytest.raises(ValueError):
        JointRegion(joint_indices=(0, 1), center=[0.0], radius=0.3, radius_ref=0.6)
    with pytest.raises(ValueError):
        JointRegion(joint_indices=(0,), center=[0.0], coeffs=[-1.0], radius=0.3, radius_ref=0.6)


# ---------------------------------------------------------------------------
# Cartesian box


def demo_box():
    return CartesianBoxRegion(r_c=np.array([0.4, -0.1, 0.3]), c=np.array([0.1, 0.2, 0.15]), k_c=np.array([20.0, 10.0, 30.0]))


def test_box_feedback_is_gradient():
    box = demo_box()
    rng = np.random.default_rng(1)
    for _ in range(40):
        r_t = box.r_c + rng.uniform(-3, 3, size=3) * box.c
        assert_allclose(box_feedback(box, r_t), fd_grad(lambda x: box_potential(box, x), r_t), atol=1e-4)


def test_box_zero_inside():
    box = demo_box()
    inside = box.r_c + 0.5 * box.c
    assert box_potential(box, inside) == 0.0
    assert_allclose(box_feedback(box, inside), np.zeros(3))


def test_box_pulls_toward_center():
    box = demo_box()
    outside = box.r_c + np.array([0.5, 0.0, 0.0])
    xi = box_feedback(box, outside)
    assert -xi[0] < 0  # -xi points back toward the box along -x
    assert xi[1] == 0.0 and xi[2] == 0.0


def test_box_per_component_activation():
    box = demo_box()
    f = box.values(box.r_c + np.array([0.2, 0.0, 0.0]))
    assert f[0] > 0 and f[1] < 0 and f[2] < 0


# ---------------------------------------------------------------------------
# orientation cone


def test_orientation_region_value_at_goal_and_away():
    cone = OrientationConeRegion(p_g=TABLE_GOAL, alpha_o=15.0, k_o=1.0)
    assert orientation_region_value(cone, cone.p_g) == -1.0
    # rotate the goal by 0.4 rad about x: error half-angle 0.2, f_o = 15*0.2 - 1
    p = quat_mul(quat_from_rotvec([0.4, 0, 0]), cone.p_g)
    assert_allclose(orientation_region_value(cone, p), 15.0 * 0.2 - 1.0, atol=1e-12)


def test_orientation_potential_zero_inside_cone():
    cone = OrientationConeRegion(p_g=TABLE_GOAL, alpha_o=15.0, k_o=1.0)
    p = quat_mul(quat_from_rotvec([0.05, 0, 0]), cone.p_g)  # f_o = 15*0.025-1 < 0
    assert orientation_potential(cone, p) == 0.0
    assert_allclose(orientation_feedback_geometric(cone, p), np.zeros(3))


def test_analytic_orientation_feedback_fd():
    """The analytic path must be the exact gradient of P_o wrt the rotation
    vector, pushed through the quaternion conversion (tolerance 1e-6 here;
    the acceptance gate uses 1e-4)."""
    cone = OrientationConeRegion(p_g=TABLE_GOAL, alpha_o=15.0, k_o=1.0)

    def P(r):
        return orientation_potential(cone, quat_from_rotvec(r))

    rng = np.random.default_rng(2)
    checked = 0
    while checked < 30:
        r = rng.normal(size=3)
        r = r / np.linalg.norm(r) * rng.uniform(0.05, np.pi - 0.05)
        p = quat_from_rotvec(r)
        if orientation_region_value(cone, p) <= 0.05:
            continue
        g = orientation_feedback_analytic(cone, p, r)
        g_fd = fd_grad(P, r)
        assert np.linalg.norm(g - g_fd) <= 1e-6 * np.linalg.norm(g_fd)
        checked += 1


def test_analytic_refuses_small_rotation():
    cone = OrientationConeRegion(p_g=TABLE_GOAL)
    with pytest.raises(SmallAngleError):
        orientation_feedback_analytic(cone, np.array([1.0, 0, 0, 0]), np.zeros(3))
    with pytest.raises(SmallAngleError):
        orientation_feedback_analytic(cone, quat_from_rotvec([ANGLE_EPS / 2, 0, 0]), np.array([ANGLE_EPS / 2, 0, 0]))


def test_geometric_orientation_direction():
    # alpha_o k_o max(0, f_o) times the error rotation vector, literally
    cone = OrientationConeRegion(p_g=TABLE_GOAL, alpha_o=15.0, k_o=2.0)
    p = quat_from_rotvec([1.2, -0.3, 0.4])
    e = quat_mul(p, quat_conj(cone.p_g))
    r_e = 2.0 * quaternion_log(e)
    f_o = orientation_region_value(cone, p)
    assert f_o > 0
    assert_allclose(orientation_feedback_geometric(cone, p), 15.0 * 2.0 * f_o * r_e, atol=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_analytic_and_geometric_share_descent_direction(seed):
    """Positive inner product outside the cone, on the canonical rotation
    ball |r_o| < pi where the controller operates (FK canonicalizes the
    quaternion sign, so |r_o| <= pi always)."""
    rng = np.random.default_rng(seed)
    cone = OrientationConeRegion(p_g=TABLE_GOAL, alpha_o=15.0, k_o=1.0)
    r = rng.normal(size=3)
    r = r / max(np.linalg.norm(r), 1e-12) * rng.uniform(0.05, np.pi - 0.05)
    p = quat_from_rotvec(r)
    if orientation_region_value(cone, p) <= 1e-6:
        return
    g = orientation_feedback_analytic(cone, p, r)
    gg = orientation_feedback_geometric(cone, p)
    assert g @ gg > 0


def test_cartesian_feedback_stacks_modes():
    box = demo_box()
    cone = OrientationConeRegion(p_g=TABLE_GOAL)
    r = np.array([0.9, -0.2, 0.35])
    pose = Pose(r_t=np.array([0.8, 0.1, 0.3]), p=quat_from_rotvec(r), r_o=r, task_dim=6)
    xi_a = cartesian_feedback(box, cone, pose, mode="analytic")
    xi_g = cartesian_feedback(box, cone, pose, mode="geometric")
    assert xi_a.shape == (6,) and xi_g.shape == (6,)
    assert_allclose(xi_a[:3], xi_g[:3])  # translation part identical
    assert_allclose(xi_a[:3], box_feedback(box, pose.r_t))
    with pytest.raises(ValueError):
        cartesian_feedback(box, cone, pose, mode="other")


def test_cartesian_feedback_planar_third_component_zero():
    box = demo_box()
    cone = OrientationConeRegion(p_g=TABLE_GOAL)
    pose = Pose(r_t=np.array([0.9, -0.2, 0.0]), p=np.array([1.0, 0, 0, 0]), r_o=np.zeros(3), task_dim=3)
    xi = cartesian_feedback(box, cone, pose)
    assert xi.shape == (3,)
    assert xi[2] == 0.0


# ---------------------------------------------------------------------------
# vision ellipse


def demo_ellipse():
    return VisionEllipseRegion(x_d=np.array([1440.0, 1080.0]), b=np.array([1440.0, 1080.0]), k_v=0.3)


def test_vision_feedback_is_gradient_inside():
    reg = demo_ellipse()
    rng = np.random.default_rng(3)
    for _ in range(40):
        x = reg.x_d + rng.uniform(-0.9, 0.9, size=2) * reg.b
        if reg.value(x) >= -1e-6:
            continue
        g = fd_grad(lambda y: vision_potential(reg, y, True), x, h=1e-3)
        assert_allclose(vision_feedback(reg, x, True), g, rtol=1e-6, atol=1e-10)


def test_vision_plateau_when_invisible():
    reg = demo_ellipse()
    assert vision_potential(reg, np.array([np.nan, np.nan]), False) == 0.5 * reg.k_v
    assert_allclose(vision_feedback(reg, np.array([np.nan, np.nan]), False), np.zeros(2))


def test_vision_zero_outside_ellipse():
    reg = demo_ellipse()
    x = reg.x_d + np.array([2.0 * reg.b[0], 0.0])
    assert_allclose(vision_potential(reg, x, True), 0.5 * reg.k_v)
    assert_allclose(vision_feedback(reg, x, True), np.zeros(2))


def test_vision_potential_continuous_at_boundary():
    reg = demo_ellipse()
    on_edge = reg.x_d + np.array([reg.b[0], 0.0])
    assert_allclose(vision_potential(reg, on_edge, True), 0.5 * reg.k_v, atol=1e-12)


def test_vision_minimum_at_target():
    reg = demo_ellipse()
    assert vision_potential(reg, reg.x_d, True) == 0.0
    assert_allclose(vision_feedback(reg, reg.x_d, True), np.zeros(2))
    # -xi points toward the target from anywhere strictly inside
    x = reg.x_d + np.array([300.0, -200.0])
    xi = vision_feedback(reg, x, True)
    step = -xi
    assert step @ (reg.x_d - x) > 0


def test_region_descriptor_validation():
    with pytest.raises(ValueError):
        CartesianBoxRegion(r_c=np.zeros(3), c=np.array([0.1, -0.1, 0.1]), k_c=np.ones(3))
    with pytest.raises(ValueError):
        OrientationConeRegion(p_g=TABLE_GOAL, alpha_o=-1.0)
    with pytest.raises(ValueError):
        VisionEllipseRegion(x_d=np.zeros(2), b=np.array([0.0, 1.0]))
