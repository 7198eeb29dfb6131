"""Adaptive control law, RBF estimator, and the weight update.

Key oracles:
    * the vec/reshape identity xi_x' vec(Js^T) = Js^T xi_x, elementwise
    * an explicit per-entry loop for the weight update
    * the closed-loop algebra J u = -(Js_hat^T xi_x + xi_r) and the null-space
      damping identity N (c_d u - d + xi_q) = 0, which must hold to numerical
      precision whenever J has full row rank
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from coservo.adaptive import (
    DEFAULT_JS_PRIOR,
    AdaptiveState,
    ControllerConfig,
    control_input,
    estimate_jacobian_transpose,
    lyapunov_monitor,
    rbf_features,
    reshape_xi,
    seed_weights_from_prior,
    table_grid_state,
    update_weights,
)
from coservo.camera import Feature, project, true_image_jacobian
from coservo.kinematics import forward_kinematics, jacobian, null_projector, pseudo_inverse
from coservo.regions import (
    box_potential,
    joint_feedback,
    orientation_potential,
    vision_potential,
)

from helpers import demo_region_set, overhead_camera, spatial_arm

Q_HOME = np.array([0.2, 0.5, -0.3, 1.1, 0.25, 0.7, 0.4])


def small_state(m=6, n_k=4, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.0, 0.5, size=(n_k, 2))
    return AdaptiveState(
        W_hat=rng.normal(size=(2 * m, n_k)),
        centers=centers,
        sigma=np.full(n_k, 0.2),
        L=0.25 * np.eye(n_k),
    )


# ---------------------------------------------------------------------------
# RBF features and reconstruction


def test_rbf_features_range_and_peak():
    state = small_state()
    model = spatial_arm()
    pose = forward_kinematics(model, Q_HOME)
    theta = rbf_features(state, pose)
    assert theta.shape == (4,)
    assert np.all(theta > 0) and np.all(theta <= 1)
    # a feature centered exactly at the selected input hits 1
    sel = pose.task_vector()[[0, 1]]
    state2 = AdaptiveState(
        W_hat=state.W_hat,
        centers=np.vstack([sel, state.centers[1:]]),
        sigma=state.sigma,
        L=state.L,
    )
    assert_allclose(rbf_features(state2, pose)[0], 1.0)


def test_rbf_feature_formula():
    state = small_state()
    model = spatial_arm()
    pose = forward_kinematics(model, Q_HOME)
    sel = pose.task_vector()[[0, 1]]
    theta = rbf_features(state, pose)
    for i in range(state.n_k):
        d2 = np.sum((sel - state.centers[i]) ** 2)
        assert_allclose(theta[i], np.exp(-d2 / (2 * state.sigma[i] ** 2)), atol=1e-14)


def test_reconstruction_is_wtheta_reshaped():
    state = small_state()
    theta = np.array([0.9, 0.1, 0.4, 0.2])
    Js_T = estimate_jacobian_transpose(state, theta)
    v = state.W_hat @ theta
    assert Js_T.shape == (6, 2)
    assert_allclose(Js_T[:, 0], v[:6])
    assert_allclose(Js_T[:, 1], v[6:])


def test_reshape_xi_identity():
    rng = np.random.default_rng(1)
    for m in (3, 6):
        xi_x = rng.normal(size=2)
        Js_T = rng.normal(size=(m, 2))
        vec = np.concatenate([Js_T[:, 0], Js_T[:, 1]])
        assert_allclose(reshape_xi(xi_x, m) @ vec, Js_T @ xi_x, atol=1e-12)


# ---------------------------------------------------------------------------
# weight update


def test_update_weights_matches_explicit_loop():
    state = small_state()
    rng = np.random.default_rng(2)
    theta = rng.uniform(0.01, 1.0, size=state.n_k)
    xi_x = rng.normal(size=2)
    xi_r = rng.normal(size=6)
    Js_T = estimate_jacobian_transpose(state, theta)
    dt = 1e-3

    rho = Js_T @ xi_x + xi_r
    xi_prime = reshape_xi(xi_x, 6)
    dW_oracle = np.zeros_like(state.W_hat)
    # W_hat_dot^T = -L theta rho^T xi_x', entry by entry
    Lth = state.L @ theta
    for a in range(state.n_k):
        for b in range(2 * 6):
            dW_oracle[b, a] = -np.sum(Lth[a] * rho * xi_prime[:, b])

    new = update_weights(state, theta, xi_x, xi_r, Js_T, dt)
    assert_allclose(new.W_hat, state.W_hat + dt * dW_oracle, atol=1e-12)


def test_update_weights_noop_when_xi_x_zero():
    state = small_state()
    new = update_weights(state, np.ones(4), np.zeros(2), np.ones(6), np.zeros((6, 2)), 1e-3)
    assert new is state


def test_update_weights_rejects_bad_dt():
    state = small_state()
    with pytest.raises(ValueError):
        update_weights(state, np.ones(4), np.ones(2), np.ones(6), np.zeros((6, 2)), 0.0)


def test_update_drives_estimate_toward_truth_on_synthetic_plant():
    """Gradient-flow sanity: with xi_r = 0 and xi_x given by a fixed target,
    iterating the law reduces the residual |Js_hat^T xi_x|, since the update
    is a descent step for that quadratic in W."""
    state = small_state(seed=5)
    theta = np.full(4, 0.5)
    xi_x = np.array([0.8, -0.4])
    xi_r = np.zeros(6)
    prev = None
    for _ in range(1500):
        Js_T = estimate_jacobian_transpose(state, theta)
        res = np.linalg.norm(Js_T @ xi_x + xi_r)
        if prev is not None:
            assert res <= prev + 1e-12
        prev = res
        state = update_weights(state, theta, xi_x, xi_r, Js_T, 2e-2)
    assert prev < 0.05


def test_seeding_reproduces_prior_exactly():
    state = table_grid_state()
    model = spatial_arm()
    pose = forward_kinematics(model, Q_HOME)
    theta = rbf_features(state, pose)
    seeded = seed_weights_from_prior(state, DEFAULT_JS_PRIOR.T, theta)
    assert seeded.seeded
    assert_allclose(estimate_jacobian_transpose(seeded, theta), DEFAULT_JS_PRIOR.T, atol=1e-9)


def test_table_grid_layout():
    state = table_grid_state()
    assert state.n_k == 9
    assert state.centers.shape == (9, 2)
    expected = np.array(
        [[0.05 + 0.15 * i, 0.35 + 0.15 * j] for i in range(3) for j in range(3)]
    )
    assert_allclose(np.sort(state.centers, axis=0), np.sort(expected, axis=0), atol=1e-12)
    assert_allclose(state.L, 0.25 * np.eye(9))
    assert_allclose(state.sigma, 0.1)


def test_state_validation():
    with pytest.raises(ValueError):
        AdaptiveState(W_hat=np.zeros((12, 4)), centers=np.zeros((4, 2)), sigma=np.zeros(4), L=np.eye(4))
    with pytest.raises(ValueError):
        AdaptiveState(W_hat=np.zeros((12, 3)), centers=np.zeros((4, 2)), sigma=np.ones(4), L=np.eye(4))
    L_bad = np.eye(4)
    L_bad[0, 1] = 0.3
    with pytest.raises(ValueError):
        AdaptiveState(W_hat=np.zeros((12, 4)), centers=np.zeros((4, 2)), sigma=np.ones(4), L=L_bad)


# ---------------------------------------------------------------------------
# control law


def control_setup(q=Q_HOME, seed=3):
    model = spatial_arm()
    cam = overhead_camera()
    pose = forward_kinematics(model, q)
    region_set = demo_region_set(box_center=pose.r_t + np.array([0.1, 0.05, -0.05]))
    state = seed_weights_from_prior(
        table_grid_state(), DEFAULT_JS_PRIOR.T, rbf_features(table_grid_state(), pose)
    )
    feature = project(cam, pose.r_t)
    assert feature.visible
    return model, cam, region_set, state, feature


def test_closed_loop_task_velocity_is_minus_residual():
    model, cam, region_set, state, feature = control_setup()
    cfg = ControllerConfig(c_d=3.0, mode="analytic")
    rng = np.random.default_rng(4)
    for _ in range(10):
        d = rng.normal(size=7) * 2.0
        out = control_input(model, cfg, region_set, state, Q_HOME, feature, True, d)
        J = jacobian(model, Q_HOME, flavor="analytic")
        # human effort and joint repulsion are invisible in task space
        assert_allclose(J @ out.u, -out.task_residual, atol=1e-9)


def test_null_space_damping_identity():
    # N (c_d qdot - d + xi_q) = 0 with qdot = u
    model, cam, region_set, state, feature = control_setup()
    cfg = ControllerConfig(c_d=3.0, mode="analytic")
    rng = np.random.default_rng(5)
    J = jacobian(model, Q_HOME, flavor="analytic")
    N = null_projector(J)
    for _ in range(10):
        d = rng.normal(size=7)
        out = control_input(model, cfg, region_set, state, Q_HOME, feature, True, d)
        xi_q = joint_feedback(region_set.joint_regions, Q_HOME)
        assert_allclose(N @ (cfg.c_d * out.u - d + xi_q), np.zeros(7), atol=1e-9)


def test_invisible_feature_gates_vision_term():
    model, cam, region_set, state, feature = control_setup()
    cfg = ControllerConfig()
    hidden = Feature(x=np.array([np.nan, np.nan]), visible=False)
    out = control_input(model, cfg, region_set, state, Q_HOME, hidden, True, np.zeros(7))
    assert_allclose(out.diagnostics["xi_x"], np.zeros(2))
    # target lost has the same effect even with a visible feature
    out2 = control_input(model, cfg, region_set, state, Q_HOME, feature, False, np.zeros(7))
    assert_allclose(out2.diagnostics["xi_x"], np.zeros(2))
    assert not out2.diagnostics["visible"]


def test_control_rejects_nonfinite_inputs():
    model, cam, region_set, state, feature = control_setup()
    cfg = ControllerConfig()
    with pytest.raises(ValueError):
        control_input(model, cfg, region_set, state, np.full(7, np.nan), feature, True, np.zeros(7))
    with pytest.raises(ValueError):
        control_input(model, cfg, region_set, state, Q_HOME, feature, True, np.full(7, np.inf))


def test_small_angle_falls_back_to_geometric():
    # a configuration with identity end-effector rotation trips the analytic
    # path guard; the controller must recompute with the geometric flavor
    model, cam, region_set, state, _ = control_setup()
    q0 = np.zeros(7)
    pose = forward_kinematics(model, q0)
    assert np.linalg.norm(pose.r_o) < 1e-9
    feature = project(cam, pose.r_t)
    cfg = ControllerConfig(mode="analytic")
    out = control_input(model, cfg, region_set, state, q0, feature, True, np.zeros(7))
    assert out.diagnostics["mode"] == "geometric"
    assert np.all(np.isfinite(out.u))


def test_override_substitutes_true_jacobian():
    model, cam, region_set, state, feature = control_setup()
    cfg = ControllerConfig()
    pose = forward_kinematics(model, Q_HOME)
    Js_true = true_image_jacobian(cam, pose)
    out = control_input(
        model, cfg, region_set, state, Q_HOME, feature, True, np.zeros(7), Js_T_override=Js_true.T
    )
    assert_allclose(out.diagnostics["Js_hat_T"], Js_true.T)


def test_config_validation():
    with pytest.raises(ValueError):
        ControllerConfig(c_d=0.0)
    with pytest.raises(ValueError):
        ControllerConfig(mode="numeric")


# ---------------------------------------------------------------------------
# Lyapunov monitor


def test_monitor_sums_region_potentials():
    model, cam, region_set, state, feature = control_setup()
    pose = forward_kinematics(model, Q_HOME)
    V = lyapunov_monitor(region_set, feature.x, pose, visible=True)
    expected = (
        vision_potential(region_set.vision, feature.x, True)
        + box_potential(region_set.box, pose.r_t)
        + orientation_potential(region_set.cone, pose.p)
    )
    assert_allclose(V, expected, atol=1e-14)
    assert V >= 0.0


def test_monitor_planar_skips_orientation():
    from coservo.kinematics import Pose

    region_set = demo_region_set()
    pose = Pose(r_t=np.array([0.9, 0.0, 0.0]), p=np.array([1.0, 0, 0, 0]), r_o=np.zeros(3), task_dim=3)
    V = lyapunov_monitor(region_set, np.array([100.0, 100.0]), pose, visible=True)
    expected = vision_potential(region_set.vision, np.array([100.0, 100.0]), True) + box_potential(
        region_set.box, pose.r_t
    )
    assert_allclose(V, expected, atol=1e-14)
