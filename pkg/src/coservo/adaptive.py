"""Adaptive visual-servo control law with RBF image-Jacobian estimation.

The control input is

    u = -J^+(q) (Js_hat^T xi_x + xi_r) + N(q) c_d^{-1} (d - xi_q)

where Js_hat^T is reconstructed from a radial-basis-function network,
vec(Js_hat^T) = W_hat theta(r), and W_hat follows the online adaptation law

    W_hat_dot = -(L theta (Js_hat^T xi_x + xi_r)^T xi_x')^T

integrated with explicit Euler at the simulation step. The human effort d and
the joint-region repulsion -xi_q live purely in the Jacobian null space, so
they never disturb the task-space residual channel.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import regions as rg
from .kinematics import DEFAULT_RANK_TOL, fk_jacobian, pseudo_inverse
from .regions import (
    SmallAngleError,
    box_potential,
    cartesian_feedback,
    joint_feedback,
    orientation_potential,
    vision_feedback,
    vision_potential,
)


@dataclass(frozen=True)
class AdaptiveState:
    """RBF network state: weights plus the fixed feature layout."""

    W_hat: np.ndarray  # (2m, n_k)
    centers: np.ndarray  # (n_k, input dim)
    sigma: np.ndarray  # (n_k,)
    L: np.ndarray  # (n_k, n_k), positive semidefinite gain
    input_selector: tuple = (0, 1)
    seeded: bool = False  # True once the first-visibility prior has been applied

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        object.__setattr__(self, "centers", centers)
        sigma = np.broadcast_to(np.asarray(self.sigma, dtype=float), (centers.shape[0],)).copy()
        if np.any(sigma <= 0):
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "sigma", sigma)
        L = np.asarray(self.L, dtype=float)
        n_k = centers.shape[0]
        if L.shape != (n_k, n_k):
            raise ValueError("L must be (n_k, n_k)")
        if np.max(np.abs(L - L.T)) > 1e-12:
            raise ValueError("L must be symmetric")
        object.__setattr__(self, "L", L)
        W = np.asarray(self.W_hat, dtype=float)
        if W.ndim != 2 or W.shape[1] != n_k or W.shape[0] % 2 != 0:
            raise ValueError("W_hat must be (2m, n_k)")
        object.__setattr__(self, "W_hat", W)
        object.__setattr__(self, "input_selector", tuple(int(i) for i in self.input_selector))

    @property
    def n_k(self):
        return self.centers.shape[0]

    @property
    def m(self):
        return self.W_hat.shape[0] // 2


@dataclass(frozen=True)
class ControllerConfig:
    c_d: float = 3.0
    mode: str = "analytic"  # orientation-gradient path and Jacobian flavor
    rank_tol: float = DEFAULT_RANK_TOL
    angle_eps: float = rg.ANGLE_EPS

    def __post_init__(self):
        if self.c_d <= 0:
            raise ValueError("c_d must be positive")
        if self.mode not in ("analytic", "geometric"):
            raise ValueError("mode must be 'analytic' or 'geometric'")


@dataclass(frozen=True)
class ControlOutput:
    u: np.ndarray
    task_residual: np.ndarray
    diagnostics: dict


def rbf_features(state, pose):
    """theta_i = exp(-|r_sel - c_i|^2 / (2 sigma_i^2)), each in (0, 1]."""
    r = pose.task_vector() if hasattr(pose, "task_vector") else np.asarray(pose, dtype=float)
    sel = r[list(state.input_selector)]
    d2 = np.sum((state.centers - sel) ** 2, axis=1)
    return np.exp(-d2 / (2.0 * state.sigma**2))


def estimate_jacobian_transpose(state, theta):
    """Reshape W_hat theta into Js_hat^T (m x 2), first column first."""
    v = state.W_hat @ theta
    m = state.m
    return np.column_stack([v[:m], v[m:]])


def reshape_xi(xi_x, m):
    """xi_x' = [xi_x1 I_m, xi_x2 I_m], so xi_x' vec(Js^T) = Js^T xi_x."""
    eye = np.eye(m)
    return np.hstack([xi_x[0] * eye, xi_x[1] * eye])


def update_weights(state, theta, xi_x, xi_r, Js_hat_T, dt):
    """One explicit-Euler step of the adaptation law; returns a new state."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not np.any(xi_x):
        return state  # xi_x' = 0: no update outside the vision region
    rho = Js_hat_T @ xi_x + xi_r
    xi_prime = reshape_xi(xi_x, state.m)
    dW = -((state.L @ theta)[:, None] @ rho[None, :] @ xi_prime).T
    return replace(state, W_hat=state.W_hat + dt * dW)


def seed_weights_from_prior(state, Js_prior_T, theta):
    """Spread a prior Js^T across all neurons at the first-visibility instant.

    Every column of W_hat becomes vec(Js_prior^T) / sum(theta), which makes
    W_hat theta reconstruct the prior exactly at the seeding pose.
    """
    vec = np.concatenate([Js_prior_T[:, 0], Js_prior_T[:, 1]])
    s = float(np.sum(theta))
    if s <= 0:
        raise ValueError("theta sums to zero; cannot seed weights")
    W = np.tile((vec / s)[:, None], (1, state.n_k))
    return replace(state, W_hat=W, seeded=True)


def lyapunov_monitor(region_set, x, pose, residual=None, visible=True):
    """Monitored potential V = P_v + P_t + P_o (the region part of the candidate).

    The task residual is accepted so callers can log its norm alongside V;
    it does not enter the value.
    """
    V = vision_potential(region_set.vision, x, visible)
    V += box_potential(region_set.box, pose.r_t)
    if pose.task_dim == 6:
        V += orientation_potential(region_set.cone, pose.p)
    return V


def control_input(model, config, region_set, state, q, feature, target_visible, d,
                  Js_T_override=None, fk=None):
    """Assemble the joint-velocity command and its diagnostics.

    The vision term is gated on both the feature's and the target's
    visibility. The analytic orientation path falls back to the geometric one
    (for this evaluation only) when the pose rotation is below angle_eps.
    Js_T_override substitutes a ground-truth image Jacobian transpose for the
    RBF estimate (simulator oracle and monitor tests only). fk is an optional
    precomputed (pose, J) pair for q in config.mode's flavor, saving callers
    that just ran the kinematics a second chain traversal.
    """
    q = np.asarray(q, dtype=float)
    d = np.asarray(d, dtype=float)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(d))):
        raise ValueError("non-finite controller inputs")
    mode = config.mode
    pose, J = fk_jacobian(model, q, flavor=mode) if fk is None else fk
    try:
        xi_r = cartesian_feedback(region_set.box, region_set.cone, pose, mode=mode)
    except SmallAngleError:
        mode = "geometric"
        pose, J = fk_jacobian(model, q, flavor=mode)
        xi_r = cartesian_feedback(region_set.box, region_set.cone, pose, mode=mode)
    xi_q = joint_feedback(region_set.joint_regions, q)
    visible = bool(feature.visible) and bool(target_visible)
    xi_x = vision_feedback(region_set.vision, feature.x, visible)
    theta = rbf_features(state, pose)
    Js_hat_T = estimate_jacobian_transpose(state, theta) if Js_T_override is None else Js_T_override
    rho = Js_hat_T @ xi_x + xi_r
    J_pinv = pseudo_inverse(J, rank_tol=config.rank_tol)
    N = np.eye(model.n_dof) - J_pinv @ J
    u = -J_pinv @ rho + N @ ((d - xi_q) / config.c_d)
    V = lyapunov_monitor(region_set, feature.x, pose, residual=rho, visible=visible)
    diagnostics = {
        "pose": pose,
        "theta": theta,
        "Js_hat_T": Js_hat_T,
        "xi_q": xi_q,
        "xi_r": xi_r,
        "xi_x": xi_x,
        "V_monitor": V,
        "mode": mode,
        "visible": visible,
    }
    return ControlOutput(u=u, task_residual=rho, diagnostics=diagnostics)


def table_grid_state(L_gain=0.25, sigma=0.1, m=6):
    """The default 3x3 RBF grid over the horizontal workspace used by the
    shipped scenarios: centers (0.05, 0.35) + (0.15 i, 0.15 j), i, j = 0..2."""
    base = np.array([0.05, 0.35])
    centers = np.array([base + np.array([0.15 * i, 0.15 * j]) for i in range(3) for j in range(3)])
    n_k = centers.shape[0]
    return AdaptiveState(
        W_hat=np.zeros((2 * m, n_k)),
        centers=centers,
        sigma=np.full(n_k, float(sigma)),
        L=float(L_gain) * np.eye(n_k),
        input_selector=(0, 1),
    )


DEFAULT_JS_PRIOR = np.array(
    [
        [-1500.0, 0.0, 0.0, 0.0, -200.0, 60.0],
        [0.0, 2400.0, 170.0, -200.0, 0.0, 180.0],
    ]
)
