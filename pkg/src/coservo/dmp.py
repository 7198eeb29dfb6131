"""Dynamic movement primitives: per-DOF learning and reproduction.

Transformation system (per DOF):

    tau^2 qdd = alpha_q (beta_q (g - q) - tau qd) + zeta(z)
    tau zd    = -alpha_z z              =>  z(t) = exp(-alpha_z t / tau)

with the forcing term a normalized basis expansion gated by the phase and
scaled by the movement amplitude:

    zeta(z) = (sum_i psi_i(z) w_i / sum_i psi_i(z)) * z * (g - q0)
    psi_i(z) = exp(-(z - c_i)^2 / (2 sigma_i^2))

Learning inverts the transformation system on the demonstration to get the
desired forcing zeta_d and solves one weighted scalar least-squares problem
per basis (locally weighted regression):

    w_i = (s^T Gamma_i zeta_d) / (s^T Gamma_i s),   s_t = z_t (g - q0)

Goal and duration are modulated at reproduction time by overriding g, q0, and
tau; the canonical phase makes the result time-scale exactly under Euler
integration with a proportionally scaled step.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

DEFAULT_ALPHA_Q = 25.0
DEFAULT_ALPHA_Z = 3.0
DEFAULT_N_BASIS = 20
Z_STOP = 1e-3


@dataclass
class Demonstration:
    t: np.ndarray
    q: np.ndarray  # (T, dof)
    q_dot: np.ndarray = None
    q_ddot: np.ndarray = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.q = np.atleast_2d(np.asarray(self.q, dtype=float))
        if self.q.shape[0] != self.t.size:
            self.q = self.q.T
        if self.t.size < 2 or np.any(np.diff(self.t) <= 0):
            raise ValueError("need at least 2 samples with strictly increasing t")
        if self.q_dot is None:
            self.q_dot = np.gradient(self.q, self.t, axis=0, edge_order=2)
        else:
            self.q_dot = np.asarray(self.q_dot, dtype=float).reshape(self.q.shape)
        if self.q_ddot is None:
            self.q_ddot = np.gradient(self.q_dot, self.t, axis=0, edge_order=2)
        else:
            self.q_ddot = np.asarray(self.q_ddot, dtype=float).reshape(self.q.shape)

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    @property
    def dof(self):
        return self.q.shape[1]


@dataclass(frozen=True)
class DMPModel:
    weights: np.ndarray  # (dof, N_basis)
    alpha_q: float
    beta_q: float
    alpha_z: float
    tau: float
    g: np.ndarray
    q0: np.ndarray
    centers: np.ndarray
    sigma2: np.ndarray  # basis variances in phase space
    zero_forcing: np.ndarray = None  # per-DOF flag: amplitude degenerate

    def __post_init__(self):
        if self.alpha_q <= 0 or self.beta_q <= 0 or self.alpha_z <= 0 or self.tau <= 0:
            raise ValueError("gains and tau must be positive")
        if self.centers.size < 2:
            raise ValueError("need at least 2 basis functions")
        if self.zero_forcing is None:
            object.__setattr__(self, "zero_forcing", np.zeros(self.g.size, dtype=bool))

    @property
    def n_basis(self):
        return self.centers.size

    @property
    def dof(self):
        return self.g.size


def canonical_phase(model, t):
    """z(t) = exp(-alpha_z t / tau), z(0) = 1, monotone decreasing."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be nonnegative")
    return np.exp(-model.alpha_z * np.asarray(t, dtype=float) / model.tau)


def phase_basis(alpha_z, n_basis):
    """Log-spaced centers c_i = exp(-alpha_z i/(N-1)) (equidistant peaks in
    time) and variances from the spacing to the next center."""
    i = np.arange(n_basis)
    centers = np.exp(-alpha_z * i / (n_basis - 1))
    gaps = np.abs(np.diff(centers))
    sigma = np.empty(n_basis)
    sigma[:-1] = gaps * 0.65
    sigma[-1] = sigma[-2]
    return centers, sigma**2


def _psi(centers, sigma2, z):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return np.exp(-((z[:, None] - centers[None, :]) ** 2) / (2.0 * sigma2[None, :]))


def forcing_term(model, z, g=None, q0=None):
    """zeta(z) per DOF at phase z (scalar z -> vector over DOFs)."""
    g = model.g if g is None else np.asarray(g, dtype=float)
    q0 = model.q0 if q0 is None else np.asarray(q0, dtype=float)
    psi = _psi(model.centers, model.sigma2, z)[0]
    denom = np.sum(psi)
    amp = np.where(model.zero_forcing, 0.0, g - q0)
    return (psi @ model.weights.T) / denom * float(z) * amp


def learn(demo, alpha_q=DEFAULT_ALPHA_Q, beta_q=None, alpha_z=DEFAULT_ALPHA_Z,
          n_basis=DEFAULT_N_BASIS, tau=None, amplitude_tol=1e-8):
    """Fit per-DOF basis weights to a demonstration by LWR.

    tau defaults to the demonstration duration. A DOF whose net displacement
    |g - q0| falls below amplitude_tol gets a zero forcing term and a warning
    (the amplitude factor of the forcing term vanishes).
    """
    if beta_q is None:
        beta_q = alpha_q / 4.0
    if tau is None:
        tau = demo.duration
    t_rel = demo.t - demo.t[0]
    g = demo.q[-1].copy()
    q0 = demo.q[0].copy()
    z = np.exp(-alpha_z * t_rel / tau)
    centers, sigma2 = phase_basis(alpha_z, n_basis)
    psi = _psi(centers, sigma2, z)  # (T, N)
    zero_forcing = np.abs(g - q0) < amplitude_tol
    weights = np.zeros((demo.dof, n_basis))
    for dof in range(demo.dof):
        if zero_forcing[dof]:
            warnings.warn(f"DOF {dof}: g equals q0; forcing term set to zero")
            continue
        zeta_d = (
            tau**2 * demo.q_ddot[:, dof]
            - alpha_q * (beta_q * (g[dof] - demo.q[:, dof]) - tau * demo.q_dot[:, dof])
        )
        s = z * (g[dof] - q0[dof])
        for i in range(n_basis):
            w = psi[:, i]
            denom = np.sum(w * s * s)
            weights[dof, i] = 0.0 if denom == 0.0 else np.sum(w * s * zeta_d) / denom
    return DMPModel(
        weights=weights,
        alpha_q=float(alpha_q),
        beta_q=float(beta_q),
        alpha_z=float(alpha_z),
        tau=float(tau),
        g=g,
        q0=q0,
        centers=centers,
        sigma2=sigma2,
        zero_forcing=zero_forcing,
    )


def reproduce(model, g=None, tau=None, q0=None, dt=1e-3, z_stop=Z_STOP):
    """Integrate the DMP with explicit Euler until the phase drops below z_stop.

    Returns (t, q, qd) arrays including the initial sample.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    g = model.g if g is None else np.asarray(g, dtype=float) + np.zeros(model.dof)
    q0 = model.q0 if q0 is None else np.asarray(q0, dtype=float) + np.zeros(model.dof)
    tau = model.tau if tau is None else float(tau)
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(q0)) and np.isfinite(tau) and tau > 0):
        raise ValueError("overrides must be finite (tau positive)")
    n_steps = int(np.ceil(tau * np.log(1.0 / z_stop) / (model.alpha_z * dt)))
    t = np.arange(n_steps + 1) * dt
    q = np.empty((n_steps + 1, model.dof))
    qd = np.empty_like(q)
    q[0], qd[0] = q0, 0.0
    for k in range(n_steps):
        z = np.exp(-model.alpha_z * t[k] / tau)
        zeta = forcing_term(model, z, g=g, q0=q0)
        qdd = (model.alpha_q * (model.beta_q * (g - q[k]) - tau * qd[k]) + zeta) / tau**2
        q[k + 1] = q[k] + dt * qd[k]
        qd[k + 1] = qd[k] + dt * qdd
    return t, q, qd


def coarse_orientation_coupling(r2, Y0=0.6, beta0=np.pi / 2.0):
    """Map a lateral translation to a coarse yaw: clamp(beta0 * r2 / Y0, +-beta0)."""
    if Y0 <= 0:
        raise ValueError("Y0 must be positive")
    return float(np.clip(beta0 * r2 / Y0, -beta0, beta0))


MODEL_KIND = "dmp-model/1"


def model_to_dict(model):
    """Plain-type view of a model, suitable for json.dumps."""
    return {
        "kind": MODEL_KIND,
        "weights": model.weights.tolist(),
        "alpha_q": float(model.alpha_q),
        "beta_q": float(model.beta_q),
        "alpha_z": float(model.alpha_z),
        "tau": float(model.tau),
        "g": model.g.tolist(),
        "q0": model.q0.tolist(),
        "centers": model.centers.tolist(),
        "sigma2": model.sigma2.tolist(),
        "zero_forcing": [bool(f) for f in model.zero_forcing],
    }


def model_from_dict(doc):
    if not isinstance(doc, dict) or doc.get("kind") != MODEL_KIND:
        raise ValueError(f"not a serialized motion model (kind={doc.get('kind') if isinstance(doc, dict) else doc!r})")
    return DMPModel(
        weights=np.asarray(doc["weights"], dtype=float),
        alpha_q=float(doc["alpha_q"]),
        beta_q=float(doc["beta_q"]),
        alpha_z=float(doc["alpha_z"]),
        tau=float(doc["tau"]),
        g=np.asarray(doc["g"], dtype=float),
        q0=np.asarray(doc["q0"], dtype=float),
        centers=np.asarray(doc["centers"], dtype=float),
        sigma2=np.asarray(doc["sigma2"], dtype=float),
        zero_forcing=np.asarray(doc["zero_forcing"], dtype=bool),
    )
