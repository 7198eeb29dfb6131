"""Deterministic kinematic simulation with a phased pick-and-place machine.

Each task runs the phase sequence Approach -> VisualServo -> Grasped ->
Transfer -> Place, skipping replay phases whose trajectory model is absent;
place-only tasks (no object) enter the replay phases directly. Phases never
regress within a task. The step order is fixed: compute u from the controller,
integrate q, update the estimator weights, re-project the camera features,
then advance the phase machine. All randomness (object jitter) is drawn once
at construction from the scenario seed, so identical configurations replay
bit for bit.
"""

import dataclasses
import warnings

import numpy as np

from .adaptive import (
    control_input,
    lyapunov_monitor,
    rbf_features,
    seed_weights_from_prior,
    update_weights,
)
from .camera import Feature, project, true_image_jacobian
from .config import ConfigError, ScenarioConfig
from .dmp import reproduce
from .kinematics import SingularityError, fk_jacobian, point_jacobian
from .regions import CartesianBoxRegion, RegionSet, orientation_region_value
from .runlog import RunLogWriter

PHASES = ("Approach", "VisualServo", "Grasped", "Transfer", "Place", "Done")
_BLOCK_TOL = 1e-10


@dataclasses.dataclass(frozen=True)
class HumanEffortCommand:
    """A pull on one link: desired world velocity of that link's origin."""

    joint_index: int  # 1-based, like point_jacobian
    drag: np.ndarray  # (3,) m/s

    def __post_init__(self):
        drag = np.asarray(self.drag, dtype=float)
        if drag.shape != (3,) or not np.all(np.isfinite(drag)):
            raise ValueError("drag must be a finite 3-vector")
        object.__setattr__(self, "drag", drag)
        if int(self.joint_index) < 1:
            raise ValueError("joint_index is 1-based")
        object.__setattr__(self, "joint_index", int(self.joint_index))


def effort_to_joint_space(model, q, command):
    """Joint-velocity vector d whose point Jacobian best reproduces the drag.

    Only the proximal columns can move the grabbed point; the least-squares
    inversion runs on that block and distal entries stay zero. A degenerate
    block (point at the base axis) yields d = 0 with a warning rather than an
    error, since a human can always grab an unmovable point.
    """
    if command.joint_index > model.n_dof:
        raise ValueError(f"joint_index {command.joint_index} exceeds {model.n_dof} joints")
    Jp = point_jacobian(model, q, command.joint_index)
    block = Jp[:, : command.joint_index]
    d = np.zeros(model.n_dof)
    s_max = np.linalg.svd(block, compute_uv=False)[0]
    if s_max <= _BLOCK_TOL:
        warnings.warn("drag point does not respond to any joint; ignoring effort")
        return d
    d[: command.joint_index] = np.linalg.pinv(block, rcond=1e-8) @ command.drag
    return d


class _RuntimeTask:
    """A TaskSpec with its jitter realized and its object free to move."""

    __slots__ = ("object_position", "transfer_dmp", "place_dmp")

    def __init__(self, object_position, transfer_dmp, place_dmp):
        self.object_position = object_position
        self.transfer_dmp = transfer_dmp
        self.place_dmp = place_dmp


@dataclasses.dataclass
class SimulationResult:
    status: str
    detail: str
    records: list
    header: dict
    summary: dict


class Simulation:
    """Owns all mutable run state; step() advances exactly one control period."""

    def __init__(self, config: ScenarioConfig, oracle_jacobian=False):
        self.cfg = config
        self.dt = config.dt
        self.k = 0
        self.q = np.array(config.q0, dtype=float)
        self.state = config.adaptive
        self.status = None
        self.detail = ""
        self.cycle = 0
        self.records = []
        self.live_drag = None
        self._oracle = bool(oracle_jacobian)
        self._box = config.regions.box
        self._vision0 = config.regions.vision
        self._x_d = np.array(self._vision0.x_d, dtype=float)
        self._efforts = [(s.t_start, s.t_start + s.duration,
                          HumanEffortCommand(s.joint_index, s.drag)) for s in config.efforts]
        rng = np.random.default_rng(config.seed)
        self._tasks = []
        for spec in config.tasks:
            pos = None
            if spec.object_position is not None:
                pos = np.array(spec.object_position, dtype=float)
                if spec.jitter is not None:
                    pos = pos + rng.uniform(-spec.jitter, spec.jitter)
            self._tasks.append(_RuntimeTask(pos, spec.transfer_dmp, spec.place_dmp))
        self._task_idx = -1
        self._attached = False
        self._ref = None
        self._ref_k = 0
        self._replay_queue = []
        self.phase = "Done"
        self._advance_task()
        self._refresh_world()

    # ------------------------------------------------------------------
    # derived views

    @property
    def t(self):
        return self.k * self.dt

    @property
    def task(self):
        if 0 <= self._task_idx < len(self._tasks):
            return self._tasks[self._task_idx]
        return None

    def pixel_error(self):
        """Feature-to-target distance in pixels, or None if either is hidden."""
        if self._feature.visible and self._target.visible:
            return float(np.linalg.norm(self._feature.x - self._target.x))
        return None

    def region_set(self):
        """Current regions with the vision center at the last seen target pixel."""
        vision = dataclasses.replace(self._vision0, x_d=self._x_d)
        return RegionSet(joint_regions=self.cfg.regions.joint_regions, box=self._box,
                         cone=self.cfg.regions.cone, vision=vision)

    # ------------------------------------------------------------------
    # live commands (service layer)

    def set_drag(self, command):
        """Install or clear (None) the interactive drag."""
        if command is not None and command.joint_index > self.cfg.robot.n_dof:
            raise ValueError(f"joint_index exceeds {self.cfg.robot.n_dof} joints")
        self.live_drag = command

    def set_box(self, center, half_sizes):
        """Replace the Cartesian target box, keeping its gains; must stay in view."""
        box = CartesianBoxRegion(r_c=np.asarray(center, dtype=float),
                                 c=np.asarray(half_sizes, dtype=float), k_c=self._box.k_c)
        corners = box.r_c + box.c * np.array([[sx, sy, sz] for sx in (-1, 1)
                                              for sy in (-1, 1) for sz in (-1, 1)])
        for corner in corners:
            if not project(self.cfg.camera, corner).visible:
                raise ConfigError("box corner projects outside the camera FOV")
        if self._vision0.value(project(self.cfg.camera, box.r_c).x) >= 0.0:
            raise ConfigError("box center projects outside the vision ellipse")
        self._box = box

    # ------------------------------------------------------------------
    # phase machinery

    def _advance_task(self):
        self._task_idx += 1
        self._attached = False
        self._ref = None
        if self._task_idx >= len(self._tasks):
            self.phase = "Done"
            self.status = "done"
            self.detail = f"completed {self._task_idx} task(s)"
            return
        self.cycle = self._task_idx
        task = self._tasks[self._task_idx]
        if task.object_position is None:
            self._replay_queue = [(name, model) for name, model in
                                  (("Transfer", task.transfer_dmp), ("Place", task.place_dmp))
                                  if model is not None]
            self._begin_replay_or_finish()
        else:
            self.phase = "Approach"

    def _begin_replay_or_finish(self):
        if self._replay_queue:
            name, model = self._replay_queue.pop(0)
            _, q_ref, _ = reproduce(model, q0=self.q, dt=self.dt)
            self._ref = q_ref
            self._ref_k = 0
            self.phase = name
        else:
            self._advance_task()

    def _refresh_world(self):
        self._pose, self._J = fk_jacobian(self.cfg.robot, self.q,
                                          flavor=self.cfg.controller.mode)
        if self._attached and self.task is not None:
            self.task.object_position = self._pose.r_t.copy()
        self._feature = project(self.cfg.camera, self._pose.r_t)
        task = self.task
        if task is not None and task.object_position is not None:
            self._target = project(self.cfg.camera, task.object_position)
        else:
            self._target = Feature(x=np.array([np.nan, np.nan]), visible=False)
        if self._target.visible:
            self._x_d = self._target.x.copy()

    def _grasp_reached(self):
        err = self.pixel_error()
        if err is None or err > self.cfg.grasp_tol:
            return False
        if self.cfg.robot.task_dim == 6:
            return orientation_region_value(self.cfg.regions.cone, self._pose.p) <= 0.0
        return True

    def _advance_phase(self):
        if self.phase == "Approach":
            if self._feature.visible and self._target.visible:
                self.phase = "VisualServo"
        elif self.phase == "VisualServo":
            if self._grasp_reached():
                self.phase = "Grasped"
                self._attached = True
                if self.task is not None:
                    self.task.object_position = self._pose.r_t.copy()
                task = self.task
                self._replay_queue = [(name, model) for name, model in
                                      (("Transfer", task.transfer_dmp), ("Place", task.place_dmp))
                                      if model is not None]
        elif self.phase == "Grasped":
            self._begin_replay_or_finish()
        elif self.phase in ("Transfer", "Place"):
            if self._ref_k >= len(self._ref) - 1:
                self._begin_replay_or_finish()

    # ------------------------------------------------------------------
    # stepping

    def _human_effort(self):
        d = np.zeros(self.cfg.robot.n_dof)
        active = False
        t = self.t
        for t0, t1, cmd in self._efforts:
            if t0 <= t < t1:
                d = d + effort_to_joint_space(self.cfg.robot, self.q, cmd)
                active = True
        if self.live_drag is not None:
            d = d + effort_to_joint_space(self.cfg.robot, self.q, self.live_drag)
            active = True
        return d, active

    def _record(self, u, effort_active, mode, norms, V):
        rec = {
            "t": self.t,
            "phase": self.phase,
            "cycle": self.cycle,
            "q": self.q,
            "u": u,
            "ee_t": self._pose.r_t,
            "ee_quat": self._pose.p,
            "px": self._feature.x if self._feature.visible else None,
            "visible": bool(self._feature.visible),
            "target_px": self._target.x if self._target.visible else None,
            "target_visible": bool(self._target.visible),
            "pixel_error": self.pixel_error(),
            "xi_q_norm": norms[0],
            "xi_r_norm": norms[1],
            "xi_x_norm": norms[2],
            "residual_norm": norms[3],
            "V": V,
            "mode": mode,
            "effort": bool(effort_active),
        }
        self.records.append(rec)
        return rec

    def step(self):
        """Advance one control period; returns the record, or None when halted."""
        if self.status is not None:
            return None
        model = self.cfg.robot
        regions = self.region_set()
        controller_phase = self.phase in ("Approach", "VisualServo")
        if controller_phase:
            if not self.state.seeded and self._feature.visible and self._target.visible:
                theta = rbf_features(self.state, self._pose)
                self.state = seed_weights_from_prior(self.state, self.cfg.prior.T, theta)
            d, effort_active = self._human_effort()
            override = None
            if self._oracle and self._feature.visible and self._target.visible:
                override = true_image_jacobian(self.cfg.camera, self._pose).T
            try:
                out = control_input(model, self.cfg.controller, regions, self.state,
                                    self.q, self._feature, self._target.visible, d,
                                    Js_T_override=override, fk=(self._pose, self._J))
            except SingularityError as exc:
                self.status = "singularity"
                self.detail = str(exc)
                V = lyapunov_monitor(regions, self._feature.x, self._pose,
                                     visible=self._feature.visible and self._target.visible)
                return self._record(np.zeros(model.n_dof), False, "singular",
                                    (0.0, 0.0, 0.0, 0.0), V)
            diag = out.diagnostics
            u = out.u
            norms = (float(np.linalg.norm(diag["xi_q"])), float(np.linalg.norm(diag["xi_r"])),
                     float(np.linalg.norm(diag["xi_x"])), float(np.linalg.norm(out.task_residual)))
            rec = self._record(u, effort_active, diag["mode"], norms, float(diag["V_monitor"]))
            new_state = update_weights(self.state, diag["theta"], diag["xi_x"],
                                       diag["xi_r"], diag["Js_hat_T"], self.dt)
        else:
            if self.phase == "Grasped":
                u = np.zeros(model.n_dof)
                mode = "hold"
            else:  # Transfer / Place replay
                u = (self._ref[self._ref_k + 1] - self.q) / self.dt
                mode = "replay"
            V = lyapunov_monitor(regions, self._feature.x, self._pose,
                                 visible=self._feature.visible and self._target.visible)
            rec = self._record(u, False, mode, (0.0, 0.0, 0.0, 0.0), float(V))
            new_state = self.state

        self.q = self.q + self.dt * u
        self.state = new_state
        if self.phase in ("Transfer", "Place"):
            self._ref_k += 1
        self.k += 1
        self._refresh_world()
        self._advance_phase()
        if self.status is None and self.t >= self.cfg.timeout - 1e-12:
            self.status = "timeout"
            self.detail = f"phase {self.phase} at t={self.t:.3f}"
        return rec

    def run(self):
        while self.status is None:
            self.step()
        return self.result()

    # ------------------------------------------------------------------
    # reporting

    def header(self):
        cfg = self.cfg
        return {
            "name": cfg.name,
            "dt": cfg.dt,
            "seed": cfg.seed,
            "n_dof": cfg.robot.n_dof,
            "task_dim": cfg.robot.task_dim,
            "timeout": cfg.timeout,
            "grasp_tol": cfg.grasp_tol,
            "n_tasks": len(cfg.tasks),
        }

    def summary(self):
        return {
            "status": self.status,
            "detail": self.detail,
            "t_final": self.t,
            "steps": self.k,
            "phase": self.phase,
            "cycles_completed": self._task_idx if self.status == "done" else self.cycle,
        }

    def result(self):
        return SimulationResult(status=self.status, detail=self.detail,
                                records=self.records, header=self.header(),
                                summary=self.summary())


def run_scenario(config, out_path=None, oracle_jacobian=False):
    """Run a scenario to completion, optionally streaming a run log to disk."""
    sim = Simulation(config, oracle_jacobian=oracle_jacobian)
    if out_path is None:
        return sim.run()
    with open(out_path, "w") as fh:
        writer = RunLogWriter(fh, sim.header())
        while sim.status is None:
            rec = sim.step()
            if rec is not None:
                writer.record(rec)
        writer.summary(sim.summary())
    return sim.result()
