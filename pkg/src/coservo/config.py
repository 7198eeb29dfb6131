"""Scenario configuration.

YAML documents are parsed strictly: unknown keys anywhere in the tree are
rejected with the offending path in the message, so typos fail loudly instead
of silently running with defaults. Environment variables with the COSERVO_
prefix override document values before validation; double underscores descend
into nested maps (COSERVO_CONTROLLER__C_D=2.5 sets controller.c_d).
"""

import dataclasses
import json
import os

import numpy as np
import yaml

from .adaptive import AdaptiveState, ControllerConfig
from .camera import CameraModel, project
from .dmp import DMPModel, model_from_dict
from .kinematics import Joint, RobotModel
from .regions import (
    CartesianBoxRegion,
    JointRegion,
    OrientationConeRegion,
    RegionSet,
    VisionEllipseRegion,
)

ENV_PREFIX = "COSERVO_"


class ConfigError(ValueError):
    """Malformed scenario document; message names the offending field."""


@dataclasses.dataclass(frozen=True)
class EffortScript:
    """A timed pull on one link: world-frame velocity over [t_start, t_start+duration)."""

    joint_index: int
    drag: np.ndarray
    t_start: float
    duration: float


@dataclasses.dataclass(frozen=True)
class TaskSpec:
    """One pick/place cycle. object_position None means a place-only task that
    starts directly in the trajectory-replay phases."""

    object_position: np.ndarray = None
    jitter: np.ndarray = None
    transfer_dmp: DMPModel = None
    place_dmp: DMPModel = None


@dataclasses.dataclass
class ScenarioConfig:
    name: str
    robot: RobotModel
    q0: np.ndarray
    camera: CameraModel
    controller: ControllerConfig
    regions: RegionSet
    adaptive: AdaptiveState
    prior: np.ndarray  # (2, task_dim) image-Jacobian prior, seeded at first visibility
    tasks: list
    efforts: list
    dt: float = 1e-3
    seed: int = 0
    timeout: float = 120.0
    grasp_tol: float = 2.0


# ---------------------------------------------------------------------------
# strict mapping helpers


def _check_keys(doc, allowed, required, path):
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(doc).__name__}")
    unknown = set(doc) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")
    missing = set(required) - set(doc)
    if missing:
        raise ConfigError(f"{path}: missing required key(s) {sorted(missing)}")


def _vector(doc, path, size=None):
    try:
        v = np.asarray(doc, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a numeric sequence") from None
    if v.ndim != 1 or (size is not None and v.size != size):
        raise ConfigError(f"{path}: expected {size if size else 'a'} element vector")
    if not np.all(np.isfinite(v)):
        raise ConfigError(f"{path}: values must be finite")
    return v


def _scalar(doc, path, positive=False):
    if isinstance(doc, bool) or not isinstance(doc, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    if positive and doc <= 0:
        raise ConfigError(f"{path}: must be positive")
    return float(doc)


def _wrap(path, build):
    try:
        return build()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# section parsers


def _parse_robot(doc):
    _check_keys(doc, ("joints", "joint_limits", "ee_offset", "task_dim"),
                ("joints", "joint_limits", "task_dim"), "robot")
    joints = []
    if not isinstance(doc["joints"], list) or not doc["joints"]:
        raise ConfigError("robot.joints: expected a non-empty list")
    for i, jd in enumerate(doc["joints"]):
        _check_keys(jd, ("axis", "offset"), ("axis", "offset"), f"robot.joints[{i}]")
        joints.append(_wrap(f"robot.joints[{i}]", lambda jd=jd: Joint(
            axis=_vector(jd["axis"], "axis", 3), offset=_vector(jd["offset"], "offset", 3))))
    limits = np.asarray(doc["joint_limits"], dtype=float)
    task_dim = doc["task_dim"]
    if task_dim not in (3, 6):
        raise ConfigError("robot.task_dim: must be 3 or 6")
    n = len(joints)
    if task_dim == 6 and n <= 6:
        raise ConfigError(f"robot: spatial scenarios need a redundant arm (more than 6 joints, got {n})")
    if task_dim == 3 and n < 3:
        raise ConfigError(f"robot: planar scenarios need at least 3 joints, got {n}")
    ee = _vector(doc.get("ee_offset", [0.0, 0.0, 0.0]), "robot.ee_offset", 3)
    return _wrap("robot", lambda: RobotModel(
        joints=tuple(joints), joint_limits=limits, ee_offset=ee, task_dim=int(task_dim)))


def _parse_camera(doc):
    keys = ("fx", "fy", "cx", "cy", "width", "height", "R", "t")
    _check_keys(doc, keys, ("fx", "fy", "width", "height"), "camera")
    R = np.asarray(doc.get("R", np.eye(3).tolist()), dtype=float)
    if R.shape != (3, 3):
        raise ConfigError("camera.R: expected a 3x3 matrix")
    return _wrap("camera", lambda: CameraModel(
        fx=_scalar(doc["fx"], "camera.fx", positive=True),
        fy=_scalar(doc["fy"], "camera.fy", positive=True),
        cx=_scalar(doc.get("cx", doc["width"] / 2.0), "camera.cx"),
        cy=_scalar(doc.get("cy", doc["height"] / 2.0), "camera.cy"),
        width=int(doc["width"]),
        height=int(doc["height"]),
        R=R,
        t=_vector(doc.get("t", [0.0, 0.0, 0.0]), "camera.t", 3)))


def _parse_regions(doc, camera, task_dim):
    _check_keys(doc, ("box", "cone", "vision", "joints"), ("box", "vision"), "regions")
    bd = doc["box"]
    _check_keys(bd, ("center", "half_sizes", "gains"), ("center", "half_sizes", "gains"), "regions.box")
    box = _wrap("regions.box", lambda: CartesianBoxRegion(
        r_c=_vector(bd["center"], "regions.box.center", 3),
        c=_vector(bd["half_sizes"], "regions.box.half_sizes", 3),
        k_c=_vector(bd["gains"], "regions.box.gains", 3)))
    cone = None
    if task_dim == 6:
        if "cone" not in doc:
            raise ConfigError("regions.cone: required for spatial scenarios")
        cd = doc["cone"]
        _check_keys(cd, ("goal_quat", "alpha_o", "k_o"), ("goal_quat",), "regions.cone")
        cone = _wrap("regions.cone", lambda: OrientationConeRegion(
            p_g=_vector(cd["goal_quat"], "regions.cone.goal_quat", 4),
            alpha_o=_scalar(cd.get("alpha_o", 15.0), "regions.cone.alpha_o", positive=True),
            k_o=_scalar(cd.get("k_o", 1.0), "regions.cone.k_o", positive=True)))
    elif "cone" in doc:
        raise ConfigError("regions.cone: not allowed for planar scenarios")
    vd = doc["vision"]
    _check_keys(vd, ("b", "k_v"), ("b",), "regions.vision")
    vision = _wrap("regions.vision", lambda: VisionEllipseRegion(
        x_d=np.array([camera.cx, camera.cy]),
        b=_vector(vd["b"], "regions.vision.b", 2),
        k_v=_scalar(vd.get("k_v", 0.3), "regions.vision.k_v", positive=True)))
    joint_regions = []
    for i, jd in enumerate(doc.get("joints", [])):
        path = f"regions.joints[{i}]"
        _check_keys(jd, ("joint_indices", "center", "radius", "radius_ref", "coeffs", "k_q", "k_r"),
                    ("joint_indices", "center", "radius", "radius_ref"), path)
        joint_regions.append(_wrap(path, lambda jd=jd: JointRegion(
            joint_indices=tuple(int(j) for j in jd["joint_indices"]),
            center=_vector(jd["center"], f"{path}.center"),
            radius=_scalar(jd["radius"], f"{path}.radius", positive=True),
            radius_ref=_scalar(jd["radius_ref"], f"{path}.radius_ref", positive=True),
            coeffs=None if "coeffs" not in jd else _vector(jd["coeffs"], f"{path}.coeffs"),
            k_q=_scalar(jd.get("k_q", 10.0), f"{path}.k_q", positive=True),
            k_r=_scalar(jd.get("k_r", 1.0), f"{path}.k_r", positive=True))))
    return RegionSet(joint_regions=joint_regions, box=box, cone=cone, vision=vision)


def _parse_adaptive(doc, task_dim):
    _check_keys(doc, ("grid", "centers", "sigma", "L_gain", "input_selector"), ("sigma",), "adaptive")
    if ("grid" in doc) == ("centers" in doc):
        raise ConfigError("adaptive: give exactly one of 'grid' or 'centers'")
    if "grid" in doc:
        gd = doc["grid"]
        _check_keys(gd, ("origin", "step", "shape"), ("origin", "step", "shape"), "adaptive.grid")
        origin = _vector(gd["origin"], "adaptive.grid.origin", 2)
        step = _scalar(gd["step"], "adaptive.grid.step", positive=True)
        shape = [int(s) for s in gd["shape"]]
        if len(shape) != 2 or min(shape) < 1:
            raise ConfigError("adaptive.grid.shape: expected two positive integers")
        centers = np.array([origin + step * np.array([i, j])
                            for i in range(shape[0]) for j in range(shape[1])])
    else:
        centers = np.atleast_2d(np.asarray(doc["centers"], dtype=float))
        if centers.shape[1] != 2:
            raise ConfigError("adaptive.centers: expected rows of 2 coordinates")
    n_k = centers.shape[0]
    L_gain = _scalar(doc.get("L_gain", 0.25), "adaptive.L_gain")
    if L_gain < 0:
        raise ConfigError("adaptive.L_gain: must be nonnegative")
    selector = tuple(int(i) for i in doc.get("input_selector", (0, 1)))
    if any(i < 0 or i >= task_dim for i in selector):
        raise ConfigError("adaptive.input_selector: indices outside the task vector")
    return _wrap("adaptive", lambda: AdaptiveState(
        W_hat=np.zeros((2 * task_dim, n_k)),
        centers=centers,
        sigma=np.full(n_k, _scalar(doc["sigma"], "adaptive.sigma", positive=True)),
        L=L_gain * np.eye(n_k),
        input_selector=selector))


def _parse_dmp(doc, path, base_dir):
    if doc is None:
        return None
    if isinstance(doc, str):
        full = doc if os.path.isabs(doc) else os.path.join(base_dir, doc)
        try:
            with open(full) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read model file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return _wrap(path, lambda: model_from_dict(doc))


def _parse_tasks(doc, base_dir):
    tasks = []
    if not isinstance(doc, list) or not doc:
        raise ConfigError("tasks: expected a non-empty list")
    for i, td in enumerate(doc):
        path = f"tasks[{i}]"
        _check_keys(td, ("object", "jitter", "transfer_dmp", "place_dmp"), (), path)
        obj = td.get("object")
        tasks.append(TaskSpec(
            object_position=None if obj is None else _vector(obj, f"{path}.object", 3),
            jitter=None if td.get("jitter") is None else _vector(td["jitter"], f"{path}.jitter", 3),
            transfer_dmp=_parse_dmp(td.get("transfer_dmp"), f"{path}.transfer_dmp", base_dir),
            place_dmp=_parse_dmp(td.get("place_dmp"), f"{path}.place_dmp", base_dir)))
        if tasks[-1].object_position is None and tasks[-1].transfer_dmp is None \
                and tasks[-1].place_dmp is None:
            raise ConfigError(f"{path}: a task needs an object or at least one trajectory model")
    return tasks


def _parse_efforts(doc, n_dof):
    efforts = []
    for i, ed in enumerate(doc or []):
        path = f"efforts[{i}]"
        _check_keys(ed, ("joint_index", "drag", "t_start", "duration"),
                    ("joint_index", "drag", "t_start", "duration"), path)
        idx = int(ed["joint_index"])
        if not 1 <= idx <= n_dof:
            raise ConfigError(f"{path}.joint_index: must be in 1..{n_dof}")
        efforts.append(EffortScript(
            joint_index=idx,
            drag=_vector(ed["drag"], f"{path}.drag", 3),
            t_start=_scalar(ed["t_start"], f"{path}.t_start"),
            duration=_scalar(ed["duration"], f"{path}.duration", positive=True)))
    return efforts


_TOP_KEYS = ("name", "robot", "q0", "camera", "controller", "regions", "adaptive",
             "prior", "tasks", "efforts", "dt", "seed", "timeout", "grasp_tol")


def parse_config(doc, base_dir="."):
    """Build a validated ScenarioConfig from a plain mapping."""
    _check_keys(doc, _TOP_KEYS, ("robot", "q0", "camera", "regions", "adaptive", "prior", "tasks"),
                "scenario")
    robot = _parse_robot(doc["robot"])
    q0 = _vector(doc["q0"], "q0", robot.n_dof)
    camera = _parse_camera(doc["camera"])
    cd = doc.get("controller", {})
    _check_keys(cd, ("c_d", "mode"), (), "controller")
    controller = _wrap("controller", lambda: ControllerConfig(
        c_d=_scalar(cd.get("c_d", 3.0), "controller.c_d", positive=True),
        mode=cd.get("mode", "analytic")))
    regions = _parse_regions(doc["regions"], camera, robot.task_dim)
    adaptive = _parse_adaptive(doc["adaptive"], robot.task_dim)
    prior = np.asarray(doc["prior"], dtype=float)
    if prior.shape != (2, robot.task_dim):
        raise ConfigError(f"prior: expected a 2x{robot.task_dim} matrix, got {prior.shape}")
    cfg = ScenarioConfig(
        name=str(doc.get("name", "scenario")),
        robot=robot, q0=q0, camera=camera, controller=controller,
        regions=regions, adaptive=adaptive, prior=prior,
        tasks=_parse_tasks(doc["tasks"], base_dir),
        efforts=_parse_efforts(doc.get("efforts"), robot.n_dof),
        dt=_scalar(doc.get("dt", 1e-3), "dt", positive=True),
        seed=int(doc.get("seed", 0)),
        timeout=_scalar(doc.get("timeout", 120.0), "timeout", positive=True),
        grasp_tol=_scalar(doc.get("grasp_tol", 2.0), "grasp_tol", positive=True))
    validate_geometry(cfg)
    return cfg


def validate_geometry(cfg):
    """Cross-checks that need the assembled scenario.

    The Cartesian box must sit fully inside the camera frustum with its center
    well inside the vision ellipse; otherwise the feedback channels cannot hand
    over. Initial object positions (before jitter) must also be visible.
    """
    box = cfg.regions.box
    corners = box.r_c + box.c * np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
    for corner in corners:
        if not project(cfg.camera, corner).visible:
            raise ConfigError(f"regions.box: corner {corner.tolist()} projects outside the camera FOV")
    center_px = project(cfg.camera, box.r_c)
    if cfg.regions.vision.value(center_px.x) >= 0.0:
        raise ConfigError("regions.box: center projects outside the vision ellipse")
    for i, task in enumerate(cfg.tasks):
        if task.object_position is not None and not project(cfg.camera, task.object_position).visible:
            raise ConfigError(f"tasks[{i}].object: not visible to the camera")
    lo, hi = cfg.robot.joint_limits[:, 0], cfg.robot.joint_limits[:, 1]
    if np.any(cfg.q0 < lo) or np.any(cfg.q0 > hi):
        raise ConfigError("q0: outside joint limits")


def apply_env_overrides(doc, env=None):
    """Overlay COSERVO_* variables onto a raw document (values parsed as YAML)."""
    env = os.environ if env is None else env
    for key in sorted(env):
        if not key.startswith(ENV_PREFIX) or key == ENV_PREFIX.rstrip("_"):
            continue
        parts = key[len(ENV_PREFIX):].lower().split("__")
        if any(not p for p in parts):
            raise ConfigError(f"{key}: empty path segment")
        node = doc
        for part in parts[:-1]:
            child = node.get(part)
            if not isinstance(child, dict):
                child = {}
                node[part] = child
            node = child
        try:
            node[parts[-1]] = yaml.safe_load(env[key])
        except yaml.YAMLError as exc:
            raise ConfigError(f"{key}: unparseable value: {exc}") from exc
    return doc


def load_config(path, env=None, overrides=None):
    """Read a YAML scenario file, layer env and CLI overrides, and validate."""
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    apply_env_overrides(doc, env)
    for key, value in (overrides or {}).items():
        if value is not None:
            doc[key] = value
    return parse_config(doc, base_dir=os.path.dirname(os.path.abspath(path)))
