"""Command line entry points.

Exit codes: 0 scenario completed, 1 malformed configuration or input file,
2 timeout, 3 singularity halt.
"""

import argparse
import json
import sys

import numpy as np

from . import dmp as dmp_mod
from .config import ConfigError, load_config
from .runlog import read_runlog
from .simulator import run_scenario

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_TIMEOUT = 2
EXIT_SINGULAR = 3

_STATUS_CODES = {"done": EXIT_OK, "timeout": EXIT_TIMEOUT, "singularity": EXIT_SINGULAR}


def _fail(msg):
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_BAD_INPUT


def _load_demo(path):
    if path.endswith(".json"):
        with open(path) as fh:
            doc = json.load(fh)
        extra = set(doc) - {"t", "q", "q_dot", "q_ddot"}
        if extra:
            raise ValueError(f"unknown demo fields {sorted(extra)}")
        return dmp_mod.Demonstration(
            t=np.asarray(doc["t"], dtype=float),
            q=np.asarray(doc["q"], dtype=float),
            q_dot=None if "q_dot" not in doc else np.asarray(doc["q_dot"], dtype=float),
            q_ddot=None if "q_ddot" not in doc else np.asarray(doc["q_ddot"], dtype=float))
    # CSV: first column t, remaining columns joint positions
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.shape[1] < 2:
        raise ValueError("demo CSV needs a time column plus at least one joint column")
    return dmp_mod.Demonstration(t=data[:, 0], q=data[:, 1:])


def _parse_floats(text):
    return np.array([float(v) for v in text.split(",")], dtype=float)


def cmd_simulate(args):
    overrides = {"seed": args.seed, "dt": args.dt}
    try:
        cfg = load_config(args.config, overrides=overrides)
    except ConfigError as exc:
        return _fail(exc)
    result = run_scenario(cfg, out_path=args.out)
    s = result.summary
    print(f"{result.status}: {result.detail} "
          f"(t={s['t_final']:.3f}s, steps={s['steps']}, phase={s['phase']})")
    if args.out:
        print(f"log written to {args.out}")
    return _STATUS_CODES[result.status]


def cmd_learn_dmp(args):
    try:
        demo = _load_demo(args.demo)
        model = dmp_mod.learn(demo, alpha_q=args.alpha_q, alpha_z=args.alpha_z,
                              n_basis=args.n_basis, tau=args.tau)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        return _fail(exc)
    payload = json.dumps(dmp_mod.model_to_dict(model), sort_keys=True, separators=(",", ":"))
    with open(args.out, "w") as fh:
        fh.write(payload + "\n")
    print(f"model with {model.n_basis} basis functions over {model.dof} joints "
          f"(tau={model.tau:.3f}s) written to {args.out}")
    return EXIT_OK


def cmd_reproduce(args):
    try:
        with open(args.model) as fh:
            model = dmp_mod.model_from_dict(json.load(fh))
        t, q, qd = dmp_mod.reproduce(
            model,
            g=None if args.g is None else _parse_floats(args.g),
            tau=args.tau,
            q0=None if args.q0 is None else _parse_floats(args.q0),
            dt=args.dt)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        return _fail(exc)
    cols = ["t"] + [f"q{i}" for i in range(model.dof)] + [f"qd{i}" for i in range(model.dof)]
    np.savetxt(args.out, np.column_stack([t, q, qd]), delimiter=",",
               header=",".join(cols), comments="")
    print(f"{t.size} samples over {t[-1]:.3f}s written to {args.out}")
    return EXIT_OK


def cmd_serve(args):
    try:
        cfg = load_config(args.config, overrides={"seed": args.seed, "dt": args.dt})
        host, _, port = args.bind.rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError(f"--bind expects host:port, got {args.bind!r}")
    except ConfigError as exc:
        return _fail(exc)
    import uvicorn

    from .service import build_app

    app = build_app(cfg, realtime_factor=args.realtime_factor)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return EXIT_OK


def cmd_export_plot(args):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    try:
        header, records, summary = read_runlog(args.log)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        return _fail(exc)
    if not records:
        return _fail("log contains no step records")
    t = np.array([r["t"] for r in records])
    q = np.array([r["q"] for r in records])
    err = np.array([np.nan if r["pixel_error"] is None else r["pixel_error"] for r in records])
    res = np.array([r["residual_norm"] for r in records])
    V = np.array([r["V"] for r in records])
    phases = [r["phase"] for r in records]

    fig, axes = plt.subplots(4, 1, sharex=True, figsize=(9, 11))
    axes[0].plot(t, err, lw=0.9)
    axes[0].axhline(header.get("grasp_tol", 2.0), color="tab:red", ls="--", lw=0.8)
    axes[0].set_ylabel("pixel error [px]")
    axes[0].set_yscale("log")
    axes[1].plot(t, res, lw=0.9)
    axes[1].set_ylabel("task residual")
    axes[2].plot(t, V, lw=0.9)
    axes[2].set_ylabel("region potential V")
    for i in range(q.shape[1]):
        axes[3].plot(t, q[:, i], lw=0.9, label=f"q{i + 1}")
    axes[3].set_ylabel("q [rad]")
    axes[3].set_xlabel("t [s]")
    axes[3].legend(ncol=4, fontsize=7)
    # shade phase changes
    bounds = [0] + [i for i in range(1, len(phases)) if phases[i] != phases[i - 1]] + [len(phases) - 1]
    for ax in axes:
        for b in bounds[1:-1]:
            ax.axvline(t[b], color="k", lw=0.5, alpha=0.4)
    for i in range(len(bounds) - 1):
        mid = (t[bounds[i]] + t[bounds[i + 1]]) / 2.0
        axes[0].annotate(phases[bounds[i]], (mid, axes[0].get_ylim()[1]),
                         ha="center", va="top", fontsize=7, alpha=0.7)
    fig.suptitle(f"{header.get('name', 'run')}: {summary['status']} at t={summary['t_final']:.2f}s")
    fig.savefig(args.out, dpi=130, bbox_inches="tight")
    print(f"plot written to {args.out}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="coservo",
                                description="kinematic human-robot collaboration sandbox")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario to completion")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", help="run log destination (JSON lines)")
    sim.add_argument("--seed", type=int, help="override the scenario seed")
    sim.add_argument("--dt", type=float, help="override the control period [s]")
    sim.set_defaults(func=cmd_simulate)

    learn = sub.add_parser("learn-dmp", help="fit a motion model to a demonstration")
    learn.add_argument("--demo", required=True, help="CSV (t,q...) or JSON demonstration")
    learn.add_argument("--out", required=True)
    learn.add_argument("--n-basis", type=int, default=20)
    learn.add_argument("--alpha-q", type=float, default=dmp_mod.DEFAULT_ALPHA_Q)
    learn.add_argument("--alpha-z", type=float, default=dmp_mod.DEFAULT_ALPHA_Z)
    learn.add_argument("--tau", type=float, help="override the demonstrated duration")
    learn.set_defaults(func=cmd_learn_dmp)

    rep = sub.add_parser("reproduce", help="integrate a learned motion model")
    rep.add_argument("--model", required=True)
    rep.add_argument("--out", required=True, help="CSV trajectory destination")
    rep.add_argument("--g", help="comma separated goal override")
    rep.add_argument("--q0", help="comma separated start override")
    rep.add_argument("--tau", type=float)
    rep.add_argument("--dt", type=float, default=1e-3)
    rep.set_defaults(func=cmd_reproduce)

    srv = sub.add_parser("serve", help="expose a live simulation over WebSocket")
    srv.add_argument("--config", required=True)
    srv.add_argument("--bind", default="127.0.0.1:8750")
    srv.add_argument("--seed", type=int)
    srv.add_argument("--dt", type=float)
    srv.add_argument("--realtime-factor", type=float, default=1.0,
                     help="sim seconds per wall second (0 = free-running)")
    srv.set_defaults(func=cmd_serve)

    plot = sub.add_parser("export-plot", help="render diagnostics from a run log")
    plot.add_argument("--log", required=True)
    plot.add_argument("--out", required=True, help="image destination (png/pdf)")
    plot.set_defaults(func=cmd_export_plot)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
