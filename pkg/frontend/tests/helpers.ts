/** Shared rigs: canned frames, a capturing socket, a recording canvas. */
import type { SocketLike } from "../src/client.js";
import type { HelloFrame, StateFrame } from "../src/protocol.js";
import type { Pane2D } from "../src/scene.js";

export function makeHello(overrides: Partial<HelloFrame> = {}): HelloFrame {
  return {
    type: "hello",
    protocol: "coservo.ws/1",
    role: "expert",
    header: {
      name: "bench",
      dt: 0.001,
      seed: 7,
      n_dof: 3,
      task_dim: 3,
      timeout: 20.0,
      grasp_tol: 2.0,
      n_tasks: 1,
    },
    robot: {
      n_dof: 3,
      task_dim: 3,
      joint_limits: [
        [-3, 3],
        [-3, 3],
        [-3, 3],
      ],
      axes: [
        [0, 0, 1],
        [0, 0, 1],
        [0, 0, 1],
      ],
      offsets: [
        [0, 0, 0.1],
        [0.3, 0, 0],
        [0.25, 0, 0],
      ],
      ee_offset: [0.2, 0, 0],
    },
    camera: { width: 1280, height: 960, fx: 800, fy: 800, cx: 640, cy: 480 },
    vision: { b: [600, 450], k_v: 0.3 },
    realtime_factor: 0,
    paused: false,
    step: 0,
    ...overrides,
  };
}

export function makeState(
  step: number,
  overrides: Partial<StateFrame> = {},
): StateFrame {
  return {
    type: "state",
    step,
    t: step * 0.001,
    phase: "VisualServo",
    cycle: 0,
    status: null,
    paused: false,
    q: [0.3, -0.2, 0.4],
    joints: [
      [0, 0, 0.1],
      [0.287, 0.089, 0.1],
      [0.523, 0.114, 0.1],
      [0.722, 0.136, 0.1],
    ],
    ee_t: [0.722, 0.136, 0.1],
    ee_quat: [0.96, 0, 0, 0.25],
    px: [612.0, 471.5],
    target_px: [640.0, 480.0],
    pixel_error: 29.8,
    box: { center: [0.4, 0, 0.1], half_sizes: [0.1, 0.1, 0.05] },
    object: [0.4, 0, 0.1],
    drag: null,
    ...overrides,
  };
}

export class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
  }

  /** Push a frame at the client as if the server sent it. */
  receive(frame: unknown): void {
    const data = typeof frame === "string" ? frame : JSON.stringify(frame);
    this.onmessage?.({ data });
  }
}

export interface DrawOp {
  op: string;
  args: unknown[];
}

/** Pane2D that records every call instead of drawing. */
export class RecordingPane implements Pane2D {
  ops: DrawOp[] = [];
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 1;
  font = "";

  private log(op: string, ...args: unknown[]): void {
    this.ops.push({ op, args });
  }

  clearRect(...a: [number, number, number, number]) {
    this.log("clearRect", ...a);
  }
  fillRect(...a: [number, number, number, number]) {
    this.log("fillRect", ...a);
  }
  strokeRect(...a: [number, number, number, number]) {
    this.log("strokeRect", ...a);
  }
  beginPath() {
    this.log("beginPath");
  }
  moveTo(...a: [number, number]) {
    this.log("moveTo", ...a);
  }
  lineTo(...a: [number, number]) {
    this.log("lineTo", ...a);
  }
  arc(...a: [number, number, number, number, number]) {
    this.log("arc", ...a);
  }
  ellipse(...a: [number, number, number, number, number, number, number]) {
    this.log("ellipse", ...a);
  }
  stroke() {
    this.log("stroke");
  }
  fill() {
    this.log("fill");
  }
  fillText(...a: [string, number, number]) {
    this.log("fillText", ...a);
  }

  count(op: string): number {
    return this.ops.filter((o) => o.op === op).length;
  }
}
