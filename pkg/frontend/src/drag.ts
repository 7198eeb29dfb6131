/**
 * Pointer-drag interaction: press near a joint in a world pane, pull, and
 * the controller streams `drag` frames (world-frame velocity at the distal
 * end of the picked link) until release, which sends a single clear frame.
 */
import type { Plane } from "./scene.js";
import { projectWorld } from "./scene.js";
import type { ViewState } from "./viewstate.js";

export interface DragEmitter {
  sendDrag(jointIndex: number, vector: [number, number, number]): number;
  sendDragClear(): number;
}

export interface DragOptions {
  /** Cap on the commanded speed, m/s. */
  maxSpeed?: number;
  /** Minimum interval between frames, ms (the broadcast cadence). */
  minIntervalMs?: number;
  /** Commanded speed per meter of pointer offset, 1/s. */
  gain?: number;
}

export class DragController {
  private jointIndex: number | null = null;
  private plane: Plane = "top";
  private anchor: [number, number] = [0, 0];
  private vector: [number, number, number] = [0, 0, 0];
  private lastSentAt = -Infinity;
  private readonly maxSpeed: number;
  private readonly minIntervalMs: number;
  private readonly gain: number;

  constructor(
    private view: ViewState,
    private emitter: DragEmitter,
    opts: DragOptions = {},
  ) {
    this.maxSpeed = opts.maxSpeed ?? 1.0;
    this.minIntervalMs = opts.minIntervalMs ?? 50;
    this.gain = opts.gain ?? 4.0;
  }

  get active(): boolean {
    return this.jointIndex !== null;
  }

  /**
   * Try to start a drag at a pane-plane world point. Returns the 1-based
   * joint index grabbed, or null (wrong role, no snapshot, nothing close).
   */
  pointerDown(
    plane: Plane,
    world: [number, number],
    pickRadius: number,
    now: number,
  ): number | null {
    if (this.view.role !== "expert") {
      this.view.lastNotice = "viewer role: drag disabled";
      return null;
    }
    const s = this.view.snapshot;
    if (!s) return null;

    // Candidate anchors are the distal ends of links 1..n: entries 1..n of
    // the joints array (entry 0 is the base).
    let best: number | null = null;
    let bestDist = pickRadius;
    for (let j = 1; j < s.joints.length; j++) {
      const p = s.joints[j];
      if (!p) continue;
      const [px, py] = projectWorld(plane, p);
      const d = Math.hypot(px - world[0], py - world[1]);
      if (d <= bestDist) {
        best = j;
        bestDist = d;
      }
    }
    if (best === null) return null;

    this.jointIndex = best;
    this.plane = plane;
    this.anchor = [world[0], world[1]];
    this.vector = [0, 0, 0];
    this.view.activeDrag = { jointIndex: best, vector: [0, 0, 0] };
    this.emit(now, true);
    return best;
  }

  pointerMove(world: [number, number], now: number): void {
    if (this.jointIndex === null) return;
    const dx = (world[0] - this.anchor[0]) * this.gain;
    const dy = (world[1] - this.anchor[1]) * this.gain;
    let v: [number, number, number] =
      this.plane === "top" ? [dx, dy, 0] : [dx, 0, dy];
    const speed = Math.hypot(...v);
    if (speed > this.maxSpeed) {
      const k = this.maxSpeed / speed;
      v = [v[0] * k, v[1] * k, v[2] * k];
    }
    this.vector = v;
    this.view.activeDrag = { jointIndex: this.jointIndex, vector: v };
    this.emit(now, false);
  }

  /** Re-emit the held vector at cadence; call from the render loop. */
  tick(now: number): void {
    if (this.jointIndex === null) return;
    this.emit(now, false);
  }

  /** Release: one clear frame, then idle. */
  pointerUp(): void {
    if (this.jointIndex === null) return;
    this.emitter.sendDragClear();
    this.jointIndex = null;
    this.vector = [0, 0, 0];
    this.view.activeDrag = null;
    this.lastSentAt = -Infinity;
  }

  private emit(now: number, force: boolean): void {
    if (this.jointIndex === null) return;
    if (!force && now - this.lastSentAt < this.minIntervalMs) return;
    this.emitter.sendDrag(this.jointIndex, this.vector);
    this.lastSentAt = now;
  }
}
