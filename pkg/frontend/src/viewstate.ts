/**
 * Client-side view of the simulation.
 *
 * Everything here is derived from server frames; the UI holds no
 * simulation truth of its own, so a reconnect rebuilds the identical
 * scene from the next snapshot.
 */
import type { HelloFrame, StateFrame, SummaryFrame } from "./protocol.js";
import { Ring } from "./ring.js";

export type ConnectionStatus = "connecting" | "connected" | "closed";

export interface TracePoint {
  step: number;
  value: number;
}

export interface ActiveDrag {
  jointIndex: number; // 1-based, as on the wire
  vector: [number, number, number];
}

const TRACE_CAPACITY = 4096;

/** Snapshot age (ms) beyond which the scene is flagged as stale. */
export const STALE_AFTER_MS = 1000;

export class ViewState {
  connection: ConnectionStatus = "connecting";
  hello: HelloFrame | null = null;
  snapshot: StateFrame | null = null;
  summary: SummaryFrame | null = null;
  /** Drag currently held by this client's pointer, null when idle. */
  activeDrag: ActiveDrag | null = null;
  lastNotice = "";

  readonly pixelError = new Ring<TracePoint>(TRACE_CAPACITY);
  readonly residual = new Ring<TracePoint>(TRACE_CAPACITY);
  readonly vMonitor = new Ring<TracePoint>(TRACE_CAPACITY);

  private lastFrameAt = 0;

  get role(): "expert" | "viewer" | null {
    return this.hello ? this.hello.role : null;
  }

  onHello(frame: HelloFrame, now: number): void {
    this.hello = frame;
    this.connection = "connected";
    this.lastFrameAt = now;
    // A reconnect starts a fresh stream; old traces belong to the old run.
    this.pixelError.clear();
    this.residual.clear();
    this.vMonitor.clear();
    this.snapshot = null;
    this.summary = null;
  }

  onState(frame: StateFrame, now: number): void {
    this.snapshot = frame;
    this.lastFrameAt = now;
    if (frame.pixel_error !== null) {
      this.pixelError.push({ step: frame.step, value: frame.pixel_error });
    }
    if (frame.residual_norm !== undefined) {
      this.residual.push({ step: frame.step, value: frame.residual_norm });
    }
    if (frame.V !== undefined) {
      this.vMonitor.push({ step: frame.step, value: frame.V });
    }
  }

  onSummary(frame: SummaryFrame, now: number): void {
    this.summary = frame;
    this.lastFrameAt = now;
  }

  onClose(): void {
    this.connection = "closed";
    this.activeDrag = null;
  }

  /** True when no frame has arrived for over a second (or never). */
  isStale(now: number): boolean {
    if (this.connection !== "connected") return true;
    return now - this.lastFrameAt > STALE_AFTER_MS;
  }
}
