/**
 * Two-corner box drawing. The picks land in one world pane, so they fix
 * two axes of the new region; the third axis keeps its extent from the box
 * currently in force. The frame is validated locally (no degenerate
 * boxes), then the server has the final word and its verdict is reflected
 * back into the draft state.
 */
import type { AckFrame, ErrorFrame } from "./protocol.js";
import type { Plane } from "./scene.js";
import type { ViewState } from "./viewstate.js";

export interface RegionEmitter {
  sendRegion(
    center: [number, number, number],
    halfSizes: [number, number, number],
  ): number;
}

export type RegionStatus =
  | "idle"
  | "picking"
  | "pending"
  | "accepted"
  | "rejected";

const MIN_HALF = 1e-6;

export class RegionDraft {
  status: RegionStatus = "idle";
  reason = "";
  private plane: Plane = "top";
  private firstCorner: [number, number] | null = null;
  private pendingSeq: number | null = null;

  constructor(
    private view: ViewState,
    private emitter: RegionEmitter,
  ) {}

  /** Arm the tool. Returns false (with a notice) for viewers. */
  begin(plane: Plane): boolean {
    if (this.view.role !== "expert") {
      this.view.lastNotice = "viewer role: region drawing disabled";
      return false;
    }
    this.plane = plane;
    this.firstCorner = null;
    this.status = "picking";
    this.reason = "";
    return true;
  }

  /** In-progress corner, for rubber-band rendering. */
  get draftCorner(): [number, number] | null {
    return this.firstCorner;
  }

  pick(world: [number, number]): void {
    if (this.status !== "picking") return;
    if (!this.firstCorner) {
      this.firstCorner = [world[0], world[1]];
      return;
    }
    const a = this.firstCorner;
    const b = world;
    this.firstCorner = null;

    const snap = this.view.snapshot;
    if (!snap) {
      this.status = "rejected";
      this.reason = "no simulation state yet";
      return;
    }
    const lo = [Math.min(a[0], b[0]), Math.min(a[1], b[1])];
    const hi = [Math.max(a[0], b[0]), Math.max(a[1], b[1])];
    const c2 = [(lo[0]! + hi[0]!) / 2, (lo[1]! + hi[1]!) / 2];
    const h2 = [(hi[0]! - lo[0]!) / 2, (hi[1]! - lo[1]!) / 2];
    if (h2[0]! < MIN_HALF || h2[1]! < MIN_HALF) {
      this.status = "rejected";
      this.reason = "degenerate box (zero volume)";
      return;
    }

    const cur = snap.box;
    let center: [number, number, number];
    let half: [number, number, number];
    if (this.plane === "top") {
      center = [c2[0]!, c2[1]!, cur.center[2]];
      half = [h2[0]!, h2[1]!, cur.half_sizes[2]];
    } else {
      center = [c2[0]!, cur.center[1], c2[1]!];
      half = [h2[0]!, cur.half_sizes[1], h2[1]!];
    }
    this.pendingSeq = this.emitter.sendRegion(center, half);
    this.status = "pending";
  }

  onAck(frame: AckFrame): void {
    if (frame.cmd === "region" && frame.seq === this.pendingSeq) {
      this.status = "accepted";
      this.pendingSeq = null;
    }
  }

  onError(frame: ErrorFrame): void {
    if (frame.seq !== null && frame.seq === this.pendingSeq) {
      this.status = "rejected";
      this.reason = frame.message;
      this.pendingSeq = null;
    }
  }
}
