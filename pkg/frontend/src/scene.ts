/**
 * Canvas rendering: two orthographic world panes (top = x/y, side = x/z)
 * plus the camera-image pane. Drawing goes through the small Pane2D
 * surface so tests can substitute a recording context; each renderer also
 * returns a summary of what it put on screen, which is what the tests
 * assert against.
 */
import type { StateFrame } from "./protocol.js";
import type { ViewState } from "./viewstate.js";

/** The slice of CanvasRenderingContext2D the renderers use. */
export interface Pane2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  ellipse(
    x: number,
    y: number,
    rx: number,
    ry: number,
    rot: number,
    a0: number,
    a1: number,
  ): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

export type Plane = "top" | "side";

export interface PaneGeom {
  width: number;
  height: number;
  /** World coordinates at the pane center, in the pane's two axes. */
  center: [number, number];
  /** World meters spanned by the pane width. */
  span: number;
}

export function projectWorld(
  plane: Plane,
  p: readonly [number, number, number],
): [number, number] {
  return plane === "top" ? [p[0], p[1]] : [p[0], p[2]];
}

export function worldToScreen(
  g: PaneGeom,
  wx: number,
  wy: number,
): [number, number] {
  const scale = g.width / g.span;
  return [
    g.width / 2 + (wx - g.center[0]) * scale,
    g.height / 2 - (wy - g.center[1]) * scale, // world up is screen up
  ];
}

export function screenToWorld(
  g: PaneGeom,
  sx: number,
  sy: number,
): [number, number] {
  const scale = g.width / g.span;
  return [
    g.center[0] + (sx - g.width / 2) / scale,
    g.center[1] - (sy - g.height / 2) / scale,
  ];
}

/** Pick pane geometry that keeps the whole arm in view. */
export function fitPane(
  width: number,
  height: number,
  plane: Plane,
  offsets: ReadonlyArray<readonly [number, number, number]>,
  eeOffset: readonly [number, number, number],
): PaneGeom {
  let reach = Math.hypot(...eeOffset);
  for (const o of offsets) reach += Math.hypot(...o);
  const span = Math.max(2.4 * reach, 0.5);
  return plane === "top"
    ? { width, height, center: [0, 0], span }
    : { width, height, center: [0, reach / 2], span };
}

const LINK_COLOR = "#4a90d9";
const BOX_COLOR = "#c08030";
const OBJECT_COLOR = "#2e8540";
const FEATURE_COLOR = "#d04040";
const DRAG_COLOR = "#8040c0";

export interface WorldPaneSummary {
  /** Screen positions of joint origins plus end effector, base first. */
  linkPoints: Array<[number, number]>;
  /** Projected Cartesian box, screen rect, null before the first state. */
  boxRect: { x: number; y: number; w: number; h: number } | null;
  featurePoint: [number, number] | null;
  objectPoint: [number, number] | null;
  dragArrow: { from: [number, number]; to: [number, number] } | null;
  badge: string | null;
}

function drawBadge(ctx: Pane2D, g: PaneGeom, text: string): void {
  ctx.fillStyle = "#b03030";
  ctx.font = "14px sans-serif";
  ctx.fillText(text, 8, 18);
}

export function renderWorldPane(
  ctx: Pane2D,
  g: PaneGeom,
  plane: Plane,
  view: ViewState,
  now: number,
): WorldPaneSummary {
  ctx.clearRect(0, 0, g.width, g.height);
  const out: WorldPaneSummary = {
    linkPoints: [],
    boxRect: null,
    featurePoint: null,
    objectPoint: null,
    dragArrow: null,
    badge: null,
  };
  const s = view.snapshot;
  if (view.isStale(now)) {
    out.badge = view.connection === "connected" ? "stale" : "disconnected";
    drawBadge(ctx, g, out.badge);
  }
  if (!s) return out;

  // Cartesian box, axis-aligned in every orthographic projection.
  const [bc, bh] = [s.box.center, s.box.half_sizes];
  const c2 = projectWorld(plane, bc);
  const h2 = plane === "top" ? [bh[0], bh[1]] : [bh[0], bh[2]];
  const [bx0, by0] = worldToScreen(g, c2[0] - h2[0]!, c2[1] + h2[1]!);
  const [bx1, by1] = worldToScreen(g, c2[0] + h2[0]!, c2[1] - h2[1]!);
  out.boxRect = { x: bx0, y: by0, w: bx1 - bx0, h: by1 - by0 };
  ctx.strokeStyle = BOX_COLOR;
  ctx.lineWidth = 1;
  ctx.strokeRect(out.boxRect.x, out.boxRect.y, out.boxRect.w, out.boxRect.h);

  // Links as a polyline through the logged joint origins.
  ctx.strokeStyle = LINK_COLOR;
  ctx.lineWidth = 3;
  ctx.beginPath();
  s.joints.forEach((p, i) => {
    const [sx, sy] = worldToScreen(g, ...projectWorld(plane, p));
    out.linkPoints.push([sx, sy]);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.stroke();
  ctx.fillStyle = LINK_COLOR;
  for (const [sx, sy] of out.linkPoints) {
    ctx.beginPath();
    ctx.arc(sx, sy, 3, 0, 2 * Math.PI);
    ctx.fill();
  }

  // The tracked feature rides on the end effector: always present here,
  // whether or not the camera can see it.
  const [fx, fy] = worldToScreen(g, ...projectWorld(plane, s.ee_t));
  out.featurePoint = [fx, fy];
  ctx.fillStyle = FEATURE_COLOR;
  ctx.beginPath();
  ctx.arc(fx, fy, 5, 0, 2 * Math.PI);
  ctx.fill();

  if (s.object) {
    const [ox, oy] = worldToScreen(g, ...projectWorld(plane, s.object));
    out.objectPoint = [ox, oy];
    ctx.fillStyle = OBJECT_COLOR;
    ctx.beginPath();
    ctx.arc(ox, oy, 5, 0, 2 * Math.PI);
    ctx.fill();
  }

  const drag = s.drag;
  if (drag) {
    const anchor = s.joints[Math.min(drag.joint_index, s.joints.length - 1)];
    if (anchor) {
      const from = worldToScreen(g, ...projectWorld(plane, anchor));
      const v = projectWorld(plane, drag.drag);
      const scale = g.width / g.span;
      const to: [number, number] = [
        from[0] + v[0] * scale * 0.25,
        from[1] - v[1] * scale * 0.25,
      ];
      out.dragArrow = { from, to };
      ctx.strokeStyle = DRAG_COLOR;
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(from[0], from[1]);
      ctx.lineTo(to[0], to[1]);
      ctx.stroke();
    }
  }
  return out;
}

export interface CameraPaneSummary {
  /** Screen rect of the camera field of view. */
  fovRect: { x: number; y: number; w: number; h: number };
  featurePoint: [number, number] | null;
  targetPoint: [number, number] | null;
  ellipse: { cx: number; cy: number; rx: number; ry: number } | null;
  badge: string | null;
}

export function renderCameraPane(
  ctx: Pane2D,
  width: number,
  height: number,
  view: ViewState,
  now: number,
): CameraPaneSummary {
  ctx.clearRect(0, 0, width, height);
  const hello = view.hello;
  const s = view.snapshot;
  const out: CameraPaneSummary = {
    fovRect: { x: 0, y: 0, w: width, h: height },
    featurePoint: null,
    targetPoint: null,
    ellipse: null,
    badge: null,
  };
  if (view.isStale(now)) {
    out.badge = view.connection === "connected" ? "stale" : "disconnected";
    drawBadge(ctx, { width, height, center: [0, 0], span: 1 }, out.badge);
  }
  if (!hello) return out;

  // Fit the image into the pane with a small margin.
  const m = 10;
  const sc = Math.min(
    (width - 2 * m) / hello.camera.width,
    (height - 2 * m) / hello.camera.height,
  );
  const img = (px: readonly [number, number]): [number, number] => [
    m + px[0] * sc,
    m + px[1] * sc,
  ];
  out.fovRect = {
    x: m,
    y: m,
    w: hello.camera.width * sc,
    h: hello.camera.height * sc,
  };
  ctx.strokeStyle = "#888";
  ctx.lineWidth = 1;
  ctx.strokeRect(out.fovRect.x, out.fovRect.y, out.fovRect.w, out.fovRect.h);
  if (!s) return out;

  // Vision ellipse rides on the detected target.
  if (s.target_px) {
    const [cx, cy] = img(s.target_px);
    out.ellipse = {
      cx,
      cy,
      rx: hello.vision.b[0] * sc,
      ry: hello.vision.b[1] * sc,
    };
    ctx.strokeStyle = OBJECT_COLOR;
    ctx.beginPath();
    ctx.ellipse(cx, cy, out.ellipse.rx, out.ellipse.ry, 0, 0, 2 * Math.PI);
    ctx.stroke();
    out.targetPoint = [cx, cy];
    ctx.beginPath();
    ctx.moveTo(cx - 6, cy);
    ctx.lineTo(cx + 6, cy);
    ctx.moveTo(cx, cy - 6);
    ctx.lineTo(cx, cy + 6);
    ctx.stroke();
  }

  // Feature marker only exists when the camera actually sees it.
  if (s.px) {
    const [fx, fy] = img(s.px);
    out.featurePoint = [fx, fy];
    ctx.fillStyle = FEATURE_COLOR;
    ctx.beginPath();
    ctx.arc(fx, fy, 4, 0, 2 * Math.PI);
    ctx.fill();
  }
  return out;
}

/** One-line status string for the header bar. */
export function statusLine(view: ViewState): string {
  if (!view.hello) return "connecting";
  const s: StateFrame | null = view.snapshot;
  if (!s) return `${view.hello.header.name} (${view.role})`;
  const halt = view.summary
    ? ` ${view.summary.status}: ${view.summary.detail}`
    : "";
  const err = s.pixel_error === null ? "n/a" : s.pixel_error.toFixed(2);
  return (
    `${view.hello.header.name} (${view.role})  step ${s.step}  ` +
    `t=${s.t.toFixed(3)}s  ${s.phase}  px_err=${err}${halt}`
  );
}
