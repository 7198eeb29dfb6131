/**
 * Browser entry point. Wiring only; the logic lives in the modules this
 * file imports, which is also where the tests point.
 */
import { ServoClient, serviceUrl } from "./client.js";
import { DragController } from "./drag.js";
import { renderStrip } from "./plots.js";
import {
  fitPane,
  renderCameraPane,
  renderWorldPane,
  screenToWorld,
  statusLine,
  type PaneGeom,
  type Plane,
} from "./scene.js";
import { RegionDraft } from "./region.js";
import { ViewState, type TracePoint } from "./viewstate.js";

function canvas(id: string): [HTMLCanvasElement, CanvasRenderingContext2D] {
  const el = document.getElementById(id) as HTMLCanvasElement | null;
  if (!el) throw new Error(`missing canvas #${id}`);
  const ctx = el.getContext("2d");
  if (!ctx) throw new Error(`no 2d context for #${id}`);
  return [el, ctx];
}

const [topEl, topCtx] = canvas("pane-top");
const [sideEl, sideCtx] = canvas("pane-side");
const [, camCtx] = canvas("pane-camera");
const [, pxCtx] = canvas("plot-px");
const [, resCtx] = canvas("plot-residual");
const [, vCtx] = canvas("plot-v");
const statusEl = document.getElementById("status")!;
const noticeEl = document.getElementById("notice")!;

const view = new ViewState();
let referenceTrace: TracePoint[] = [];

const client = new ServoClient(
  serviceUrl(window.location.host, window.location.search),
  {
    hello: (f) => view.onHello(f, performance.now()),
    state: (f) => view.onState(f, performance.now()),
    summary: (f) => view.onSummary(f, performance.now()),
    ack: (f) => {
      region.onAck(f);
      if (f.cmd === "phase_ctl") view.lastNotice = "";
    },
    error: (f) => {
      region.onError(f);
      view.lastNotice = f.message;
    },
    close: () => view.onClose(),
    badFrame: (raw, err) => {
      console.warn("dropping off-protocol frame", err, raw);
    },
  },
);

const drag = new DragController(view, client);
const region = new RegionDraft(view, client);
let regionArmed = false;

function paneGeom(el: HTMLCanvasElement, plane: Plane): PaneGeom {
  const hello = view.hello;
  if (!hello) {
    return { width: el.width, height: el.height, center: [0, 0], span: 2 };
  }
  return fitPane(
    el.width,
    el.height,
    plane,
    hello.robot.offsets,
    hello.robot.ee_offset,
  );
}

function bindPane(el: HTMLCanvasElement, plane: Plane): void {
  const toWorld = (ev: PointerEvent): [number, number] => {
    const r = el.getBoundingClientRect();
    const g = paneGeom(el, plane);
    return screenToWorld(
      g,
      ((ev.clientX - r.left) / r.width) * el.width,
      ((ev.clientY - r.top) / r.height) * el.height,
    );
  };
  el.addEventListener("pointerdown", (ev) => {
    const w = toWorld(ev);
    if (regionArmed) {
      region.pick(w);
      return;
    }
    const g = paneGeom(el, plane);
    const pickRadius = (20 * g.span) / g.width; // ~20 px in world units
    if (drag.pointerDown(plane, w, pickRadius, performance.now()) !== null) {
      el.setPointerCapture(ev.pointerId);
    }
  });
  el.addEventListener("pointermove", (ev) => {
    if (drag.active) drag.pointerMove(toWorld(ev), performance.now());
  });
  el.addEventListener("pointerup", () => drag.pointerUp());
  el.addEventListener("pointercancel", () => drag.pointerUp());
}

bindPane(topEl, "top");
bindPane(sideEl, "side");

function button(id: string, onClick: () => void): void {
  document.getElementById(id)?.addEventListener("click", onClick);
}

button("btn-pause", () => client.sendPhaseCtl("pause"));
button("btn-resume", () => client.sendPhaseCtl("resume"));
button("btn-step", () => client.sendPhaseCtl("step"));
button("btn-region", () => {
  regionArmed = !regionArmed;
  if (regionArmed) regionArmed = region.begin("top");
  const b = document.getElementById("btn-region");
  if (b) b.textContent = regionArmed ? "picking corners..." : "draw region";
});
document.getElementById("speed")?.addEventListener("change", (ev) => {
  const v = Number((ev.target as HTMLInputElement).value);
  if (Number.isFinite(v) && v >= 0) client.sendPhaseCtl("speed", v);
});

// Optional undisturbed reference (a run log exported by the CLI) for the
// pixel-error band: pick the .jsonl file and the chart shades ref +/- 2 px.
document.getElementById("reference")?.addEventListener("change", (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0];
  if (!file) return;
  file.text().then((text) => {
    const pts: TracePoint[] = [];
    let step = 0;
    for (const line of text.split("\n")) {
      if (!line.trim()) continue;
      try {
        const rec = JSON.parse(line);
        if (typeof rec.pixel_error === "number") {
          pts.push({ step, value: rec.pixel_error });
        }
        if (typeof rec.t === "number" && !("schema" in rec)) step += 1;
      } catch {
        // skip non-JSON lines
      }
    }
    referenceTrace = pts;
    view.lastNotice = `reference loaded: ${pts.length} points`;
  });
});

function frame(): void {
  const now = performance.now();
  drag.tick(now);
  renderWorldPane(topCtx, paneGeom(topEl, "top"), "top", view, now);
  renderWorldPane(sideCtx, paneGeom(sideEl, "side"), "side", view, now);
  renderCameraPane(camCtx, 480, 360, view, now);
  renderStrip(pxCtx, 480, 120, view.pixelError.toArray(), {
    label: "pixel error [px]",
    reference: referenceTrace,
    bandTol: 2.0,
  });
  renderStrip(resCtx, 480, 120, view.residual.toArray(), {
    label: "residual norm",
    color: "#c08030",
  });
  renderStrip(vCtx, 480, 120, view.vMonitor.toArray(), {
    label: "V monitor",
    color: "#2e8540",
  });
  statusEl.textContent = statusLine(view);
  noticeEl.textContent =
    view.lastNotice || (region.status === "rejected" ? region.reason : "");
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
