/**
 * Strip charts for the telemetry ring buffers, plus the deviation check
 * used by the transparency demo: a live pixel-error trace is compared
 * step-by-step against an undisturbed reference run and must stay inside
 * a tolerance band around it.
 */
import type { Pane2D } from "./scene.js";
import type { TracePoint } from "./viewstate.js";

export interface BandReport {
  /** Steps present in both traces. */
  comparedCount: number;
  maxDeviation: number;
  withinBand: boolean;
}

/** Worst |live - reference| over the steps the traces share. */
export function bandDeviation(
  live: Iterable<TracePoint>,
  reference: Iterable<TracePoint>,
  tol: number,
): BandReport {
  const ref = new Map<number, number>();
  for (const p of reference) ref.set(p.step, p.value);
  let maxDeviation = 0;
  let comparedCount = 0;
  for (const p of live) {
    const r = ref.get(p.step);
    if (r === undefined) continue;
    comparedCount += 1;
    maxDeviation = Math.max(maxDeviation, Math.abs(p.value - r));
  }
  return {
    comparedCount,
    maxDeviation,
    withinBand: comparedCount > 0 && maxDeviation <= tol,
  };
}

export interface StripOptions {
  label: string;
  color?: string;
  /** Undisturbed reference trace; drawn with a ± bandTol envelope. */
  reference?: TracePoint[];
  bandTol?: number;
}

export interface StripSummary {
  pointsDrawn: number;
  yRange: [number, number];
  bandDrawn: boolean;
  band: BandReport | null;
}

export function renderStrip(
  ctx: Pane2D,
  width: number,
  height: number,
  trace: TracePoint[],
  opts: StripOptions,
): StripSummary {
  ctx.clearRect(0, 0, width, height);
  const tol = opts.bandTol ?? 2.0;
  const ref = opts.reference ?? [];
  const out: StripSummary = {
    pointsDrawn: 0,
    yRange: [0, 1],
    bandDrawn: false,
    band: null,
  };

  const all = trace.concat(ref);
  ctx.fillStyle = "#666";
  ctx.font = "12px sans-serif";
  if (all.length === 0) {
    ctx.fillText(`${opts.label}: no data`, 8, 14);
    return out;
  }

  let s0 = Infinity;
  let s1 = -Infinity;
  let lo = Infinity;
  let hi = -Infinity;
  for (const p of all) {
    s0 = Math.min(s0, p.step);
    s1 = Math.max(s1, p.step);
    lo = Math.min(lo, p.value);
    hi = Math.max(hi, p.value);
  }
  if (ref.length > 0) {
    lo -= tol;
    hi += tol;
  }
  if (hi - lo < 1e-12) hi = lo + 1;
  const pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  out.yRange = [lo, hi];

  const sx = (step: number) =>
    s1 === s0 ? width / 2 : ((step - s0) / (s1 - s0)) * (width - 16) + 8;
  const sy = (v: number) => height - 4 - ((v - lo) / (hi - lo)) * (height - 22);

  if (ref.length > 1) {
    // Tolerance envelope around the reference, drawn as a closed strip.
    ctx.fillStyle = "rgba(120, 160, 120, 0.25)";
    ctx.beginPath();
    ref.forEach((p, i) => {
      const x = sx(p.step);
      const y = sy(p.value + tol);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    for (let i = ref.length - 1; i >= 0; i--) {
      const p = ref[i]!;
      ctx.lineTo(sx(p.step), sy(p.value - tol));
    }
    ctx.fill();
    out.bandDrawn = true;
    out.band = bandDeviation(trace, ref, tol);
  }

  ctx.strokeStyle = opts.color ?? "#4a90d9";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  trace.forEach((p, i) => {
    const x = sx(p.step);
    const y = sy(p.value);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
    out.pointsDrawn += 1;
  });
  ctx.stroke();

  const last = trace.length > 0 ? trace[trace.length - 1]!.value : null;
  ctx.fillStyle = "#666";
  let title = `${opts.label}${last !== null ? `: ${last.toFixed(3)}` : ""}`;
  if (out.band) {
    const verdict = out.band.withinBand ? "within" : "OUTSIDE";
    title += `  band ${verdict} +/-${tol} (max dev ${out.band.maxDeviation.toFixed(3)})`;
  }
  ctx.fillText(title, 8, 14);
  return out;
}
