/**
 * WebSocket client for the simulation service.
 *
 * Incoming messages are validated against the protocol schemas before any
 * handler sees them; outgoing commands go through the same validation on
 * encode. Frames that fail validation are surveyed to `badFrame` and
 * otherwise ignored so one odd message cannot take down the render loop.
 */
import {
  ClientFrame,
  encodeClientFrame,
  parseServerFrame,
  type AckFrame,
  type ErrorFrame,
  type HelloFrame,
  type StateFrame,
  type SummaryFrame,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientHandlers {
  hello?: (f: HelloFrame) => void;
  state?: (f: StateFrame) => void;
  ack?: (f: AckFrame) => void;
  error?: (f: ErrorFrame) => void;
  summary?: (f: SummaryFrame) => void;
  open?: () => void;
  close?: () => void;
  badFrame?: (raw: string, err: unknown) => void;
}

function browserSocket(url: string): SocketLike {
  return new WebSocket(url) as unknown as SocketLike;
}

export class ServoClient {
  private sock: SocketLike;
  private nextSeq = 1;

  constructor(
    url: string,
    private handlers: ClientHandlers,
    factory: SocketFactory = browserSocket,
  ) {
    this.sock = factory(url);
    this.sock.onopen = () => this.handlers.open?.();
    this.sock.onclose = () => this.handlers.close?.();
    this.sock.onerror = () => this.handlers.close?.();
    this.sock.onmessage = (ev) => this.dispatch(String(ev.data));
  }

  private dispatch(raw: string): void {
    let frame;
    try {
      frame = parseServerFrame(raw);
    } catch (err) {
      this.handlers.badFrame?.(raw, err);
      return;
    }
    switch (frame.type) {
      case "hello":
        this.handlers.hello?.(frame);
        break;
      case "state":
        this.handlers.state?.(frame);
        break;
      case "ack":
        this.handlers.ack?.(frame);
        break;
      case "error":
        this.handlers.error?.(frame);
        break;
      case "summary":
        this.handlers.summary?.(frame);
        break;
    }
  }

  /** Validate, stamp a seq, and send. Returns the seq used. */
  send(frame: ClientFrame): number {
    const seq = this.nextSeq++;
    this.sock.send(encodeClientFrame({ ...frame, seq }));
    return seq;
  }

  sendDrag(jointIndex: number, vector: [number, number, number]): number {
    return this.send({ type: "drag", joint_index: jointIndex, drag: vector });
  }

  sendDragClear(): number {
    return this.send({ type: "drag", drag: null });
  }

  sendRegion(
    center: [number, number, number],
    halfSizes: [number, number, number],
  ): number {
    return this.send({ type: "region", center, half_sizes: halfSizes });
  }

  sendPhaseCtl(
    action: "pause" | "resume" | "speed" | "step",
    value?: number,
  ): number {
    const frame: ClientFrame =
      value === undefined
        ? { type: "phase_ctl", action }
        : { type: "phase_ctl", action, value };
    return this.send(frame);
  }

  close(): void {
    this.sock.close();
  }
}

/** Build the service URL from page location plus query overrides. */
export function serviceUrl(
  locationHost: string,
  search: string,
): string {
  const params = new URLSearchParams(search);
  const host = params.get("host") ?? locationHost;
  const role = params.get("role");
  const qs = role ? `?role=${encodeURIComponent(role)}` : "";
  return `ws://${host}/ws${qs}`;
}
