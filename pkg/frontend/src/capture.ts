/**
 * Live signature capture on a canvas via pointer events.
 *
 * The buffer records (t, x, y, p, pen) at event rate. Time origin is the
 * first pointer-down of the attempt; timestamps are forced strictly
 * increasing (burst events can share a millisecond). Pressure is clamped
 * to [0,1]; pointers that report none (mouse) get a constant 0.5 and the
 * device id is tagged "no-pressure" so the server can log capture quality.
 */

import { WirePoint, WireSample } from "./wire.js";

export class CaptureBuffer {
  points: WirePoint[] = [];
  devicePixelRatio: number;
  canvasWidth: number;
  canvasHeight: number;
  private origin: number | null = null;
  private sawPressure = false;
  private pointerType = "unknown";

  constructor(width = 0, height = 0, dpr = 1) {
    this.canvasWidth = width;
    this.canvasHeight = height;
    this.devicePixelRatio = dpr;
  }

  get started(): boolean {
    return this.origin !== null;
  }

  get isEmpty(): boolean {
    return this.points.length === 0;
  }

  add(nowMs: number, x: number, y: number, pressure: number | undefined, pen: boolean, pointerType?: string): void {
    if (this.origin === null) {
      if (!pen) return; // attempt starts at the first pen-down
      this.origin = nowMs;
    }
    if (pointerType) this.pointerType = pointerType;
    let p = 0.5;
    if (pressure !== undefined && pressure > 0) {
      this.sawPressure = true;
      p = Math.min(1, Math.max(0, pressure));
    }
    let t = Math.round(nowMs - this.origin);
    const last = this.points[this.points.length - 1];
    if (last !== undefined && t <= last.t) t = last.t + 1;
    if (t < 0) t = last === undefined ? 0 : last.t + 1;
    this.points.push({ t, x, y, p, pen });
  }

  clear(): void {
    this.points = [];
    this.origin = null;
    this.sawPressure = false;
    this.pointerType = "unknown";
  }

  deviceId(): string {
    const pressure = this.sawPressure ? "pressure" : "no-pressure";
    return `web-${this.pointerType}-${pressure}`;
  }

  toSample(): WireSample {
    return { device_id: this.deviceId(), points: [...this.points] };
  }
}

export interface CapturePad {
  buffer: CaptureBuffer;
  clear(): void;
  detach(): void;
}

/** Wire a canvas up as a signature pad: ink rendering + buffering. */
export function attachCapture(canvas: HTMLCanvasElement, now: () => number = () => performance.now()): CapturePad {
  const buffer = new CaptureBuffer(canvas.width, canvas.height, globalThis.devicePixelRatio ?? 1);
  // jsdom implements getContext by throwing (and logging); skip ink there
  const headless = typeof navigator !== "undefined" && /jsdom/i.test(navigator.userAgent);
  let ctx: CanvasRenderingContext2D | null = null;
  if (!headless) {
    try {
      ctx = canvas.getContext("2d");
    } catch {
      ctx = null;
    }
  }
  let drawing = false;
  let lastX = 0;
  let lastY = 0;

  function pos(ev: PointerEvent): [number, number] {
    const rect = canvas.getBoundingClientRect();
    return [ev.clientX - rect.left, ev.clientY - rect.top];
  }

  function ink(x: number, y: number, pressure: number) {
    if (!ctx) return;
    ctx.strokeStyle = "#1a2742";
    ctx.lineWidth = 1 + 3 * pressure;
    ctx.lineCap = "round";
    ctx.beginPath();
    ctx.moveTo(lastX, lastY);
    ctx.lineTo(x, y);
    ctx.stroke();
  }

  function onDown(ev: PointerEvent) {
    drawing = true;
    const [x, y] = pos(ev);
    lastX = x;
    lastY = y;
    canvas.setPointerCapture?.(ev.pointerId);
    buffer.add(now(), x, y, ev.pressure, true, ev.pointerType);
    ev.preventDefault?.();
  }

  function onMove(ev: PointerEvent) {
    if (!buffer.started) return;
    const [x, y] = pos(ev);
    buffer.add(now(), x, y, ev.pressure, drawing);
    if (drawing) {
      ink(x, y, ev.pressure || 0.5);
      lastX = x;
      lastY = y;
    }
  }

  function onUp(ev: PointerEvent) {
    if (!drawing) return;
    drawing = false;
    const [x, y] = pos(ev);
    // pen-up gap marker: the stroke ended but the attempt continues
    buffer.add(now(), x, y, ev.pressure, false);
  }

  canvas.addEventListener("pointerdown", onDown as EventListener);
  canvas.addEventListener("pointermove", onMove as EventListener);
  canvas.addEventListener("pointerup", onUp as EventListener);

  return {
    buffer,
    clear() {
      buffer.clear();
      drawing = false;
      ctx?.clearRect(0, 0, canvas.width, canvas.height);
    },
    detach() {
      canvas.removeEventListener("pointerdown", onDown as EventListener);
      canvas.removeEventListener("pointermove", onMove as EventListener);
      canvas.removeEventListener("pointerup", onUp as EventListener);
    },
  };
}
