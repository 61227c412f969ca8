/** Synthetic pointer-event strokes for driving the capture pad in tests. */

export interface StrokeOptions {
  points?: number;
  amplitude?: number;
  phase?: number;
  baseX?: number;
  baseY?: number;
  pressure?: number | undefined;
}

export function dispatchPointer(
  target: EventTarget,
  type: string,
  x: number,
  y: number,
  pressure?: number,
): void {
  const event = new MouseEvent(type, { clientX: x, clientY: y, bubbles: true });
  if (pressure !== undefined) {
    Object.defineProperty(event, "pressure", { value: pressure });
    Object.defineProperty(event, "pointerType", { value: "pen" });
  }
  target.dispatchEvent(event);
}

/** Draw one wavy signature-like stroke through real pointer events. */
export function drawStroke(canvas: HTMLCanvasElement, opts: StrokeOptions = {}): void {
  const n = opts.points ?? 60;
  const amplitude = opts.amplitude ?? 40;
  const phase = opts.phase ?? 0;
  const baseX = opts.baseX ?? 60;
  const baseY = opts.baseY ?? 140;
  const xy = (i: number): [number, number] => [
    baseX + i * 8 + 6 * Math.sin(i / 3 + phase),
    baseY + amplitude * Math.sin(i / 5 + phase) + 12 * Math.cos(i / 2),
  ];
  const press = (i: number) =>
    opts.pressure === undefined ? undefined : Math.min(1, opts.pressure + 0.2 * Math.sin(i / 7));

  const [x0, y0] = xy(0);
  dispatchPointer(canvas, "pointerdown", x0, y0, press(0));
  for (let i = 1; i < n - 1; i++) {
    const [x, y] = xy(i);
    dispatchPointer(canvas, "pointermove", x, y, press(i));
  }
  const [xn, yn] = xy(n - 1);
  dispatchPointer(canvas, "pointerup", xn, yn, press(n - 1));
}

/** A genuine-looking attempt: same base curve, small bounded per-attempt variation. */
export function drawGenuine(canvas: HTMLCanvasElement, attempt: number): void {
  drawStroke(canvas, {
    amplitude: 40 + 1.5 * Math.sin(attempt * 2.3),
    phase: 0.06 * Math.sin(attempt * 1.3),
    pressure: 0.5,
  });
}

/** A clearly different curve, used to provoke rejections. */
export function drawForgery(canvas: HTMLCanvasElement, attempt: number): void {
  drawStroke(canvas, {
    amplitude: 90,
    phase: 1.7 + attempt,
    baseY: 120,
    pressure: 0.9,
  });
}
