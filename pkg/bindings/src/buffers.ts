/**
 * Caller-owned contiguous buffer views.
 *
 * Every bound function takes and returns data through these views: the
 * caller allocates both input and output storage, the bindings never
 * retain a reference past the call.  Float payloads are 32-bit IEEE-754
 * little-endian; masks are 0/1 bytes.
 */

export interface BufferView {
  /** Contiguous row-major payload; Float32Array for tensors, Uint8Array for masks. */
  readonly data: Float32Array | Uint8Array;
  /** Logical dimensions; product must equal data.length. */
  readonly shape: readonly number[];
}

export class ShapeError extends Error {}

export function elementCount(shape: readonly number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

function describe(view: BufferView): string {
  return `[${view.shape.join(", ")}] x ${view.data.constructor.name}`;
}

/** Validate rank, element count and payload kind before anything is written. */
export function checkView(
  view: BufferView,
  rank: number,
  kind: "f32" | "u8",
  label: string,
): void {
  if (view.shape.length !== rank) {
    throw new ShapeError(`${label}: expected rank ${rank}, got ${describe(view)}`);
  }
  if (view.shape.some((d) => !Number.isInteger(d) || d < 1)) {
    throw new ShapeError(`${label}: non-positive dimension in ${describe(view)}`);
  }
  if (elementCount(view.shape) !== view.data.length) {
    throw new ShapeError(
      `${label}: shape ${describe(view)} does not match length ${view.data.length}`,
    );
  }
  const wantFloat = kind === "f32";
  const isFloat = view.data instanceof Float32Array;
  if (wantFloat !== isFloat) {
    throw new ShapeError(`${label}: expected ${kind} payload, got ${describe(view)}`);
  }
}

export function sameShape(a: readonly number[], b: readonly number[]): boolean {
  return a.length === b.length && a.every((d, i) => d === b[i]);
}

/** An attention stack is [H, W, t, t]. */
export function checkAttention(view: BufferView, label: string): void {
  checkView(view, 4, "f32", label);
  if (view.shape[2] !== view.shape[3]) {
    throw new ShapeError(`${label}: trailing dims must agree, got [${view.shape.join(", ")}]`);
  }
}
