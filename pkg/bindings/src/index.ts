/**
 * Buffer-level bindings for the motionfield core.
 *
 * Each bound function mirrors one core operation over caller-owned
 * contiguous buffers: inputs are validated, marshalled to MTN1 files in a
 * private temp directory, the core CLI does the work, and the result is
 * copied into the caller-provided output buffer.  The bindings contain no
 * numerical logic, so outputs are bit-identical to the CLI on the same
 * inputs.  Buffers are never retained past the call; concurrent calls on
 * disjoint buffers are safe.
 */
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import {
  BufferView,
  ShapeError,
  checkAttention,
  checkView,
  sameShape,
} from "./buffers";
import { runCore } from "./cli";
import { readMtn, writeMtn } from "./mtn";

export { BufferView, ShapeError } from "./buffers";
export { CoreError } from "./cli";
export { readMtn, writeMtn, MtnTensor, TensorKind } from "./mtn";

export interface CompletionReport {
  iterations: number;
  residual: number;
  channels: number;
  converged: boolean;
}

export interface ExtractionReport {
  pixels: number;
  fallback_pixels: number;
  tie_pixels: number;
}

export interface SolverOptions {
  omega?: number;
  tolerance?: number;
  maxIterations?: number;
}

export interface ClusterOptions {
  window?: number;
  eps?: number;
  minPoints?: number;
  perplexity?: number;
  seed?: number;
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "motionfield-"));
  try {
    return fn(dir);
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}

function copyInto(out: BufferView, produced: BufferView, label: string): void {
  if (!sameShape(out.shape, produced.shape)) {
    throw new ShapeError(
      `${label}: output buffer is [${out.shape.join(", ")}], result is [${produced.shape.join(", ")}]`,
    );
  }
  (out.data as Float32Array).set(produced.data as Float32Array);
}

/**
 * Harmonically fill the attention stack inside the mask.  The output
 * buffer receives the completed stack even when the solver stops without
 * converging (report.converged = false); the caller decides what to do.
 */
export function completeAttention(
  attn: BufferView,
  mask: BufferView,
  out: BufferView,
  options: SolverOptions = {},
): CompletionReport {
  checkAttention(attn, "attn");
  checkView(mask, 2, "u8", "mask");
  checkAttention(out, "out");
  if (mask.shape[0] !== attn.shape[0] || mask.shape[1] !== attn.shape[1]) {
    throw new ShapeError("mask dimensions do not match the attention stack");
  }
  if (!sameShape(out.shape, attn.shape)) {
    throw new ShapeError("output buffer shape must match the input stack");
  }
  return withTempDir((dir) => {
    const attnPath = path.join(dir, "attn.mtn");
    const maskPath = path.join(dir, "mask.mtn");
    const outPath = path.join(dir, "out.mtn");
    writeMtn(attnPath, attn, "attention");
    writeMtn(maskPath, mask, "mask");
    const args = [
      "poisson-complete", "--attn", attnPath, "--mask", maskPath, "--out", outPath,
    ];
    if (options.omega !== undefined) args.push("--omega", String(options.omega));
    if (options.tolerance !== undefined) args.push("--tol", String(options.tolerance));
    if (options.maxIterations !== undefined) {
      args.push("--max-iters", String(options.maxIterations));
    }
    const result = runCore(args, true);
    copyInto(out, readMtn(outPath).view, "completeAttention");
    return JSON.parse(result.stdout) as CompletionReport;
  });
}

/** Common camera motion of m stacks by window clustering. */
export function extractCommonMotion(
  stacks: BufferView[],
  out: BufferView,
  options: ClusterOptions = {},
): ExtractionReport {
  if (stacks.length < 2) {
    throw new ShapeError("extractCommonMotion needs at least 2 stacks");
  }
  stacks.forEach((s, i) => checkAttention(s, `stacks[${i}]`));
  checkAttention(out, "out");
  for (const s of stacks) {
    if (!sameShape(s.shape, stacks[0].shape)) {
      throw new ShapeError("all stacks must share dimensions");
    }
  }
  if (!sameShape(out.shape, stacks[0].shape)) {
    throw new ShapeError("output buffer shape must match the input stacks");
  }
  return withTempDir((dir) => {
    const outPath = path.join(dir, "out.mtn");
    const args = ["extract-few-shot"];
    stacks.forEach((s, i) => {
      const p = path.join(dir, `s${i}.mtn`);
      writeMtn(p, s, "attention");
      args.push("--attn", p);
    });
    args.push("--out", outPath);
    if (options.window !== undefined) args.push("--k", String(options.window));
    if (options.eps !== undefined) args.push("--eps", String(options.eps));
    if (options.minPoints !== undefined) args.push("--min-pts", String(options.minPoints));
    if (options.perplexity !== undefined) {
      args.push("--perplexity", String(options.perplexity));
    }
    if (options.seed !== undefined) args.push("--seed", String(options.seed));
    const result = runCore(args);
    copyInto(out, readMtn(outPath).view, "extractCommonMotion");
    return JSON.parse(result.stdout) as ExtractionReport;
  });
}

/** Elementwise weighted sum of camera motions. */
export function weightedCombine(
  stacks: BufferView[],
  weights: number[],
  out: BufferView,
  policy: "strict" | "renormalize_rows" | "none" = "strict",
): void {
  if (stacks.length === 0 || stacks.length !== weights.length) {
    throw new ShapeError("need one weight per stack");
  }
  stacks.forEach((s, i) => checkAttention(s, `stacks[${i}]`));
  checkAttention(out, "out");
  if (!sameShape(out.shape, stacks[0].shape)) {
    throw new ShapeError("output buffer shape must match the input stacks");
  }
  withTempDir((dir) => {
    const outPath = path.join(dir, "out.mtn");
    const args = ["combine"];
    stacks.forEach((s, i) => {
      const p = path.join(dir, `s${i}.mtn`);
      writeMtn(p, s, "attention");
      args.push("--attn", p, "--weight", String(weights[i]));
    });
    args.push("--policy", policy, "--out", outPath);
    runCore(args);
    copyInto(out, readMtn(outPath).view, "weightedCombine");
  });
}

/** Stitch per-region motions; masks select whole per-pixel matrices. */
export function regionCompose(
  pairs: Array<{ mask: BufferView; attn: BufferView }>,
  out: BufferView,
  policy: "require_partition" | "sum_then_renormalize" = "require_partition",
): void {
  if (pairs.length === 0) throw new ShapeError("need at least one region");
  pairs.forEach(({ mask, attn }, i) => {
    checkView(mask, 2, "u8", `pairs[${i}].mask`);
    checkAttention(attn, `pairs[${i}].attn`);
  });
  checkAttention(out, "out");
  if (!sameShape(out.shape, pairs[0].attn.shape)) {
    throw new ShapeError("output buffer shape must match the member stacks");
  }
  withTempDir((dir) => {
    const outPath = path.join(dir, "out.mtn");
    const args = ["compose-regions"];
    pairs.forEach(({ mask, attn }, i) => {
      const maskPath = path.join(dir, `m${i}.mtn`);
      const attnPath = path.join(dir, `a${i}.mtn`);
      writeMtn(maskPath, mask, "mask");
      writeMtn(attnPath, attn, "attention");
      args.push("--pair", `${maskPath}:${attnPath}`);
    });
    args.push("--policy", policy, "--out", outPath);
    runCore(args);
    copyInto(out, readMtn(outPath).view, "regionCompose");
  });
}

/**
 * Per pixel f_out = Attn V.  With `preserve`, masked pixels take their
 * values from `preserve.targetValues` before the attention is applied
 * (content-preserving transfer).
 */
export function applyAttention(
  attn: BufferView,
  values: BufferView,
  out: BufferView,
  preserve?: { mask: BufferView; targetValues: BufferView },
): void {
  checkAttention(attn, "attn");
  checkView(values, 4, "f32", "values");
  checkView(out, 4, "f32", "out");
  if (!sameShape(out.shape, values.shape)) {
    throw new ShapeError("output buffer shape must match the value tensor");
  }
  if (preserve) {
    checkView(preserve.mask, 2, "u8", "preserve.mask");
    checkView(preserve.targetValues, 4, "f32", "preserve.targetValues");
    if (!sameShape(preserve.targetValues.shape, values.shape)) {
      throw new ShapeError("target values must match the value tensor shape");
    }
  }
  withTempDir((dir) => {
    const attnPath = path.join(dir, "attn.mtn");
    const valuesPath = path.join(dir, "values.mtn");
    const outPath = path.join(dir, "out.mtn");
    writeMtn(attnPath, attn, "attention");
    writeMtn(valuesPath, values, "values");
    const args = ["apply", "--attn", attnPath, "--values", valuesPath, "--out", outPath];
    if (preserve) {
      const maskPath = path.join(dir, "mask.mtn");
      const targetPath = path.join(dir, "target.mtn");
      writeMtn(maskPath, preserve.mask, "mask");
      writeMtn(targetPath, preserve.targetValues, "values");
      args.push("--preserve-mask", maskPath, "--target-values", targetPath);
    }
    runCore(args);
    copyInto(out, readMtn(outPath).view, "applyAttention");
  });
}
