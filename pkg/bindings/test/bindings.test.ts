import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import {
  BufferView,
  ShapeError,
  applyAttention,
  completeAttention,
  extractCommonMotion,
  regionCompose,
  weightedCombine,
} from "../src/index";
import { pythonExecutable } from "../src/cli";
import { readMtn, writeMtn } from "../src/mtn";

function tempDir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), "bindings-test-"));
}

/** Deterministic row-stochastic stack, marshalled the same way everywhere. */
function makeStack(h: number, w: number, t: number, seed: number): BufferView {
  const data = new Float32Array(h * w * t * t);
  let state = seed >>> 0;
  const next = () => {
    // xorshift32: deterministic across runs and platforms
    state ^= state << 13; state >>>= 0;
    state ^= state >> 17; state >>>= 0;
    state ^= state << 5; state >>>= 0;
    return state / 0xffffffff;
  };
  for (let row = 0; row < h * w * t; row++) {
    let sum = 0;
    const logits: number[] = [];
    for (let j = 0; j < t; j++) {
      const value = Math.exp(next());
      logits.push(value);
      sum += value;
    }
    for (let j = 0; j < t; j++) {
      data[row * t + j] = Math.fround(logits[j] / sum);
    }
  }
  // quantize to f32 and renormalize once so rows survive the f32 round trip
  for (let row = 0; row < h * w * t; row++) {
    let sum = 0;
    for (let j = 0; j < t; j++) sum += data[row * t + j];
    for (let j = 0; j < t; j++) data[row * t + j] = Math.fround(data[row * t + j] / sum);
  }
  return { data, shape: [h, w, t, t] };
}

function makeValues(h: number, w: number, t: number, c: number, seed: number): BufferView {
  const data = new Float32Array(h * w * t * c);
  for (let i = 0; i < data.length; i++) {
    data[i] = Math.fround(Math.sin(seed + i * 0.7));
  }
  return { data, shape: [h, w, t, c] };
}

function runCli(args: string[]): void {
  execFileSync(pythonExecutable(), ["-m", "motionfield", ...args], {
    stdio: ["ignore", "pipe", "pipe"],
  });
}

function payloadOf(view: BufferView): Buffer {
  return Buffer.from(view.data.buffer, view.data.byteOffset, view.data.byteLength);
}

describe("bit-identity with the CLI", () => {
  it("completeAttention matches poisson-complete", () => {
    const dir = tempDir();
    const attn = makeStack(8, 8, 3, 42);
    const maskData = new Uint8Array(64);
    for (let y = 2; y < 5; y++) for (let x = 2; x < 5; x++) maskData[y * 8 + x] = 1;
    const mask: BufferView = { data: maskData, shape: [8, 8] };

    const attnPath = path.join(dir, "a.mtn");
    const maskPath = path.join(dir, "m.mtn");
    const cliOut = path.join(dir, "cli.mtn");
    writeMtn(attnPath, attn, "attention");
    writeMtn(maskPath, mask, "mask");
    runCli(["poisson-complete", "--attn", attnPath, "--mask", maskPath, "--out", cliOut]);

    const out: BufferView = { data: new Float32Array(attn.data.length), shape: attn.shape };
    const report = completeAttention(attn, mask, out);
    expect(report.converged).toBe(true);
    expect(payloadOf(out).equals(payloadOf(readMtn(cliOut).view))).toBe(true);
  });

  it("extractCommonMotion matches extract-few-shot", () => {
    const dir = tempDir();
    const stacks = [makeStack(6, 6, 3, 1), makeStack(6, 6, 3, 2), makeStack(6, 6, 3, 3)];
    const cliOut = path.join(dir, "cli.mtn");
    const args = ["extract-few-shot"];
    stacks.forEach((s, i) => {
      const p = path.join(dir, `s${i}.mtn`);
      writeMtn(p, s, "attention");
      args.push("--attn", p);
    });
    args.push("--k", "1", "--seed", "9", "--out", cliOut);
    runCli(args);

    const out: BufferView = {
      data: new Float32Array(stacks[0].data.length),
      shape: stacks[0].shape,
    };
    extractCommonMotion(stacks, out, { window: 1, seed: 9 });
    expect(payloadOf(out).equals(payloadOf(readMtn(cliOut).view))).toBe(true);
  });

  it("weightedCombine matches combine", () => {
    const dir = tempDir();
    const a = makeStack(5, 5, 3, 7);
    const b = makeStack(5, 5, 3, 8);
    const aPath = path.join(dir, "a.mtn");
    const bPath = path.join(dir, "b.mtn");
    const cliOut = path.join(dir, "cli.mtn");
    writeMtn(aPath, a, "attention");
    writeMtn(bPath, b, "attention");
    runCli(["combine", "--attn", aPath, "--weight", "0.25", "--attn", bPath,
            "--weight", "0.75", "--policy", "strict", "--out", cliOut]);

    const out: BufferView = { data: new Float32Array(a.data.length), shape: a.shape };
    weightedCombine([a, b], [0.25, 0.75], out, "strict");
    expect(payloadOf(out).equals(payloadOf(readMtn(cliOut).view))).toBe(true);
  });

  it("regionCompose matches compose-regions", () => {
    const dir = tempDir();
    const a = makeStack(4, 4, 2, 5);
    const b = makeStack(4, 4, 2, 6);
    const left = new Uint8Array(16);
    for (let y = 0; y < 4; y++) for (let x = 0; x < 2; x++) left[y * 4 + x] = 1;
    const right = left.map((v) => 1 - v);
    const paths = {
      a: path.join(dir, "a.mtn"), b: path.join(dir, "b.mtn"),
      l: path.join(dir, "l.mtn"), r: path.join(dir, "r.mtn"),
      out: path.join(dir, "cli.mtn"),
    };
    writeMtn(paths.a, a, "attention");
    writeMtn(paths.b, b, "attention");
    writeMtn(paths.l, { data: left, shape: [4, 4] }, "mask");
    writeMtn(paths.r, { data: right, shape: [4, 4] }, "mask");
    runCli(["compose-regions", "--pair", `${paths.l}:${paths.a}`,
            "--pair", `${paths.r}:${paths.b}`, "--out", paths.out]);

    const out: BufferView = { data: new Float32Array(a.data.length), shape: a.shape };
    regionCompose([
      { mask: { data: left, shape: [4, 4] }, attn: a },
      { mask: { data: right, shape: [4, 4] }, attn: b },
    ], out);
    expect(payloadOf(out).equals(payloadOf(readMtn(paths.out).view))).toBe(true);
  });

  it("applyAttention matches apply (plain and content-preserving)", () => {
    const dir = tempDir();
    const attn = makeStack(4, 4, 3, 11);
    const values = makeValues(4, 4, 3, 2, 1);
    const target = makeValues(4, 4, 3, 2, 2);
    const maskData = new Uint8Array(16);
    for (let i = 0; i < 8; i++) maskData[i] = 1;

    const attnPath = path.join(dir, "a.mtn");
    const valuesPath = path.join(dir, "v.mtn");
    const targetPath = path.join(dir, "t.mtn");
    const maskPath = path.join(dir, "m.mtn");
    writeMtn(attnPath, attn, "attention");
    writeMtn(valuesPath, values, "values");
    writeMtn(targetPath, target, "values");
    writeMtn(maskPath, { data: maskData, shape: [4, 4] }, "mask");

    const plainCli = path.join(dir, "plain.mtn");
    runCli(["apply", "--attn", attnPath, "--values", valuesPath, "--out", plainCli]);
    const out: BufferView = { data: new Float32Array(values.data.length), shape: values.shape };
    applyAttention(attn, values, out);
    expect(payloadOf(out).equals(payloadOf(readMtn(plainCli).view))).toBe(true);

    const preservingCli = path.join(dir, "preserving.mtn");
    runCli(["apply", "--attn", attnPath, "--values", valuesPath,
            "--preserve-mask", maskPath, "--target-values", targetPath,
            "--out", preservingCli]);
    applyAttention(attn, values, out, {
      mask: { data: maskData, shape: [4, 4] },
      targetValues: target,
    });
    expect(payloadOf(out).equals(payloadOf(readMtn(preservingCli).view))).toBe(true);
  });
});

describe("contract edges", () => {
  it("empty mask returns the input unchanged", () => {
    const attn = makeStack(6, 6, 3, 21);
    const mask: BufferView = { data: new Uint8Array(36), shape: [6, 6] };
    const out: BufferView = { data: new Float32Array(attn.data.length), shape: attn.shape };
    const report = completeAttention(attn, mask, out);
    expect(report.iterations).toBe(0);
    expect(report.converged).toBe(true);
    expect(payloadOf(out).equals(payloadOf(attn))).toBe(true);
  });

  it("wrong-rank buffers are rejected before any write", () => {
    const attn = makeStack(4, 4, 2, 31);
    const mask: BufferView = { data: new Uint8Array(16), shape: [16] }; // rank 1
    const out: BufferView = { data: new Float32Array(attn.data.length).fill(7), shape: attn.shape };
    expect(() => completeAttention(attn, mask, out)).toThrow(ShapeError);
    expect((out.data as Float32Array).every((v) => v === 7)).toBe(true);

    const badOut: BufferView = { data: new Float32Array(10), shape: [10] };
    expect(() => weightedCombine([attn], [1.0], badOut)).toThrow(ShapeError);
  });

  it("mismatched stack shapes are rejected", () => {
    const a = makeStack(4, 4, 2, 1);
    const b = makeStack(4, 4, 3, 1);
    const out: BufferView = { data: new Float32Array(a.data.length), shape: a.shape };
    expect(() => extractCommonMotion([a, b], out)).toThrow(ShapeError);
  });
});
