/**
 * MTN1 tensor files: magic "MTN1", version u8 = 1, dtype u8 (1 = float32
 * LE, 2 = uint8), rank u8, rank x u64 LE dims, row-major payload.  A JSON
 * sidecar at `<path>.json` carries the tensor kind and optional metadata.
 *
 * Reads and writes are bit-exact; payload bytes pass through untouched.
 */
import * as fs from "node:fs";

import { BufferView, elementCount } from "./buffers";

const MAGIC = Buffer.from("MTN1", "ascii");
const VERSION = 1;
const DTYPE_F32 = 1;
const DTYPE_U8 = 2;

export type TensorKind = "attention" | "mask" | "mask_stack" | "values";

export class MtnFormatError extends Error {}

export function writeMtn(
  path: string,
  view: BufferView,
  kind: TensorKind,
  meta: Record<string, unknown> = {},
): void {
  const isFloat = view.data instanceof Float32Array;
  if (elementCount(view.shape) !== view.data.length) {
    throw new MtnFormatError(`payload length does not match shape [${view.shape.join(", ")}]`);
  }
  const header = Buffer.alloc(7 + 8 * view.shape.length);
  MAGIC.copy(header, 0);
  header.writeUInt8(VERSION, 4);
  header.writeUInt8(isFloat ? DTYPE_F32 : DTYPE_U8, 5);
  header.writeUInt8(view.shape.length, 6);
  view.shape.forEach((dim, i) => header.writeBigUInt64LE(BigInt(dim), 7 + 8 * i));
  const payload = Buffer.from(view.data.buffer, view.data.byteOffset, view.data.byteLength);
  fs.writeFileSync(path, Buffer.concat([header, payload]));

  const sidecar: Record<string, unknown> = { kind, ...meta };
  const keys = Object.keys(sidecar).sort();
  const ordered: Record<string, unknown> = {};
  for (const key of keys) ordered[key] = sidecar[key];
  fs.writeFileSync(path + ".json", JSON.stringify(ordered) + "\n");
}

export interface MtnTensor {
  kind: TensorKind;
  view: BufferView;
}

export function readMtn(path: string): MtnTensor {
  const blob = fs.readFileSync(path);
  if (blob.length < 7 || !blob.subarray(0, 4).equals(MAGIC)) {
    throw new MtnFormatError(`${path}: not an MTN1 file`);
  }
  const version = blob.readUInt8(4);
  const dtype = blob.readUInt8(5);
  const rank = blob.readUInt8(6);
  if (version !== VERSION) throw new MtnFormatError(`${path}: unsupported version ${version}`);
  if (dtype !== DTYPE_F32 && dtype !== DTYPE_U8) {
    throw new MtnFormatError(`${path}: unknown dtype ${dtype}`);
  }
  const shape: number[] = [];
  for (let i = 0; i < rank; i++) shape.push(Number(blob.readBigUInt64LE(7 + 8 * i)));
  const offset = 7 + 8 * rank;
  const itemSize = dtype === DTYPE_F32 ? 4 : 1;
  const expected = elementCount(shape) * itemSize;
  if (blob.length - offset !== expected) {
    throw new MtnFormatError(`${path}: payload is ${blob.length - offset} bytes, dims say ${expected}`);
  }
  const payload = blob.subarray(offset);
  const copy = Buffer.from(payload); // detach from the file buffer
  const data = dtype === DTYPE_F32
    ? new Float32Array(copy.buffer, copy.byteOffset, expected / 4)
    : new Uint8Array(copy.buffer, copy.byteOffset, expected);

  let kind: TensorKind | undefined;
  if (fs.existsSync(path + ".json")) {
    kind = JSON.parse(fs.readFileSync(path + ".json", "utf8")).kind;
  }
  if (!kind) {
    if (dtype === DTYPE_U8) kind = rank === 2 ? "mask" : "mask_stack";
    else kind = rank === 4 && shape[2] === shape[3] ? "attention" : "values";
  }
  return { kind, view: { data, shape } };
}
