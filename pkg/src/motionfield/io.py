"""MTN1 tensor file format.

Layout (all integers little-endian):

    magic   4 bytes  b"MTN1"
    version u8       1
    dtype   u8       1 = IEEE-754 float32, 2 = uint8 (masks only)
    ndim    u8
    dims    ndim * u64
    payload row-major values

A JSON sidecar at ``path + ".json"`` carries optional metadata with keys
``kind`` (one of attention / mask / mask_stack / values), ``fps``, ``seed``
and ``scenario``.  The sidecar may be absent; ``kind`` then falls back to
shape inference: uint8 rank-2 is a mask, uint8 rank-3 a mask stack, and a
float rank-4 tensor is an attention stack when its two trailing dims agree,
otherwise a value tensor.

Float payloads are float32: a write/read round trip is bit-exact, and
value-exact whenever the source values are float32-representable.
"""
from __future__ import annotations

import json
import struct
import warnings
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .tensors import AttentionStack, Mask2D, MaskStack, ValidationError, ValueTensor

MAGIC = b"MTN1"
VERSION = 1
DTYPE_F32 = 1
DTYPE_U8 = 2

# Row sums may drift this far from 1 before a file is rejected outright;
# drift beyond the in-memory invariant is repaired by renormalization.
SOFT_ROW_SUM_TOL = 1e-2

Tensor = Union[AttentionStack, Mask2D, MaskStack, ValueTensor]


class FormatError(ValueError):
    """Not an MTN1 file (bad magic or unsupported version/dtype)."""


class CorruptFileError(ValueError):
    """Header and payload disagree."""


def _kind_of(tensor: Tensor) -> str:
    if isinstance(tensor, AttentionStack):
        return "attention"
    if isinstance(tensor, Mask2D):
        return "mask"
    if isinstance(tensor, MaskStack):
        return "mask_stack"
    if isinstance(tensor, ValueTensor):
        return "values"
    raise TypeError(f"not a known tensor type: {type(tensor)!r}")


def write_tensor(tensor: Tensor, path, meta: Optional[dict] = None) -> None:
    """Write ``tensor`` to ``path`` plus a JSON sidecar.

    Output bytes are a pure function of the tensor values and ``meta``.
    """
    path = Path(path)
    kind = _kind_of(tensor)
    if kind == "mask":
        payload = tensor.data.astype("<u1")
        dtype = DTYPE_U8
    elif kind == "mask_stack":
        payload = tensor.as_array().astype("<u1")
        dtype = DTYPE_U8
    else:
        payload = tensor.data.astype("<f4")
        dtype = DTYPE_F32

    header = MAGIC + struct.pack("<BBB", VERSION, dtype, payload.ndim)
    header += struct.pack(f"<{payload.ndim}Q", *payload.shape)
    path.write_bytes(header + payload.tobytes(order="C"))

    sidecar = {"kind": kind}
    if meta:
        sidecar.update(meta)
    sidecar_path = path.with_name(path.name + ".json")
    sidecar_path.write_text(json.dumps(sidecar, sort_keys=True) + "\n")


def read_tensor(path) -> Tensor:
    """Read an MTN1 file back into its typed tensor.

    Attention stacks are validated on read: rows whose sums drift from 1 by
    more than ``SOFT_ROW_SUM_TOL`` (or entries below its negative) raise
    :class:`~motionfield.tensors.ValidationError`; smaller drift beyond the
    in-memory invariants is repaired by clipping negatives and renormalizing
    rows, with a warning.
    """
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 7 or blob[:4] != MAGIC:
        raise FormatError(f"{path}: not an MTN1 file")
    version, dtype, ndim = struct.unpack_from("<BBB", blob, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dtype not in (DTYPE_F32, DTYPE_U8):
        raise FormatError(f"{path}: unknown dtype code {dtype}")
    dims_end = 7 + 8 * ndim
    if len(blob) < dims_end:
        raise CorruptFileError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{ndim}Q", blob, 7)
    itemsize = 4 if dtype == DTYPE_F32 else 1
    expected = int(np.prod(dims, dtype=np.int64)) * itemsize if ndim else itemsize
    if len(blob) - dims_end != expected:
        raise CorruptFileError(
            f"{path}: payload is {len(blob) - dims_end} bytes, dims say {expected}")
    np_dtype = "<f4" if dtype == DTYPE_F32 else "<u1"
    data = np.frombuffer(blob, dtype=np_dtype, offset=dims_end).reshape(dims)

    kind = _sidecar_kind(path)
    if kind is None:
        kind = _infer_kind(dtype, dims)

    if kind == "mask":
        if ndim != 2 or dtype != DTYPE_U8:
            raise CorruptFileError(f"{path}: mask must be rank-2 uint8")
        return Mask2D(data)
    if kind == "mask_stack":
        if ndim != 3 or dtype != DTYPE_U8:
            raise CorruptFileError(f"{path}: mask stack must be rank-3 uint8")
        return MaskStack(tuple(Mask2D(frame) for frame in data))
    if kind == "values":
        if ndim != 4 or dtype != DTYPE_F32:
            raise CorruptFileError(f"{path}: value tensor must be rank-4 float32")
        return ValueTensor(data.astype(np.float64))
    if kind == "attention":
        if ndim != 4 or dtype != DTYPE_F32 or dims[2] != dims[3]:
            raise CorruptFileError(f"{path}: attention stack must be [H, W, t, t] float32")
        return _checked_attention(data.astype(np.float64), path)
    raise FormatError(f"{path}: unknown tensor kind {kind!r}")


def read_sidecar(path) -> Optional[dict]:
    """The JSON sidecar for ``path``, or None when absent."""
    sidecar_path = Path(path).with_name(Path(path).name + ".json")
    if not sidecar_path.exists():
        return None
    return json.loads(sidecar_path.read_text())


def _sidecar_kind(path) -> Optional[str]:
    meta = read_sidecar(path)
    if meta is None:
        return None
    return meta.get("kind")


def _infer_kind(dtype: int, dims) -> str:
    if dtype == DTYPE_U8:
        return "mask" if len(dims) == 2 else "mask_stack"
    if len(dims) == 4 and dims[2] == dims[3]:
        return "attention"
    return "values"


def _checked_attention(data: np.ndarray, path) -> AttentionStack:
    row_sums = data.sum(axis=3)
    max_err = float(np.abs(row_sums - 1.0).max())
    min_val = float(data.min())
    if max_err > SOFT_ROW_SUM_TOL or min_val < -SOFT_ROW_SUM_TOL:
        raise ValidationError(
            f"{path}: attention rows violate stochasticity beyond "
            f"{SOFT_ROW_SUM_TOL} (row-sum error {max_err:.3g}, min {min_val:.3g})")
    from .tensors import NONNEG_TOL, ROW_SUM_TOL

    if max_err > ROW_SUM_TOL or min_val < -NONNEG_TOL:
        warnings.warn(
            f"{path}: attention drifted from row-stochastic "
            f"(row-sum error {max_err:.3g}, min {min_val:.3g}); renormalizing",
            stacklevel=2)
        data = np.clip(data, 0.0, None)
        data = data / data.sum(axis=3, keepdims=True)
    return AttentionStack(data)
