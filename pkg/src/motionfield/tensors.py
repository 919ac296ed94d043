"""Core tensor types for per-pixel temporal attention processing.

An attention stack holds one t x t row-stochastic matrix per spatial pixel:
``data[y, x, i, j]`` is the attention weight from query frame ``i`` to key
frame ``j`` at pixel ``(x, y)``.  Masks mark moving-object (foreground)
pixels; value tensors hold per-pixel, per-frame feature vectors.

All types are immutable views over float64/uint8 numpy arrays: operations
never mutate their inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Set, Tuple

import numpy as np

# Invariant tolerances for attention stacks.
ROW_SUM_TOL = 1e-4
NONNEG_TOL = 1e-6


class ValidationError(ValueError):
    """A tensor violates a structural invariant."""


@dataclass(frozen=True)
class AttentionStack:
    """H x W grid of t x t temporal attention matrices."""

    data: np.ndarray  # [H, W, t, t], float64

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim != 4 or a.shape[2] != a.shape[3]:
            raise ValidationError(
                f"attention stack must be [H, W, t, t], got shape {a.shape}")
        if min(a.shape[:3]) < 1:
            raise ValidationError("H, W, t must all be >= 1")
        if not np.isfinite(a).all():
            raise ValidationError("attention stack contains non-finite values")
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def frames(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class Mask2D:
    """Binary foreground mask; 1 = moving object, 0 = background."""

    data: np.ndarray  # [H, W], uint8 in {0, 1}

    def __post_init__(self):
        m = np.asarray(self.data)
        if m.ndim != 2:
            raise ValidationError(f"mask must be 2-D, got shape {m.shape}")
        if not np.isin(m, (0, 1)).all():
            raise ValidationError("mask values must be 0 or 1")
        m = m.astype(np.uint8)
        m.setflags(write=False)
        object.__setattr__(self, "data", m)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class MaskStack:
    """One mask per frame; all masks share dimensions."""

    masks: Tuple[Mask2D, ...]

    def __post_init__(self):
        masks = tuple(self.masks)
        if not masks:
            raise ValidationError("mask stack must hold at least one mask")
        h, w = masks[0].data.shape
        for m in masks[1:]:
            if m.data.shape != (h, w):
                raise ValidationError("mask stack dimensions differ across frames")
        object.__setattr__(self, "masks", masks)

    @property
    def frames(self) -> int:
        return len(self.masks)

    def as_array(self) -> np.ndarray:
        """Stack as a [t, H, W] uint8 array."""
        return np.stack([m.data for m in self.masks], axis=0)


@dataclass(frozen=True)
class ValueTensor:
    """Per-pixel, per-frame feature vectors, [H, W, t, c]."""

    data: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.data, dtype=np.float64)
        if v.ndim != 4:
            raise ValidationError(f"value tensor must be [H, W, t, c], got {v.shape}")
        if not np.isfinite(v).all():
            raise ValidationError("value tensor contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "data", v)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def frames(self) -> int:
        return self.data.shape[2]

    @property
    def channels(self) -> int:
        return self.data.shape[3]


@dataclass(frozen=True)
class AttentionReport:
    """Invariant residuals of an attention stack (reporting only)."""

    max_row_sum_error: float
    min_value: float
    violating_rows: int

    @property
    def ok(self) -> bool:
        return self.violating_rows == 0


def validate_attention(stack: AttentionStack) -> AttentionReport:
    """Measure how far a stack is from row-stochastic.

    A row violates if its sum deviates from 1 by more than ``ROW_SUM_TOL``
    or it holds an entry below ``-NONNEG_TOL``.  Never mutates the input.
    """
    a = stack.data
    row_sums = a.sum(axis=3)
    row_err = np.abs(row_sums - 1.0)
    row_min = a.min(axis=3)
    violating = (row_err > ROW_SUM_TOL) | (row_min < -NONNEG_TOL)
    return AttentionReport(
        max_row_sum_error=float(row_err.max()),
        min_value=float(a.min()),
        violating_rows=int(violating.sum()),
    )


def merge_masks(masks: MaskStack) -> Mask2D:
    """Pixelwise union of the per-frame foreground masks."""
    merged = masks.as_array().max(axis=0)
    return Mask2D(merged)


def mask_boundary(mask: Mask2D) -> Set[Tuple[int, int]]:
    """Exterior boundary: 0-pixels 4-adjacent to at least one 1-pixel.

    Coordinates are returned as (x, y) pairs.
    """
    m = mask.data.astype(bool)
    near = np.zeros_like(m)
    near[1:, :] |= m[:-1, :]
    near[:-1, :] |= m[1:, :]
    near[:, 1:] |= m[:, :-1]
    near[:, :-1] |= m[:, 1:]
    ys, xs = np.nonzero(near & ~m)
    return {(int(x), int(y)) for x, y in zip(xs, ys)}


def boundary_mask_array(mask: Mask2D) -> np.ndarray:
    """Boolean [H, W] array form of :func:`mask_boundary`."""
    m = mask.data.astype(bool)
    near = np.zeros_like(m)
    near[1:, :] |= m[:-1, :]
    near[:-1, :] |= m[1:, :]
    near[:, 1:] |= m[:, :-1]
    near[:, :-1] |= m[:, 1:]
    return near & ~m
