"""Camera motion algebra: weighted mixing, regional assembly, application.

Extracted camera motions are additive: a convex combination of attention
stacks is again row-stochastic, and per-region masks can stitch different
motions into one map.  Applying a map to a value tensor contracts each
pixel's t x t matrix against its t x c features.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .tensors import AttentionStack, Mask2D, ValueTensor

WEIGHT_SUM_TOL = 1e-6
DEAD_ROW_TOL = 1e-8


class PartitionError(ValueError):
    """Region masks overlap or leave pixels uncovered."""


@dataclass(frozen=True)
class WeightedMotionSet:
    members: Tuple[Tuple[AttentionStack, float], ...]
    policy: str = "strict"  # strict | renormalize_rows | none

    def __post_init__(self):
        if not self.members:
            raise ValueError("weighted set must have at least one member")
        if self.policy not in ("strict", "renormalize_rows", "none"):
            raise ValueError(f"unknown weight policy {self.policy!r}")
        shape = self.members[0][0].data.shape
        for stack, weight in self.members:
            if stack.data.shape != shape:
                raise ValueError("member stacks must share dimensions")
            if not np.isfinite(weight):
                raise ValueError("weights must be finite")
        object.__setattr__(self, "members", tuple(self.members))


@dataclass(frozen=True)
class RegionAssignment:
    members: Tuple[Tuple[Mask2D, AttentionStack], ...]
    policy: str = "require_partition"  # require_partition | sum_then_renormalize

    def __post_init__(self):
        if not self.members:
            raise ValueError("region assignment must have at least one member")
        if self.policy not in ("require_partition", "sum_then_renormalize"):
            raise ValueError(f"unknown overlap policy {self.policy!r}")
        mask_shape = self.members[0][0].data.shape
        stack_shape = self.members[0][1].data.shape
        for mask, stack in self.members:
            if mask.data.shape != mask_shape or stack.data.shape != stack_shape:
                raise ValueError("members must share dimensions")
            if stack.data.shape[:2] != mask.data.shape:
                raise ValueError("mask and stack dimensions differ")
        object.__setattr__(self, "members", tuple(self.members))


def weighted_combine(motion_set: WeightedMotionSet) -> AttentionStack:
    """Elementwise weighted sum of the member stacks.

    Under the strict policy the weights must sum to 1 (convex mixing keeps
    rows stochastic); renormalize_rows repairs arbitrary weights by
    rescaling each output row, and none returns the raw sum.
    """
    weights = np.array([w for _, w in motion_set.members])
    if motion_set.policy == "strict" and abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(
            f"strict policy needs weights summing to 1, got {weights.sum()!r}")
    out = np.zeros_like(motion_set.members[0][0].data)
    for stack, weight in motion_set.members:
        out += weight * stack.data
    if motion_set.policy == "renormalize_rows":
        out = _renormalize_rows(out)
    return AttentionStack(out)


def _renormalize_rows(data: np.ndarray) -> np.ndarray:
    t = data.shape[3]
    sums = data.sum(axis=3, keepdims=True)
    dead = sums <= DEAD_ROW_TOL
    if dead.any():
        warnings.warn(f"{int(dead.sum())} rows had vanishing sums; set to uniform",
                      stacklevel=3)
    out = np.where(dead, 1.0 / t, np.divide(data, sums, where=~dead))
    return out


def region_compose(assignment: RegionAssignment) -> AttentionStack:
    """Stitch per-region camera motions into one stack.

    Masks select whole per-pixel matrices.  Under require_partition the
    masks must tile the canvas exactly and the output pixel values are
    bit-identical to the assigned member's; sum_then_renormalize instead
    row-renormalizes the masked sum wherever regions overlap.
    """
    coverage = np.zeros(assignment.members[0][0].data.shape, dtype=np.int64)
    for mask, _ in assignment.members:
        coverage += mask.data
    if assignment.policy == "require_partition":
        if (coverage > 1).any():
            y, x = np.argwhere(coverage > 1)[0]
            raise PartitionError(f"masks overlap at pixel (x={x}, y={y})")
        if (coverage == 0).any():
            y, x = np.argwhere(coverage == 0)[0]
            raise PartitionError(f"pixel (x={x}, y={y}) is not covered by any mask")
        out = np.zeros_like(assignment.members[0][1].data)
        for mask, stack in assignment.members:
            sel = mask.data.astype(bool)
            out[sel] = stack.data[sel]
        return AttentionStack(out)

    out = np.zeros_like(assignment.members[0][1].data)
    for mask, stack in assignment.members:
        out += mask.data[:, :, None, None] * stack.data
    return AttentionStack(_renormalize_rows(out))


def apply_attention(attn: AttentionStack, values: ValueTensor) -> ValueTensor:
    """Per pixel: f_out = Attn @ V, contracting key frames against features."""
    if attn.data.shape[:3] != values.data.shape[:3]:
        raise ValueError("attention and values dimensions differ")
    out = np.einsum("hwij,hwjc->hwic", attn.data, values.data)
    return ValueTensor(out)


def blend_values(v_target: ValueTensor, v_other: ValueTensor, mask: Mask2D) -> ValueTensor:
    """Masked pixels take v_target bit-identically, the rest v_other."""
    if v_target.data.shape != v_other.data.shape:
        raise ValueError("value tensors must share dimensions")
    if mask.data.shape != v_target.data.shape[:2]:
        raise ValueError("mask and values dimensions differ")
    sel = mask.data.astype(bool)[:, :, None, None]
    return ValueTensor(np.where(sel, v_target.data, v_other.data))


def content_preserving_transfer(attn_source: AttentionStack, v_target: ValueTensor,
                                v_other: ValueTensor, mask: Mask2D) -> ValueTensor:
    """Apply a source camera motion while pinning masked content.

    Blends the value tensors under the mask, then applies the source
    attention: with a zooming source map and a foreground mask this is the
    dolly-zoom construction.
    """
    return apply_attention(attn_source, blend_values(v_target, v_other, mask))


def object_residual(attn: AttentionStack, attn_camera: AttentionStack) -> np.ndarray:
    """Signed leftover attention once camera motion is removed.

    Diagnostic only: rows sum to ~0 and the result is deliberately not an
    AttentionStack (it is not row-stochastic).
    """
    if attn.data.shape != attn_camera.data.shape:
        raise ValueError("attention stacks must share dimensions")
    return attn.data - attn_camera.data
