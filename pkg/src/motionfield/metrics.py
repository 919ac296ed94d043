"""Distances between attention stacks, for tests and the CLI."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from .tensors import AttentionStack, Mask2D

KL_FLOOR = 1e-12


@dataclass(frozen=True)
class MapDistanceReport:
    mean_abs: float
    frobenius: float
    mean_row_l1: float
    mean_row_kl: float
    max_pixel_frobenius: float
    pixels: int
    masked: bool

    def to_dict(self) -> dict:
        return asdict(self)


def map_distance(a: AttentionStack, b: AttentionStack,
                 mask: Optional[Mask2D] = None) -> MapDistanceReport:
    """Distance statistics between two stacks, optionally over masked pixels.

    The KL term treats each row as a distribution after flooring entries at
    ``KL_FLOOR`` and renormalizing, so identity-like rows with exact zeros
    stay finite.
    """
    if a.data.shape != b.data.shape:
        raise ValueError("attention stacks must share dimensions")
    if mask is not None:
        if mask.data.shape != a.data.shape[:2]:
            raise ValueError("mask and stack dimensions differ")
        sel = mask.data.astype(bool)
        da, db = a.data[sel], b.data[sel]  # [n, t, t]
    else:
        h, w, t = a.data.shape[:3]
        da = a.data.reshape(h * w, t, t)
        db = b.data.reshape(h * w, t, t)

    if da.shape[0] == 0:
        return MapDistanceReport(0.0, 0.0, 0.0, 0.0, 0.0, 0, mask is not None)

    diff = da - db
    pixel_frob = np.sqrt(np.square(diff).sum(axis=(1, 2)))

    pa = np.maximum(da, KL_FLOOR)
    pa /= pa.sum(axis=2, keepdims=True)
    pb = np.maximum(db, KL_FLOOR)
    pb /= pb.sum(axis=2, keepdims=True)
    row_kl = (pa * np.log(pa / pb)).sum(axis=2)

    return MapDistanceReport(
        mean_abs=float(np.abs(diff).mean()),
        frobenius=float(np.sqrt(np.square(diff).sum())),
        mean_row_l1=float(np.abs(diff).sum(axis=2).mean()),
        mean_row_kl=float(row_kl.mean()),
        max_pixel_frobenius=float(pixel_frob.max()),
        pixels=int(da.shape[0]),
        masked=mask is not None,
    )


def stochasticity_error(a: AttentionStack) -> Tuple[float, float]:
    """(max |row sum - 1|, min entry) over the whole stack."""
    sums = a.data.sum(axis=3)
    return float(np.abs(sums - 1.0).max()), float(a.data.min())
