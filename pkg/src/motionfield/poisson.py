"""Laplace completion of attention fields under a foreground mask.

Each of the t*t scalar channels of the attention stack is completed
independently: values outside the mask are Dirichlet data, values inside
are solved so every masked pixel equals the average of its in-image
neighbors (discrete Laplace equation, 5-point stencil).  Masked pixels on
the canvas border average only their in-image neighbors (Neumann edges).

The iterative solver is red-black Gauss-Seidel with successive
over-relaxation: all red (checkerboard-even) masked pixels update from the
current field, then all black, which makes the result independent of any
within-color update order.  ``direct_solve_reference`` solves the identical
linear system by dense factorization and exists as the test oracle.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .tensors import AttentionStack, Mask2D, boundary_mask_array

DIRECT_SOLVE_LIMIT = 4096


@dataclass(frozen=True)
class SolverConfig:
    """Relaxation and stopping parameters for the red-black sweeps."""

    omega: float = 1.9
    max_iterations: int = 10_000
    tolerance: float = 1e-6
    check_stride: int = 10

    def __post_init__(self):
        if not 0 < self.omega < 2:
            raise ValueError("relaxation factor must lie in (0, 2)")
        if self.max_iterations < 1:
            raise ValueError("max iterations must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.check_stride < 1:
            raise ValueError("check stride must be >= 1")


@dataclass(frozen=True)
class CompletionReport:
    iterations: int
    residual: float
    channels: int
    converged: bool


def _neighbor_counts(height: int, width: int) -> np.ndarray:
    counts = np.full((height, width), 4.0)
    counts[0, :] -= 1
    counts[-1, :] -= 1
    counts[:, 0] -= 1
    counts[:, -1] -= 1
    return counts


def _neighbor_sums(u: np.ndarray) -> np.ndarray:
    z = np.pad(u, ((1, 1), (1, 1), (0, 0)))
    return (z[:-2, 1:-1] + z[2:, 1:-1] + z[1:-1, :-2] + z[1:-1, 2:])


def _solve_fields(values: np.ndarray, mask: np.ndarray,
                  cfg: SolverConfig) -> Tuple[np.ndarray, int, float, bool]:
    """Relax all channels of ``values`` ([H, W, C]) inside ``mask`` at once."""
    height, width = mask.shape
    interior = mask.astype(bool)
    if not interior.any():
        return values, 0, 0.0, True
    if interior.all():
        raise ValueError("mask covers every pixel: no background to solve from")

    u = values.copy()
    boundary = boundary_mask_array(Mask2D(mask))
    # Start from the per-channel boundary mean: inside the maximum principle
    # from iteration zero, and much closer to the fixed point than zeros.
    u[interior] = u[boundary].mean(axis=0)

    ii, jj = np.nonzero(interior)
    red = np.zeros_like(interior)
    red[ii[(ii + jj) % 2 == 0], jj[(ii + jj) % 2 == 0]] = True
    colors = (red, interior & ~red)
    counts = _neighbor_counts(height, width)[:, :, None]

    omega = cfg.omega
    residual = np.inf
    iterations = 0
    for sweep in range(1, cfg.max_iterations + 1):
        delta = 0.0
        for color in colors:
            if not color.any():
                continue
            avg = _neighbor_sums(u)[color] / counts[color]
            new = (1.0 - omega) * u[color] + omega * avg
            delta = max(delta, float(np.abs(new - u[color]).max()))
            u[color] = new
        iterations = sweep
        if sweep % cfg.check_stride == 0 or sweep == cfg.max_iterations:
            residual = delta
            if residual <= cfg.tolerance:
                break
    return u, iterations, residual, residual <= cfg.tolerance


def solve_laplace_field(field: np.ndarray, mask: Mask2D,
                        cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """Complete one [H, W] scalar field inside the mask."""
    field = np.asarray(field, dtype=np.float64)
    if field.shape != mask.data.shape:
        raise ValueError("field and mask dimensions differ")
    solved, _, _, _ = _solve_fields(field[:, :, None].copy(), mask.data, cfg)
    return solved[:, :, 0]


def complete_attention(attn: AttentionStack, mask: Mask2D,
                       cfg: SolverConfig = SolverConfig(),
                       renormalize: bool = False) -> Tuple[AttentionStack, CompletionReport]:
    """Fill the masked region of every attention channel harmonically.

    Values outside the mask are returned bit-identical to the input.  Row
    sums are preserved analytically (the sum of harmonic channels with
    boundary sums 1 is itself harmonic), so ``renormalize`` is off by
    default and exists only to scrub float drift.
    """
    height, width, t = attn.height, attn.width, attn.frames
    if mask.data.shape != (height, width):
        raise ValueError("attention and mask dimensions differ")
    channels = attn.data.reshape(height, width, t * t).copy()
    solved, iterations, residual, converged = _solve_fields(channels, mask.data, cfg)
    out = solved.reshape(height, width, t, t)
    if renormalize:
        inside = mask.data.astype(bool)
        out[inside] /= out[inside].sum(axis=2, keepdims=True)
    report = CompletionReport(iterations=iterations, residual=float(residual),
                              channels=t * t, converged=converged)
    return AttentionStack(out), report


def direct_solve_reference(field: np.ndarray, mask: Mask2D) -> np.ndarray:
    """Dense-factorization solution of the identical 5-point system.

    Exact to machine precision; guarded to small instances because the
    dense matrix is quadratic in the number of masked pixels.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.shape != mask.data.shape:
        raise ValueError("field and mask dimensions differ")
    interior = mask.data.astype(bool)
    ys, xs = np.nonzero(interior)
    n = len(ys)
    if n == 0:
        return field.copy()
    if n > DIRECT_SOLVE_LIMIT:
        raise ValueError(f"system too large for dense reference: {n} masked pixels")
    if interior.all():
        raise ValueError("mask covers every pixel: no background to solve from")

    index = -np.ones(field.shape, dtype=np.int64)
    index[ys, xs] = np.arange(n)
    height, width = field.shape
    a = np.zeros((n, n))
    b = np.zeros(n)
    for row, (y, x) in enumerate(zip(ys, xs)):
        neighbors = [(y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)]
        degree = 0
        for ny, nx in neighbors:
            if not (0 <= ny < height and 0 <= nx < width):
                continue
            degree += 1
            if interior[ny, nx]:
                a[row, index[ny, nx]] = -1.0
            else:
                b[row] += field[ny, nx]
        a[row, row] = degree
    solution = np.linalg.solve(a, b)
    out = field.copy()
    out[ys, xs] = solution
    return out
