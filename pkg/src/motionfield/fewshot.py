"""Few-shot common camera motion extraction by window clustering.

Given m attention stacks that share a camera motion but differ in object
motion, each pixel's motion is recovered by gathering the per-pixel
attention matrices of a k x k spatial window across all m stacks, embedding
the flattened vectors into 2-D, density-clustering the embedding, and
averaging the original vectors of the largest cluster.

The embedding (exact t-SNE) and clustering (DBSCAN) are implemented here
rather than borrowed so their iteration order, seeding and tie-breaking are
pinned: per-pixel outputs must not depend on video order, pixel visit order
or thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .tensors import AttentionStack

_UNSEEN = -2
NOISE = -1


@dataclass(frozen=True)
class ClusterConfig:
    """Window, DBSCAN and t-SNE parameters for the extraction."""

    window: Optional[int] = None  # odd k; None picks window_size(map width)
    eps: float = 4.0
    min_points: int = 3
    perplexity: Optional[float] = None  # None: min(10, (n - 1) // 3), at least 1
    tsne_iterations: int = 1000
    learning_rate: float = 50.0
    seed: int = 0

    def __post_init__(self):
        if self.window is not None and (self.window < 1 or self.window % 2 == 0):
            raise ValueError("window size must be odd and >= 1")
        if self.eps <= 0:
            raise ValueError("eps must be > 0")
        if self.min_points < 1:
            raise ValueError("min points must be >= 1")
        if self.tsne_iterations < 1:
            raise ValueError("t-SNE needs at least one iteration")


@dataclass(frozen=True)
class PixelPointSet:
    """Flattened per-pixel attention vectors gathered from a window."""

    points: np.ndarray  # [n, t*t]
    provenance: Tuple[Tuple[int, Tuple[int, int]], ...]  # (video, (dx, dy))


@dataclass(frozen=True)
class TsneResult:
    embedding: np.ndarray  # [n, 2]
    kl_trace: np.ndarray   # objective per iteration (plain P, no exaggeration)
    degenerate: bool       # all input points identical


@dataclass(frozen=True)
class ExtractionReport:
    pixels: int
    fallback_pixels: int  # all points noise: plain mean used
    tie_pixels: int       # several equal-size largest clusters


def window_size(map_size: int) -> int:
    """Neighborhood size: k = ceil(size / 16) * 2 + 1."""
    if map_size < 1:
        raise ValueError("map size must be >= 1")
    return -(-map_size // 16) * 2 + 1


def gather_window_points(stacks: Sequence[AttentionStack], x: int, y: int,
                         k: int) -> PixelPointSet:
    """All attention vectors in the k x k window around (x, y), per video.

    Windows are clipped at the canvas edge, never padded.
    """
    if not stacks:
        raise ValueError("need at least one attention stack")
    shape = stacks[0].data.shape
    for s in stacks[1:]:
        if s.data.shape != shape:
            raise ValueError("attention stacks must share dimensions and frame count")
    height, width, t = shape[0], shape[1], shape[2]
    half = k // 2
    xs = range(max(0, x - half), min(width, x + half + 1))
    ys = range(max(0, y - half), min(height, y + half + 1))
    points = []
    provenance = []
    for video, stack in enumerate(stacks):
        for yy in ys:
            for xx in xs:
                points.append(stack.data[yy, xx].reshape(t * t))
                provenance.append((video, (xx - x, yy - y)))
    return PixelPointSet(points=np.array(points), provenance=tuple(provenance))


def _effective_perplexity(cfg: ClusterConfig, n: int) -> float:
    if cfg.perplexity is None:
        return max(1.0, min(10.0, (n - 1) // 3))
    if not 1 <= cfg.perplexity < n:
        raise ValueError(f"perplexity must lie in [1, {n}) for {n} points")
    return float(cfg.perplexity)


def _conditional_affinities(sq_dists: np.ndarray, perplexity: float) -> np.ndarray:
    """Per-point Gaussian affinities with bandwidths matched to perplexity."""
    n = sq_dists.shape[0]
    target = math.log(perplexity)
    p = np.zeros((n, n))
    for i in range(n):
        d = np.delete(sq_dists[i], i)
        beta, beta_min, beta_max = 1.0, -np.inf, np.inf
        for _ in range(50):
            w = np.exp(-d * beta)
            total = w.sum()
            if total <= 0:
                entropy = 0.0
                row = np.zeros_like(w)
            else:
                row = w / total
                entropy = math.log(total) + beta * float((d * row).sum())
            diff = entropy - target
            if abs(diff) <= 1e-5:
                break
            if diff > 0:
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == -np.inf else (beta + beta_min) / 2.0
        p[i, np.arange(n) != i] = row
    return p


def tsne_embed(points, cfg: ClusterConfig = ClusterConfig(),
               seed: Optional[int] = None) -> TsneResult:
    """Exact t-SNE to 2-D with early exaggeration and a momentum schedule.

    Deterministic given the seed (``cfg.seed`` unless overridden).  A point
    set with all points identical cannot be embedded meaningfully; it is
    returned at the Gaussian initialization positions and flagged.
    """
    if isinstance(points, PixelPointSet):
        points = points.points
    x = np.asarray(points, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        raise ValueError("t-SNE needs at least 2 points")
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    y = rng.normal(0.0, 1e-4, size=(n, 2))

    sq = np.square(x[:, None, :] - x[None, :, :]).sum(axis=2)
    if sq.max() == 0.0:
        return TsneResult(embedding=y, kl_trace=np.empty(0), degenerate=True)

    perplexity = _effective_perplexity(cfg, n)
    cond = _conditional_affinities(sq, perplexity)
    p = (cond + cond.T) / (2.0 * n)
    p = np.maximum(p, 1e-12)

    exaggeration_until = 250
    update = np.zeros_like(y)
    gains = np.ones_like(y)
    trace = np.empty(cfg.tsne_iterations)
    for it in range(cfg.tsne_iterations):
        diff = y[:, None, :] - y[None, :, :]
        num = 1.0 / (1.0 + np.square(diff).sum(axis=2))
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), 1e-12)

        if it == exaggeration_until:
            # Fresh optimizer state for the fine-tuning phase: exaggerated
            # gradients can leave oversized gains and velocity behind.
            update = np.zeros_like(y)
            gains = np.ones_like(y)

        p_eff = p * 12.0 if it < exaggeration_until else p
        grad = 4.0 * np.einsum("ij,ij,ijk->ik", p_eff - q, num, diff)

        # Classic adaptive per-coordinate gains keep lr=50 stable.
        oscillating = update * grad < 0.0
        gains = np.where(oscillating, gains + 0.2, gains * 0.8)
        gains = np.maximum(gains, 0.01)

        momentum = 0.5 if it < exaggeration_until else 0.8
        update = momentum * update - cfg.learning_rate * gains * grad
        y = y + update
        trace[it] = float(np.sum(p * np.log(p / q)))

    return TsneResult(embedding=y, kl_trace=trace, degenerate=False)


def dbscan(points, eps: float, min_points: int) -> np.ndarray:
    """Euclidean DBSCAN labels; -1 marks noise.

    A point is core when at least ``min_points`` points (itself included)
    lie within ``eps``.  Points are scanned in input order and cluster ids
    assigned in discovery order, which pins the assignment of border points
    reachable from several clusters.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    sq = np.square(pts[:, None, :] - pts[None, :, :]).sum(axis=2)
    within = sq <= eps * eps
    neighbor_lists = [np.nonzero(row)[0] for row in within]
    core = np.array([len(nb) >= min_points for nb in neighbor_lists])

    labels = np.full(n, _UNSEEN, dtype=np.int64)
    cluster = 0
    for start in range(n):
        if labels[start] != _UNSEEN:
            continue
        if not core[start]:
            labels[start] = NOISE
            continue
        labels[start] = cluster
        queue = list(neighbor_lists[start])
        head = 0
        while head < len(queue):
            q = queue[head]
            head += 1
            if labels[q] == NOISE:
                labels[q] = cluster  # border point, previously seen as noise
            if labels[q] != _UNSEEN:
                continue
            labels[q] = cluster
            if core[q]:
                queue.extend(neighbor_lists[q])
        cluster += 1
    return labels


def _pixel_seed(seed: int, x: int, y: int) -> int:
    # Stable per-pixel stream independent of visit order and video order.
    return (seed ^ (x * 0x9E3779B1) ^ (y * 0x85EBCA77)) & 0x7FFFFFFF


def _select_centroid(points: np.ndarray, labels: np.ndarray) -> Tuple[np.ndarray, bool, bool]:
    """Mean of the largest cluster's original vectors; fallbacks flagged."""
    ids, counts = np.unique(labels[labels != NOISE], return_counts=True)
    if len(ids) == 0:
        return points.mean(axis=0), True, False
    best = counts.max()
    candidates = ids[counts == best]
    tie = len(candidates) > 1
    if tie:
        # Prefer the consensus motion: centroid nearest the coordinate-wise
        # median of all gathered points.
        median = np.median(points, axis=0)
        centroids = [points[labels == cid].mean(axis=0) for cid in candidates]
        dists = [float(np.square(c - median).sum()) for c in centroids]
        chosen = candidates[int(np.argmin(dists))]
    else:
        chosen = candidates[0]
    return points[labels == chosen].mean(axis=0), False, tie


def extract_common_motion(stacks: Sequence[AttentionStack],
                          cfg: ClusterConfig = ClusterConfig(),
                          threads: int = 1) -> Tuple[AttentionStack, ExtractionReport]:
    """Recover the shared camera motion map from m polluted stacks.

    Per pixel: gather the window points, sort them into a canonical
    (lexicographic) order so video order cannot matter, embed, cluster,
    then average the largest cluster's original t*t vectors and renormalize
    rows to sum exactly 1.
    """
    if len(stacks) < 2:
        raise ValueError("few-shot extraction needs at least 2 stacks")
    shape = stacks[0].data.shape
    for s in stacks[1:]:
        if s.data.shape != shape:
            raise ValueError("attention stacks must share dimensions and frame count")
    height, width, t = shape[0], shape[1], shape[2]
    k = cfg.window if cfg.window is not None else window_size(width)

    def solve_pixel(pixel: Tuple[int, int]) -> Tuple[np.ndarray, bool, bool]:
        y, x = pixel
        gathered = gather_window_points(stacks, x, y, k).points
        order = np.lexsort(gathered.T[::-1])
        points = gathered[order]
        pixel_cfg = cfg
        if cfg.perplexity is not None and cfg.perplexity >= len(points):
            # Clipped edge windows gather fewer points than interior ones.
            pixel_cfg = replace(cfg, perplexity=float(len(points) - 1))
        embedded = tsne_embed(points, pixel_cfg, seed=_pixel_seed(cfg.seed, x, y))
        labels = dbscan(embedded.embedding, cfg.eps, cfg.min_points)
        vector, fallback, tie = _select_centroid(points, labels)
        matrix = vector.reshape(t, t)
        matrix = matrix / matrix.sum(axis=1, keepdims=True)
        return matrix, fallback, tie

    pixels = [(y, x) for y in range(height) for x in range(width)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve_pixel, pixels))
    else:
        results = [solve_pixel(p) for p in pixels]

    out = np.empty((height, width, t, t))
    fallbacks = ties = 0
    for (y, x), (matrix, fallback, tie) in zip(pixels, results):
        out[y, x] = matrix
        fallbacks += fallback
        ties += tie
    report = ExtractionReport(pixels=len(pixels), fallback_pixels=fallbacks,
                              tie_pixels=ties)
    return AttentionStack(out), report
