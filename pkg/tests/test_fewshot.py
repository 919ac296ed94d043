import numpy as np
import pytest

from motionfield import (
    AttentionStack,
    ClusterConfig,
    dbscan,
    extract_common_motion,
    gather_window_points,
    tsne_embed,
    window_size,
)

from conftest import random_attention


def dbscan_reference(points, eps, min_pts):
    """Declarative O(n^2) DBSCAN: cores by neighbor count, clusters as
    connected components of cores ordered by their smallest member index,
    border points joining the earliest-discovered reachable cluster."""
    pts = np.asarray(points, float)
    n = len(pts)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    d2 = np.square(pts[:, None] - pts[None]).sum(-1)
    within = d2 <= eps * eps
    core = within.sum(axis=1) >= min_pts

    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        if not core[i]:
            continue
        for j in range(i + 1, n):
            if core[j] and within[i, j]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    labels = np.full(n, -1, dtype=np.int64)
    next_id = {}
    for i in range(n):
        if core[i]:
            root = find(i)
            if root not in next_id:
                next_id[root] = len(next_id)
            labels[i] = next_id[root]
    for i in range(n):
        if core[i]:
            continue
        reachable = [labels[j] for j in range(n) if core[j] and within[i, j]]
        if reachable:
            labels[i] = min(reachable)
    return labels


def canonical(labels):
    """Relabel clusters by first appearance; noise stays -1."""
    mapping = {}
    out = []
    for label in labels:
        if label == -1:
            out.append(-1)
            continue
        if label not in mapping:
            mapping[label] = len(mapping)
        out.append(mapping[label])
    return out


# -- window machinery ---------------------------------------------------------

def test_window_size_formula():
    assert window_size(16) == 3
    assert window_size(32) == 5
    assert window_size(64) == 9
    assert window_size(1) == 3
    assert window_size(17) == 5


def test_gather_single_pixel_window(rng):
    stacks = [random_attention(rng, 4, 4, 3) for _ in range(3)]
    got = gather_window_points(stacks, 2, 1, 1)
    assert got.points.shape == (3, 9)
    for video in range(3):
        np.testing.assert_array_equal(got.points[video],
                                      stacks[video].data[1, 2].reshape(9))
        assert got.provenance[video] == (video, (0, 0))


def test_gather_clips_at_corner(rng):
    stacks = [random_attention(rng, 5, 5, 2) for _ in range(2)]
    got = gather_window_points(stacks, 0, 0, 3)
    assert got.points.shape == (2 * 4, 4)  # 2x2 in-canvas corner window


def test_gather_interior_count(rng):
    stacks = [random_attention(rng, 8, 8, 2) for _ in range(5)]
    got = gather_window_points(stacks, 4, 4, 3)
    assert got.points.shape == (45, 4)


def test_gather_rejects_mismatched_frames(rng):
    stacks = [random_attention(rng, 4, 4, 3), random_attention(rng, 4, 4, 4)]
    with pytest.raises(ValueError, match="share dimensions"):
        gather_window_points(stacks, 1, 1, 3)


# -- t-SNE ---------------------------------------------------------------------

def test_tsne_two_distinct_points():
    result = tsne_embed(np.array([[0.0, 0.0], [1.0, 1.0]]),
                        ClusterConfig(perplexity=1.0), seed=0)
    assert not result.degenerate
    assert np.isfinite(result.embedding).all()
    assert np.linalg.norm(result.embedding[0] - result.embedding[1]) > 0


def test_tsne_degenerate_duplicates():
    points = np.ones((10, 4))
    result = tsne_embed(points, ClusterConfig(), seed=3)
    assert result.degenerate
    assert np.abs(result.embedding).max() < 1e-2  # still at the init scale


def test_tsne_is_seeded():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(30, 8))
    a = tsne_embed(pts, ClusterConfig(), seed=5).embedding
    b = tsne_embed(pts, ClusterConfig(), seed=5).embedding
    c = tsne_embed(pts, ClusterConfig(), seed=6).embedding
    np.testing.assert_array_equal(a, b)
    assert (a != c).any()


def test_tsne_separates_three_blobs():
    rng = np.random.default_rng(7)
    centers = rng.normal(0, 5, (3, 64))
    pts = np.vstack([c + rng.normal(0, 0.05, (15, 64)) for c in centers])
    result = tsne_embed(pts, ClusterConfig(), seed=7)
    labels = dbscan(result.embedding, eps=4.0, min_points=3)
    assert len(set(labels.tolist()) - {-1}) == 3
    assert (labels != -1).all()


def test_tsne_objective_improves_after_exaggeration():
    rng = np.random.default_rng(11)
    pts = rng.normal(size=(40, 16))
    result = tsne_embed(pts, ClusterConfig(), seed=11)
    assert result.kl_trace[-1] <= result.kl_trace[250]


def test_tsne_perplexity_bounds():
    pts = np.random.default_rng(0).normal(size=(10, 3))
    with pytest.raises(ValueError, match="perplexity"):
        tsne_embed(pts, ClusterConfig(perplexity=10.0))
    with pytest.raises(ValueError):
        tsne_embed(pts[:1], ClusterConfig())


# -- DBSCAN --------------------------------------------------------------------

def test_dbscan_triangle_single_cluster():
    labels = dbscan(np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]), 1.5, 3)
    assert labels.tolist() == [0, 0, 0]


def test_dbscan_isolate_is_noise():
    blob = np.random.default_rng(2).normal(0, 0.1, (10, 2))
    pts = np.vstack([blob, [[100.0, 100.0]]])
    labels = dbscan(pts, 1.0, 3)
    assert labels[-1] == -1
    assert (labels[:-1] == 0).all()


def test_dbscan_empty_input():
    assert dbscan(np.empty((0, 2)), 1.0, 3).shape == (0,)


def test_dbscan_counts_self():
    # two points within eps: each has 2 neighbors including itself
    labels = dbscan(np.array([[0.0, 0.0], [0.5, 0.0]]), 1.0, 2)
    assert labels.tolist() == [0, 0]


def test_dbscan_matches_reference(rng):
    for trial in range(25):
        n = int(rng.integers(5, 120))
        scale = rng.choice([0.5, 1.0, 3.0])
        pts = rng.normal(0, scale, (n, 2))
        eps = float(rng.uniform(0.2, 1.5))
        min_pts = int(rng.integers(2, 6))
        got = canonical(dbscan(pts, eps, min_pts))
        want = canonical(dbscan_reference(pts, eps, min_pts))
        assert got == want, f"trial {trial}: eps={eps} min_pts={min_pts}"


# -- extraction ----------------------------------------------------------------

def test_extract_identity_for_identical_stacks(rng):
    stack = random_attention(rng, 4, 4, 3)
    cfg = ClusterConfig(window=1)
    out, report = extract_common_motion([stack] * 5, cfg)
    np.testing.assert_allclose(out.data, stack.data, atol=1e-12)
    assert report.pixels == 16


def test_extract_requires_two_stacks(rng):
    with pytest.raises(ValueError, match="at least 2"):
        extract_common_motion([random_attention(rng, 4, 4, 3)], ClusterConfig())


def test_extract_all_noise_fallback(rng):
    # two videos, window of one: 2 points per pixel can never reach 3 cores
    a, b = random_attention(rng, 3, 3, 3), random_attention(rng, 3, 3, 3)
    cfg = ClusterConfig(window=1, min_points=3)
    out, report = extract_common_motion([a, b], cfg)
    assert report.fallback_pixels == 9
    mean = (a.data + b.data) / 2.0
    mean /= mean.sum(axis=3, keepdims=True)
    np.testing.assert_allclose(out.data, mean, atol=1e-12)


def test_extract_video_order_invariance(rng):
    stacks = [random_attention(rng, 3, 3, 3) for _ in range(4)]
    cfg = ClusterConfig(window=3, seed=9)
    out_a, _ = extract_common_motion(stacks, cfg)
    out_b, _ = extract_common_motion(stacks[::-1], cfg)
    np.testing.assert_allclose(out_a.data, out_b.data, atol=1e-5)


def test_minority_pollution_never_contaminates_centroid(rng):
    from motionfield.fewshot import _select_centroid

    # 27 tightly grouped clean points, 18 polluted ones displaced as one
    # coherent far-away group: strictly fewer than half are polluted.
    clean_center = rng.random(16)
    offset = rng.choice([-8.0, 8.0], size=16)
    clean = clean_center + rng.normal(0, 1e-4, (27, 16))
    polluted = clean_center + offset + rng.normal(0, 1e-4, (18, 16))
    points = np.vstack([clean, polluted])
    order = np.lexsort(points.T[::-1])
    points = points[order]
    is_clean = order < 27

    result = tsne_embed(points, ClusterConfig(perplexity=15.0), seed=4)
    emb = result.embedding
    clean_diameter = np.sqrt(
        np.square(emb[is_clean][:, None] - emb[is_clean][None]).sum(-1)).max()
    displacement = np.sqrt(
        np.square(emb[~is_clean] - emb[is_clean].mean(axis=0)).sum(-1)).min()
    assert displacement >= 5 * clean_diameter  # the property's precondition

    labels = dbscan(emb, eps=4.0, min_points=3)
    vector, fallback, _ = _select_centroid(points, labels)
    assert not fallback
    np.testing.assert_allclose(vector, points[is_clean].mean(axis=0), atol=1e-12)


def test_extract_threads_agree(rng):
    stacks = [random_attention(rng, 4, 4, 2) for _ in range(3)]
    cfg = ClusterConfig(window=3, seed=2)
    single, _ = extract_common_motion(stacks, cfg, threads=1)
    multi, _ = extract_common_motion(stacks, cfg, threads=4)
    np.testing.assert_array_equal(single.data, multi.data)


def test_extract_output_is_stochastic(rng):
    stacks = [random_attention(rng, 4, 4, 3) for _ in range(3)]
    out, _ = extract_common_motion(stacks, ClusterConfig(window=3))
    sums = out.data.sum(axis=3)
    np.testing.assert_allclose(sums, 1.0, atol=1e-12)
    assert out.data.min() >= 0.0


def test_cluster_config_validation():
    with pytest.raises(ValueError):
        ClusterConfig(window=2)
    with pytest.raises(ValueError):
        ClusterConfig(eps=0.0)
    with pytest.raises(ValueError):
        ClusterConfig(min_points=0)
