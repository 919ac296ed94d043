import numpy as np
import pytest

from motionfield import (
    AttentionStack,
    Mask2D,
    map_distance,
    stochasticity_error,
)

from conftest import disk_mask, random_attention


def test_identical_stacks_zero_distances(rng):
    a = random_attention(rng, 3, 3, 4)
    report = map_distance(a, a)
    assert report.mean_abs == 0.0
    assert report.frobenius == 0.0
    assert report.mean_row_l1 == 0.0
    assert report.max_pixel_frobenius == 0.0
    assert report.mean_row_kl <= 1e-9


def test_single_perturbation_max_frobenius(rng):
    a = random_attention(rng, 3, 3, 4)
    data = a.data.copy()
    data[1, 2, 0, 0] += 0.1
    report = map_distance(a, AttentionStack(data))
    assert report.max_pixel_frobenius == pytest.approx(0.1, abs=1e-12)


def test_frobenius_matches_brute_force(rng):
    a, b = random_attention(rng, 3, 4, 3), random_attention(rng, 3, 4, 3)
    report = map_distance(a, b)
    expected = np.sqrt(np.sum((a.data - b.data) ** 2))
    assert report.frobenius == pytest.approx(expected, abs=1e-9)
    assert report.mean_abs == pytest.approx(np.abs(a.data - b.data).mean(), abs=1e-12)


def test_symmetry_and_triangle(rng):
    a = random_attention(rng, 3, 3, 3)
    b = random_attention(rng, 3, 3, 3)
    c = random_attention(rng, 3, 3, 3)
    ab, ba = map_distance(a, b), map_distance(b, a)
    assert ab.frobenius == ba.frobenius
    assert ab.mean_abs == ba.mean_abs
    assert ab.mean_row_l1 == ba.mean_row_l1
    ac, cb = map_distance(a, c), map_distance(c, b)
    assert ab.frobenius <= ac.frobenius + cb.frobenius + 1e-12


def test_masked_restriction(rng):
    a, b = random_attention(rng, 6, 6, 3), random_attention(rng, 6, 6, 3)
    mask = disk_mask(6, 6, 3, 3, 2)
    report = map_distance(a, b, mask)
    assert report.masked
    assert report.pixels == int(mask.data.sum())
    sel = mask.data.astype(bool)
    expected = np.abs(a.data[sel] - b.data[sel]).mean()
    assert report.mean_abs == pytest.approx(expected, abs=1e-12)


def test_kl_handles_exact_zeros():
    eye = AttentionStack(np.broadcast_to(np.eye(3), (2, 2, 3, 3)).copy())
    uniform = AttentionStack(np.full((2, 2, 3, 3), 1.0 / 3.0))
    report = map_distance(eye, uniform)
    assert np.isfinite(report.mean_row_kl)
    assert report.mean_row_kl > 0


def test_report_serializes(rng):
    import json

    a, b = random_attention(rng, 2, 2, 3), random_attention(rng, 2, 2, 3)
    blob = json.dumps(map_distance(a, b).to_dict())
    assert "frobenius" in blob


def test_stochasticity_error_uniform():
    t = 5
    stack = AttentionStack(np.full((2, 2, t, t), 1.0 / t))
    dev, lo = stochasticity_error(stack)
    assert dev == 0.0
    assert lo == pytest.approx(1.0 / t)


def test_stochasticity_error_doubled_row(rng):
    stack = random_attention(rng, 2, 2, 4)
    data = stack.data.copy()
    data[0, 0, 1] *= 2
    dev, _ = stochasticity_error(AttentionStack(data))
    assert dev == pytest.approx(1.0, abs=1e-9)


def test_completed_stack_stochasticity(rng):
    from motionfield import SolverConfig, complete_attention

    stack = random_attention(rng, 10, 10, 4)
    mask = disk_mask(10, 10, 5, 5, 3)
    completed, _ = complete_attention(stack, mask, SolverConfig(tolerance=1e-6))
    dev, _ = stochasticity_error(completed)
    assert dev <= 4 * 1e-6
