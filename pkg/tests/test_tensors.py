import numpy as np
import pytest

from motionfield import (
    AttentionStack,
    Mask2D,
    MaskStack,
    ValidationError,
    ValueTensor,
    mask_boundary,
    merge_masks,
    validate_attention,
)

from conftest import random_attention


def test_attention_shape_and_invariants():
    uniform = np.full((2, 2, 3, 3), 1.0 / 3.0)
    stack = AttentionStack(uniform)
    assert (stack.height, stack.width, stack.frames) == (2, 2, 3)

    with pytest.raises(ValidationError):
        AttentionStack(np.zeros((2, 2, 3, 4)))  # not square in (i, j)
    with pytest.raises(ValidationError):
        AttentionStack(np.full((1, 1, 2, 2), np.nan))


def test_validate_uniform_rows():
    t = 4
    stack = AttentionStack(np.full((3, 5, t, t), 1.0 / t))
    report = validate_attention(stack)
    assert report.max_row_sum_error == 0.0
    assert report.min_value == pytest.approx(1.0 / t)
    assert report.violating_rows == 0
    assert report.ok


def test_validate_identity_rows():
    eye = np.broadcast_to(np.eye(4), (2, 2, 4, 4)).copy()
    report = validate_attention(AttentionStack(eye))
    assert report.max_row_sum_error == 0.0
    assert report.min_value == 0.0
    assert report.violating_rows == 0


def test_validate_counts_scaled_row(rng):
    stack = random_attention(rng, 2, 2, 4)
    data = stack.data.copy()
    data[1, 1, 2] *= 2.0
    report = validate_attention(AttentionStack(data))
    assert report.violating_rows == 1
    assert report.max_row_sum_error == pytest.approx(1.0, abs=1e-9)


def test_mask_values_checked():
    with pytest.raises(ValidationError):
        Mask2D(np.full((4, 4), 2))
    mask = Mask2D(np.eye(4, dtype=np.uint8))
    assert mask.data.dtype == np.uint8


def test_mask_stack_dims_must_agree():
    a = Mask2D(np.zeros((4, 4), np.uint8))
    b = Mask2D(np.zeros((4, 5), np.uint8))
    with pytest.raises(ValidationError):
        MaskStack((a, b))
    with pytest.raises(ValidationError):
        MaskStack(())


def test_merge_masks_union():
    left = np.zeros((4, 6), np.uint8)
    left[:, :3] = 1
    right = np.zeros((4, 6), np.uint8)
    right[:, 3:] = 1
    merged = merge_masks(MaskStack((Mask2D(left), Mask2D(right))))
    assert merged.data.all()


def test_merge_masks_zero_and_identity():
    zero = Mask2D(np.zeros((3, 3), np.uint8))
    assert not merge_masks(MaskStack((zero, zero))).data.any()

    one = Mask2D(np.eye(3, dtype=np.uint8))
    np.testing.assert_array_equal(merge_masks(MaskStack((one,))).data, one.data)


def test_merge_masks_monotone_and_commutative(rng):
    frames = [Mask2D((rng.random((5, 5)) < 0.3).astype(np.uint8)) for _ in range(4)]
    merged = merge_masks(MaskStack(tuple(frames)))
    shuffled = merge_masks(MaskStack(tuple(frames[::-1])))
    np.testing.assert_array_equal(merged.data, shuffled.data)
    # adding a frame never clears a pixel
    extended = merge_masks(MaskStack(tuple(frames) + (frames[0],)))
    assert (extended.data >= merged.data).all()


def test_mask_boundary_single_pixel():
    grid = np.zeros((10, 10), np.uint8)
    grid[5, 5] = 1  # (x=5, y=5)
    boundary = mask_boundary(Mask2D(grid))
    assert boundary == {(4, 5), (6, 5), (5, 4), (5, 6)}


def test_mask_boundary_degenerate():
    assert mask_boundary(Mask2D(np.zeros((5, 5), np.uint8))) == set()
    assert mask_boundary(Mask2D(np.ones((5, 5), np.uint8))) == set()


def test_value_tensor_finite():
    with pytest.raises(ValidationError):
        ValueTensor(np.full((1, 1, 2, 2), np.inf))
    v = ValueTensor(np.zeros((2, 3, 4, 5)))
    assert (v.height, v.width, v.frames, v.channels) == (2, 3, 4, 5)
