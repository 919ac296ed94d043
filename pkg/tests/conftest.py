import numpy as np
import pytest

from motionfield import AttentionStack, Mask2D


def random_attention(rng, height, width, frames):
    """Row-stochastic stack with softmax-shaped rows."""
    logits = rng.normal(0.0, 1.0, (height, width, frames, frames))
    logits -= logits.max(axis=3, keepdims=True)
    w = np.exp(logits)
    return AttentionStack(w / w.sum(axis=3, keepdims=True))


def disk_mask(height, width, cx, cy, radius):
    yy, xx = np.mgrid[0:height, 0:width]
    return Mask2D(((xx - cx) ** 2 + (yy - cy) ** 2 <= radius ** 2).astype(np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
