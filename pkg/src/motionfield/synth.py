"""Synthetic scenario generator and exact attention oracle.

Renders a smooth seeded texture under a parametric camera warp, optionally
composites moving textured blobs on top, and computes the exact per-pixel
temporal attention of the result.  Because every step is deterministic and
closed-form, object-free scenarios provide ground-truth *camera-only*
attention against which the disentanglement operations are verified.

Conventions:
  - frames are 0-indexed and frame 0 always shows the unwarped texture;
  - frame i of a pan samples the texture at ``p + i * (vx, vy)``;
  - frame i of a zoom samples at ``center + acc_i * (p - center)`` where
    ``acc_i`` is the accumulated per-frame scale (``acc_0 = 1``);
  - sampling is bilinear with mirror reflection at texture edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import map_coordinates

from .tensors import AttentionStack, Mask2D, MaskStack, ValueTensor

PRESET_NAMES = (
    "pan_left",
    "pan_right",
    "zoom_in",
    "zoom_out",
    "variable_zoom",
    "dolly_zoom",
    "pan_with_object",
)


@dataclass(frozen=True)
class CameraMotion:
    """Parametric 2-D camera warp.

    ``kind`` selects which fields apply: pan uses ``velocity`` (pixels per
    frame), zoom uses ``scale`` (per-frame factor) and ``center``,
    variable_zoom uses ``scale_steps`` (entry i is the step from frame i-1
    to frame i; entry 0 is unused since frame 0 is unwarped), composite
    applies ``members`` in sequence.
    """

    kind: str
    velocity: Tuple[float, float] = (0.0, 0.0)
    scale: float = 1.0
    scale_steps: Tuple[float, ...] = ()
    center: Tuple[float, float] = (0.0, 0.0)
    members: Tuple["CameraMotion", ...] = ()

    def __post_init__(self):
        if self.kind not in ("pan", "zoom", "variable_zoom", "composite"):
            raise ValueError(f"unknown camera kind {self.kind!r}")
        if self.kind == "zoom" and not self.scale > 0:
            raise ValueError("zoom scale must be > 0")
        if self.kind == "composite" and not self.members:
            raise ValueError("composite camera needs at least one member")
        object.__setattr__(self, "scale_steps", tuple(self.scale_steps))
        object.__setattr__(self, "members", tuple(self.members))

    @staticmethod
    def pan(velocity: Tuple[float, float]) -> "CameraMotion":
        return CameraMotion(kind="pan", velocity=velocity)

    @staticmethod
    def zoom(scale: float, center: Tuple[float, float]) -> "CameraMotion":
        return CameraMotion(kind="zoom", scale=scale, center=center)

    @staticmethod
    def variable_zoom(steps: Sequence[float], center: Tuple[float, float]) -> "CameraMotion":
        return CameraMotion(kind="variable_zoom", scale_steps=tuple(steps), center=center)

    @staticmethod
    def composite(members: Sequence["CameraMotion"]) -> "CameraMotion":
        return CameraMotion(kind="composite", members=tuple(members))


@dataclass(frozen=True)
class ObjectMotion:
    """A textured disk that moves along an explicit per-frame trajectory."""

    trajectory: Tuple[Tuple[float, float], ...]  # t x (x, y)
    radius: float
    texture_seed: int
    texture_cell: Optional[int] = None  # defaults to the scenario's cell

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("blob radius must be > 0")
        object.__setattr__(self, "trajectory", tuple(map(tuple, self.trajectory)))


@dataclass(frozen=True)
class Scenario:
    """Full description of a synthetic camera+object motion."""

    width: int
    height: int
    frames: int
    channels: int
    texture_seed: int
    camera: CameraMotion
    objects: Tuple[ObjectMotion, ...] = ()
    texture_cell: int = 8

    def __post_init__(self):
        if self.frames < 2:
            raise ValueError("scenario needs at least 2 frames")
        if self.channels < 1:
            raise ValueError("scenario needs at least 1 channel")
        for obj in self.objects:
            if len(obj.trajectory) != self.frames:
                raise ValueError("object trajectory length must equal frame count")
        if self.camera.kind == "variable_zoom" and len(self.camera.scale_steps) != self.frames:
            raise ValueError("variable_zoom step list length must equal frame count")
        object.__setattr__(self, "objects", tuple(self.objects))

    @property
    def softmax_scale(self) -> float:
        return 1.0 / math.sqrt(self.channels)

    def without_objects(self) -> "Scenario":
        """The same camera and texture with no foreground objects."""
        return Scenario(
            width=self.width, height=self.height, frames=self.frames,
            channels=self.channels, texture_seed=self.texture_seed,
            camera=self.camera, objects=(), texture_cell=self.texture_cell)


def make_texture(seed: int, width: int, height: int, channels: int,
                 cell: int = 8) -> np.ndarray:
    """Smooth deterministic field in [0, 1], shape [H, W, c].

    A seeded coarse random grid with one node every ``cell`` pixels is
    bilinearly interpolated to full resolution, per channel.
    """
    if cell < 2:
        raise ValueError("texture cell size must be >= 2")
    rng = np.random.default_rng(seed)
    coarse_h = -(-height // cell) + 1
    coarse_w = -(-width // cell) + 1
    coarse = rng.random((coarse_h, coarse_w, channels))
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    coords = [ys / cell, xs / cell]
    out = np.empty((height, width, channels))
    for ch in range(channels):
        out[:, :, ch] = map_coordinates(coarse[:, :, ch], coords, order=1, mode="mirror")
    return out


def _accumulated_scales(camera: CameraMotion, frames: int) -> np.ndarray:
    steps = np.ones(frames)
    if camera.kind == "zoom":
        steps[1:] = camera.scale
    else:
        steps[1:] = camera.scale_steps[1:]
    acc = np.cumprod(steps)
    if (acc <= 0).any():
        raise ValueError("degenerate zoom: accumulated scale <= 0")
    return acc


def _sample_coords(camera: CameraMotion, frame: int, xs: np.ndarray,
                   ys: np.ndarray, frames: int) -> Tuple[np.ndarray, np.ndarray]:
    """Source coordinates the given frame samples the texture at."""
    if camera.kind == "pan":
        vx, vy = camera.velocity
        return xs + frame * vx, ys + frame * vy
    if camera.kind in ("zoom", "variable_zoom"):
        acc = _accumulated_scales(camera, frames)[frame]
        cx, cy = camera.center
        return cx + acc * (xs - cx), cy + acc * (ys - cy)
    if camera.kind == "composite":
        for member in camera.members:
            xs, ys = _sample_coords(member, frame, xs, ys, frames)
        return xs, ys
    raise ValueError(f"unknown camera kind {camera.kind!r}")


def _sample_texture(texture: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear lookup with mirror reflection beyond the edges."""
    out = np.empty(xs.shape + (texture.shape[2],))
    for ch in range(texture.shape[2]):
        out[:, :, ch] = map_coordinates(
            texture[:, :, ch], [ys, xs], order=1, mode="mirror")
    return out


def warp_texture(texture: np.ndarray, camera: CameraMotion, frames: int) -> np.ndarray:
    """Render ``frames`` camera-warped views of ``texture``, [H, W, t, c]."""
    height, width = texture.shape[:2]
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    out = np.empty((height, width, frames, texture.shape[2]))
    for i in range(frames):
        sx, sy = _sample_coords(camera, i, xs, ys, frames)
        out[:, :, i, :] = _sample_texture(texture, sx, sy)
    return out


def render_frames(scenario: Scenario) -> Tuple[ValueTensor, MaskStack]:
    """Render a scenario into per-frame features plus per-frame object masks.

    Blobs are composited by hard replacement, so the returned masks are the
    exact support of every pixel the objects touched.
    """
    texture = make_texture(scenario.texture_seed, scenario.width, scenario.height,
                           scenario.channels, scenario.texture_cell)
    frames = warp_texture(texture, scenario.camera, scenario.frames)

    height, width = scenario.height, scenario.width
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    masks = np.zeros((scenario.frames, height, width), dtype=np.uint8)
    for obj in scenario.objects:
        blob_texture = make_texture(obj.texture_seed, width, height,
                                    scenario.channels,
                                    obj.texture_cell or scenario.texture_cell)
        x0, y0 = obj.trajectory[0]
        for i, (cx, cy) in enumerate(obj.trajectory):
            support = (xs - cx) ** 2 + (ys - cy) ** 2 <= obj.radius ** 2
            if not support.any():
                continue
            # Texture rides along with the blob: sample it in blob-local coords.
            patch = _sample_texture(blob_texture, xs - cx + x0, ys - cy + y0)
            frames[support, i, :] = patch[support]
            masks[i][support] = 1

    mask_stack = MaskStack(tuple(Mask2D(m) for m in masks))
    return ValueTensor(frames), mask_stack


def attention_from_frames(frames: ValueTensor) -> AttentionStack:
    """Exact per-pixel temporal self-attention of rendered frames.

    Per pixel, queries and keys are the t x c matrix of that pixel's
    per-frame features; the output is the row-softmax of Q K^T / sqrt(c).
    """
    f = frames.data
    if not np.isfinite(f).all():
        raise ValueError("frames contain non-finite values")
    if f.shape[2] < 2:
        raise ValueError("attention needs at least 2 frames")
    scale = 1.0 / math.sqrt(f.shape[3])
    logits = np.einsum("hwic,hwjc->hwij", f, f) * scale
    logits -= logits.max(axis=3, keepdims=True)
    weights = np.exp(logits)
    weights /= weights.sum(axis=3, keepdims=True)
    return AttentionStack(weights)


def make_scenario_preset(name: str, seed: int) -> Scenario:
    """Deterministic named scenario: 64x64 canvas, 16 frames, 4 channels.

    Scene textures are smooth (one coarse node every 16 pixels) while blobs
    carry a much finer texture, so foreground objects disrupt the temporal
    attention far more than the gentle camera warp does.
    """
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    width = height = 64
    frames, channels = 16, 4
    center = (width / 2.0, height / 2.0)
    blob_seed = seed + 101

    def blob(trajectory, radius=10.0):
        return ObjectMotion(trajectory=tuple(trajectory), radius=radius,
                            texture_seed=blob_seed, texture_cell=2)

    if name == "pan_left":
        camera, objects = CameraMotion.pan((-1.0, 0.0)), ()
    elif name == "pan_right":
        camera, objects = CameraMotion.pan((1.0, 0.0)), ()
    elif name == "zoom_in":
        camera, objects = CameraMotion.zoom(1.03, center), ()
    elif name == "zoom_out":
        camera, objects = CameraMotion.zoom(1.0 / 1.03, center), ()
    elif name == "variable_zoom":
        steps = (1.06,) * 8 + (1.01,) * 8  # fast first half, slow second half
        camera, objects = CameraMotion.variable_zoom(steps, center), ()
    elif name == "dolly_zoom":
        camera = CameraMotion.zoom(1.03, center)
        objects = (blob([(center[0], center[1])] * frames),)
    else:  # pan_with_object
        camera = CameraMotion.pan((1.0, 0.0))
        objects = (blob([(40.0 - i, 32.0) for i in range(frames)]),)

    return Scenario(width=width, height=height, frames=frames, channels=channels,
                    texture_seed=seed, camera=camera, objects=objects,
                    texture_cell=16)
