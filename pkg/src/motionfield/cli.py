"""Command-line front end: one subcommand per pipeline stage.

Machine-readable results go to stdout as JSON; JSON-lines progress events
go to stderr.  Exit codes: 0 success, 1 usage or config error, 2 data or
validation error, 3 solver did not converge.

A JSON config file (``--config``) may pre-set any flag through its
sections (scenario / solver / cluster / io / combine); explicit flags win.
Unknown sections or keys are rejected.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import io as mio
from .combine import (
    RegionAssignment,
    WeightedMotionSet,
    apply_attention,
    content_preserving_transfer,
    region_compose,
    weighted_combine,
)
from .fewshot import ClusterConfig, extract_common_motion, window_size
from .metrics import map_distance
from .poisson import SolverConfig, complete_attention
from .synth import PRESET_NAMES, attention_from_frames, make_scenario_preset, render_frames
from .tensors import AttentionStack, Mask2D, ValueTensor, merge_masks

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NOT_CONVERGED = 3

CONFIG_SCHEMA = {
    "scenario": {"preset", "seed", "out"},
    "solver": {"omega", "tolerance", "max_iterations", "check_stride"},
    "cluster": {"window", "eps", "min_points", "perplexity",
                "tsne_iterations", "learning_rate", "seed"},
    "io": {"attn", "mask", "values", "target_values", "a", "b", "out"},
    "combine": {"weights", "policy"},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def _progress(**event) -> None:
    print(json.dumps(event, sort_keys=True), file=sys.stderr)


def _emit(result: dict) -> None:
    print(json.dumps(result, sort_keys=True))


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        config = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    if not isinstance(config, dict):
        raise UsageError("config must be a JSON object")
    for section, keys in config.items():
        if section not in CONFIG_SCHEMA:
            raise UsageError(f"unknown config section {section!r}")
        if not isinstance(keys, dict):
            raise UsageError(f"config section {section!r} must be an object")
        unknown = set(keys) - CONFIG_SCHEMA[section]
        if unknown:
            raise UsageError(f"unknown keys in config section {section!r}: {sorted(unknown)}")
    return config


def _pick(flag, config: dict, section: str, key: str, default=None):
    """Flag value if given, else config value, else default."""
    if flag is not None:
        return flag
    return config.get(section, {}).get(key, default)


def _read_as(path, expected_type, what: str):
    tensor = mio.read_tensor(path)
    if not isinstance(tensor, expected_type):
        raise ValueError(f"{path}: expected {what}, found {type(tensor).__name__}")
    return tensor


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags win over it")
    parser.add_argument("--print-config", action="store_true",
                        help="echo the effective config as JSON and exit")
    parser.add_argument("--threads", type=int, default=1,
                        help="data-parallelism cap (results are identical for any value)")


def build_parser() -> _Parser:
    parser = _Parser(prog="motionfield",
                     description="camera motion disentanglement toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="render a synthetic scenario and its attention")
    _add_common(p)
    p.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("poisson-complete", help="harmonically fill attention under a mask")
    _add_common(p)
    p.add_argument("--attn")
    p.add_argument("--mask")
    p.add_argument("--out")
    p.add_argument("--omega", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iters", type=int)

    p = sub.add_parser("extract-few-shot", help="common camera motion from m stacks")
    _add_common(p)
    p.add_argument("--attn", action="append", default=None)
    p.add_argument("--out")
    p.add_argument("--k", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--min-pts", type=int)
    p.add_argument("--perplexity", type=float)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("combine", help="weighted sum of camera motions")
    _add_common(p)
    p.add_argument("--attn", action="append", default=None)
    p.add_argument("--weight", action="append", type=float, default=None)
    p.add_argument("--policy", choices=("strict", "renormalize_rows", "none"))
    p.add_argument("--out")

    p = sub.add_parser("compose-regions", help="assign motions to mask regions")
    _add_common(p)
    p.add_argument("--pair", action="append", default=None,
                   metavar="MASK:ATTN", help="mask file and attention file")
    p.add_argument("--policy", choices=("require_partition", "sum_then_renormalize"))
    p.add_argument("--out")

    p = sub.add_parser("apply", help="apply attention to values")
    _add_common(p)
    p.add_argument("--attn")
    p.add_argument("--values")
    p.add_argument("--preserve-mask")
    p.add_argument("--target-values")
    p.add_argument("--out")

    p = sub.add_parser("metrics", help="distance report between two stacks")
    _add_common(p)
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--mask")

    p = sub.add_parser("inspect", help="export a grayscale heatmap")
    _add_common(p)
    p.add_argument("--attn")
    p.add_argument("--pixel", metavar="X,Y", help="t x t matrix at one pixel")
    p.add_argument("--slice", dest="slice_", metavar="I,J",
                   help="H x W field of one matrix entry")
    p.add_argument("--out")

    return parser


def _require(value, name: str):
    if value is None:
        raise UsageError(f"missing required option --{name}")
    return value


def _cmd_gen_synth(args, config) -> int:
    preset = _require(_pick(args.preset, config, "scenario", "preset"), "preset")
    seed = int(_pick(args.seed, config, "scenario", "seed", 0))
    out_dir = Path(_require(_pick(args.out, config, "scenario", "out",
                                  config.get("io", {}).get("out")), "out"))
    effective = {"scenario": {"preset": preset, "seed": seed, "out": str(out_dir)}}
    if args.print_config:
        _emit(effective)
        return EXIT_OK

    scenario = make_scenario_preset(preset, seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {"seed": seed, "fps": 8, "scenario": {"preset": preset, **asdict(scenario)}}

    _progress(stage="render", preset=preset)
    frames, object_masks = render_frames(scenario)
    merged = merge_masks(object_masks)
    _progress(stage="attention")
    attention = attention_from_frames(frames)
    clean_frames, _ = render_frames(scenario.without_objects())
    attention_clean = attention_from_frames(clean_frames)

    mio.write_tensor(frames, out_dir / "frames.mtn", meta)
    mio.write_tensor(object_masks, out_dir / "object_masks.mtn", meta)
    mio.write_tensor(merged, out_dir / "merged_mask.mtn", meta)
    mio.write_tensor(attention, out_dir / "attention.mtn", meta)
    mio.write_tensor(attention_clean, out_dir / "attention_clean.mtn", meta)
    _emit({"out": str(out_dir),
           "files": ["frames.mtn", "object_masks.mtn", "merged_mask.mtn",
                     "attention.mtn", "attention_clean.mtn"]})
    return EXIT_OK


def _cmd_poisson_complete(args, config) -> int:
    attn_path = _require(_pick(args.attn, config, "io", "attn"), "attn")
    mask_path = _require(_pick(args.mask, config, "io", "mask"), "mask")
    out_path = _require(_pick(args.out, config, "io", "out"), "out")
    cfg = SolverConfig(
        omega=float(_pick(args.omega, config, "solver", "omega", 1.9)),
        tolerance=float(_pick(args.tol, config, "solver", "tolerance", 1e-6)),
        max_iterations=int(_pick(args.max_iters, config, "solver", "max_iterations", 10_000)),
        check_stride=int(config.get("solver", {}).get("check_stride", 10)),
    )
    effective = {"io": {"attn": attn_path, "mask": mask_path, "out": out_path},
                 "solver": asdict(cfg)}
    if args.print_config:
        _emit(effective)
        return EXIT_OK

    attn = _read_as(attn_path, AttentionStack, "an attention stack")
    mask = _read_as(mask_path, Mask2D, "a mask")
    _progress(stage="solve", channels=attn.frames ** 2)
    completed, report = complete_attention(attn, mask, cfg)
    mio.write_tensor(completed, out_path)
    _emit(asdict(report))
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def _cmd_extract_few_shot(args, config) -> int:
    paths = _pick(args.attn, config, "io", "attn")
    if not paths or len(paths) < 2:
        raise UsageError("need at least two --attn inputs")
    out_path = _require(_pick(args.out, config, "io", "out"), "out")
    stacks = [_read_as(p, AttentionStack, "an attention stack") for p in paths]
    k = _pick(args.k, config, "cluster", "window")
    if k is None:
        k = window_size(stacks[0].width)
    cfg = ClusterConfig(
        window=int(k),
        eps=float(_pick(args.eps, config, "cluster", "eps", 4.0)),
        min_points=int(_pick(args.min_pts, config, "cluster", "min_points", 3)),
        perplexity=_pick(args.perplexity, config, "cluster", "perplexity"),
        tsne_iterations=int(config.get("cluster", {}).get("tsne_iterations", 1000)),
        learning_rate=float(config.get("cluster", {}).get("learning_rate", 50.0)),
        seed=int(_pick(args.seed, config, "cluster", "seed", 0)),
    )
    effective = {"io": {"attn": list(paths), "out": out_path}, "cluster": asdict(cfg)}
    if args.print_config:
        _emit(effective)
        return EXIT_OK

    _progress(stage="extract", videos=len(stacks), window=cfg.window)
    stack, report = extract_common_motion(stacks, cfg, threads=max(1, args.threads))
    mio.write_tensor(stack, out_path)
    _emit(asdict(report))
    return EXIT_OK


def _cmd_combine(args, config) -> int:
    paths = _pick(args.attn, config, "io", "attn")
    weights = _pick(args.weight, config, "combine", "weights")
    policy = _pick(args.policy, config, "combine", "policy", "strict")
    out_path = _require(_pick(args.out, config, "io", "out"), "out")
    if not paths:
        raise UsageError("need at least one --attn input")
    if not weights or len(weights) != len(paths):
        raise UsageError("need one --weight per --attn")
    effective = {"io": {"attn": list(paths), "out": out_path},
                 "combine": {"weights": list(weights), "policy": policy}}
    if args.print_config:
        _emit(effective)
        return EXIT_OK

    members = tuple(
        (_read_as(p, AttentionStack, "an attention stack"), float(w))
        for p, w in zip(paths, weights))
    combined = weighted_combine(WeightedMotionSet(members=members, policy=policy))
    mio.write_tensor(combined, out_path)
    _emit({"out": out_path, "members": len(members), "policy": policy})
    return EXIT_OK


def _cmd_compose_regions(args, config) -> int:
    pairs = args.pair
    policy = _pick(args.policy, config, "combine", "policy", "require_partition")
    out_path = _require(_pick(args.out, config, "io", "out"), "out")
    if not pairs:
        raise UsageError("need at least one --pair MASK:ATTN")
    effective = {"io": {"out": out_path},
                 "combine": {"policy": policy}, "pairs": list(pairs)}
    if args.print_config:
        _emit(effective)
        return EXIT_OK

    members = []
    for pair in pairs:
        if ":" not in pair:
            raise UsageError(f"--pair must look like MASK:ATTN, got {pair!r}")
        mask_path, attn_path = pair.split(":", 1)
        members.append((_read_as(mask_path, Mask2D, "a mask"),
                        _read_as(attn_path, AttentionStack, "an attention stack")))
    composed = region_compose(RegionAssignment(members=tuple(members), policy=policy))
    mio.write_tensor(composed, out_path)
    _emit({"out": out_path, "regions": len(members), "policy": policy})
    return EXIT_OK


def _cmd_apply(args, config) -> int:
    attn_path = _require(_pick(args.attn, config, "io", "attn"), "attn")
    values_path = _require(_pick(args.values, config, "io", "values"), "values")
    out_path = _require(_pick(args.out, config, "io", "out"), "out")
    mask_path = _pick(args.preserve_mask, config, "io", "mask")
    target_path = _pick(args.target_values, config, "io", "target_values")
    if (mask_path is None) != (target_path is None):
        raise UsageError("--preserve-mask and --target-values go together")
    effective = {"io": {"attn": attn_path, "values": values_path, "out": out_path,
                        "mask": mask_path, "target_values": target_path}}
    if args.print_config:
        _emit(effective)
        return EXIT_OK

    attn = _read_as(attn_path, AttentionStack, "an attention stack")
    values = _read_as(values_path, ValueTensor, "a value tensor")
    if mask_path is None:
        result = apply_attention(attn, values)
    else:
        mask = _read_as(mask_path, Mask2D, "a mask")
        target = _read_as(target_path, ValueTensor, "a value tensor")
        result = content_preserving_transfer(attn, target, values, mask)
    mio.write_tensor(result, out_path)
    _emit({"out": out_path, "content_preserving": mask_path is not None})
    return EXIT_OK


def _cmd_metrics(args, config) -> int:
    a_path = _require(_pick(args.a, config, "io", "a"), "a")
    b_path = _require(_pick(args.b, config, "io", "b"), "b")
    mask_path = _pick(args.mask, config, "io", "mask")
    effective = {"io": {"a": a_path, "b": b_path, "mask": mask_path}}
    if args.print_config:
        _emit(effective)
        return EXIT_OK

    a = _read_as(a_path, AttentionStack, "an attention stack")
    b = _read_as(b_path, AttentionStack, "an attention stack")
    mask = _read_as(mask_path, Mask2D, "a mask") if mask_path else None
    _emit(map_distance(a, b, mask).to_dict())
    return EXIT_OK


def _parse_int_pair(text: str, name: str) -> tuple:
    try:
        first, second = text.split(",")
        return int(first), int(second)
    except ValueError:
        raise UsageError(f"--{name} expects two comma-separated integers, got {text!r}")


def _cmd_inspect(args, config) -> int:
    attn_path = _require(_pick(args.attn, config, "io", "attn"), "attn")
    out_path = _require(_pick(args.out, config, "io", "out"), "out")
    if (args.pixel is None) == (args.slice_ is None):
        raise UsageError("give exactly one of --pixel or --slice")
    effective = {"io": {"attn": attn_path, "out": out_path},
                 "pixel": args.pixel, "slice": args.slice_}
    if args.print_config:
        _emit(effective)
        return EXIT_OK

    attn = _read_as(attn_path, AttentionStack, "an attention stack")
    if args.pixel is not None:
        x, y = _parse_int_pair(args.pixel, "pixel")
        if not (0 <= x < attn.width and 0 <= y < attn.height):
            raise ValueError(f"pixel ({x},{y}) outside {attn.width}x{attn.height} canvas")
        image = attn.data[y, x]
    else:
        i, j = _parse_int_pair(args.slice_, "slice")
        if not (0 <= i < attn.frames and 0 <= j < attn.frames):
            raise ValueError(f"slice ({i},{j}) outside {attn.frames} frames")
        image = attn.data[:, :, i, j]

    lo, hi = float(image.min()), float(image.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    pixels = np.round((image - lo) * scale).astype(np.uint8)
    from PIL import Image

    Image.fromarray(pixels, mode="L").save(out_path, format="PNG")
    _emit({"out": out_path, "min": lo, "max": hi,
           "shape": list(image.shape)})
    return EXIT_OK


_COMMANDS = {
    "gen-synth": _cmd_gen_synth,
    "poisson-complete": _cmd_poisson_complete,
    "extract-few-shot": _cmd_extract_few_shot,
    "combine": _cmd_combine,
    "compose-regions": _cmd_compose_regions,
    "apply": _cmd_apply,
    "metrics": _cmd_metrics,
    "inspect": _cmd_inspect,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config(args.config)
        return _COMMANDS[args.command](args, config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
