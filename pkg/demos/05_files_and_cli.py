"""The MTN1 tensor format and the command-line pipeline.

Tensors round-trip bit-exactly through MTN1 files with JSON sidecars, and
every library operation is also reachable as a CLI subcommand for shell
pipelines.
"""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

import motionfield as mf

workdir = Path(tempfile.mkdtemp(prefix="motionfield_demo_"))
print("working in", workdir)

# library-side round trip
stack = mf.attention_from_frames(
    mf.render_frames(mf.make_scenario_preset("pan_left", 3))[0])
stack32 = mf.AttentionStack(stack.data.astype(np.float32))
mf.write_tensor(stack32, workdir / "a.mtn", meta={"seed": 3, "fps": 8})
back = mf.read_tensor(workdir / "a.mtn")
print("write/read round trip exact:", bool((back.data == stack32.data).all()))
print("sidecar:", mf.read_sidecar(workdir / "a.mtn"))

# the same pipeline through the CLI
def cli(*args):
    proc = subprocess.run([sys.executable, "-m", "motionfield", *args],
                          capture_output=True, text=True)
    if proc.returncode not in (0, 3):
        raise RuntimeError(proc.stderr)
    return proc.returncode, proc.stdout

cli("gen-synth", "--preset", "pan_with_object", "--seed", "7",
    "--out", str(workdir / "scene"))
code, out = cli("poisson-complete",
                "--attn", str(workdir / "scene" / "attention.mtn"),
                "--mask", str(workdir / "scene" / "merged_mask.mtn"),
                "--out", str(workdir / "completed.mtn"))
print("poisson-complete report:", json.loads(out))

_, out = cli("metrics", "--a", str(workdir / "completed.mtn"),
             "--b", str(workdir / "scene" / "attention_clean.mtn"),
             "--mask", str(workdir / "scene" / "merged_mask.mtn"))
print("distance to the camera-only oracle inside the mask:")
print(json.dumps(json.loads(out), indent=2))

cli("inspect", "--attn", str(workdir / "completed.mtn"),
    "--slice", "0,8", "--out", str(workdir / "slice.png"))
print("wrote heatmap:", workdir / "slice.png")
