"""
GLCB against uniform play on the wheel
======================================

Runs the harness on a short wheel episode for a few seeds, then reads the
summary back. The same thing from a shell:

    gatedbandit run --config configs/wheel.toml --seeds 0..4 --out runs/wheel
"""
import tempfile
from pathlib import Path

import numpy as np

from gatedbandit.harness import RunConfig, read_steps, run, step_path

out = Path(tempfile.mkdtemp()) / "wheel"
config = RunConfig.from_dict({
    "tasks": ["wheel"],
    "policies": ["glcb", "uniform", {"name": "linear_ts", "noise_var": 0.25}],
    "seeds": "0..4",
    "horizon": 1000,
    "out": str(out),
})
run(config)
print((out / "summary.csv").read_text())

# per-step logs keep the realized best reward, so regret falls out directly
steps = read_steps(step_path(out, "wheel", "glcb", 0))
regret = np.cumsum([s.optimal_reward - s.reward for s in steps])
print("GLCB seed 0 regret at t=100, 500, 1000:", regret[[99, 499, 999]].round(1))
