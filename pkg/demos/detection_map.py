"""
A change map from a synthetic image stack
=========================================

Writes a small stack to disk in the library's binary format, reads it back
and slides a 5 x 5 window over it. The centre square changes halfway
through the series.
"""

import tempfile
from pathlib import Path

import numpy as np

from sgkron import ModelDims, RocScenario, detection_map, load_mits, save_mits
from sgkron.simlab import simulate_image_stack

scenario = RocScenario(dims=ModelDims(4, 3, 1), T=10)
stack = simulate_image_stack(scenario, 10, 24, 24, region=(8, 16, 8, 16), seed=1)

with tempfile.TemporaryDirectory() as tmp:
    save_mits(stack, Path(tmp) / "demo")
    stack = load_mits(Path(tmp) / "demo")

# window 5 means 25 pixels per patch
scores, failed = detection_map(stack.astype(complex), 5, "ksg", ModelDims(4, 3, 25))
print("map shape", scores.shape, "failed windows", failed)

# crude text rendering: darker characters for larger statistics
levels = " .:-=+*#%@"
lo, hi = np.nanpercentile(scores, [5, 95])
for row in scores:
    idx = np.clip((row - lo) / (hi - lo) * (len(levels) - 1), 0, len(levels) - 1).astype(int)
    print("".join(levels[i] * 2 for i in idx))
