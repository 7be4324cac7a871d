"""
Batch and streaming estimation against the Cramer-Rao bound
===========================================================

Draws K-distributed patches with a Kronecker scatter ``A (x) B`` and tracks
how far the batch fixed point (GD) and the one-pass stochastic natural
gradient (SGD) land from the truth as frames accumulate.
"""

import numpy as np

from sgkron import ModelDims, icrb, mse_benchmark

# p = 12 channels split as a 4 x 3 Kronecker product, 8 pixels per patch
dims = ModelDims(a=4, b=3, n=8)

# a light run; the CLI's mse-bench does the full grid
res = mse_benchmark(dims=dims, nu=1.0, t_grid=(1, 10, 100, 500), trials=40, seed=0)

print(f"{'T':>5} {'GD':>10} {'SGD':>10} {'ICRB':>10}")
for T in res.t_grid:
    gd = res.summary("GD", T)[0][3]
    sgd = res.summary("SGD", T)[0][3]
    print(f"{T:>5} {gd:>10.5f} {sgd:>10.5f} {icrb(dims, T).total:>10.5f}")

# the two estimators merge once T reaches a few hundred frames
ratio = res.summary("SGD", 500)[0] / res.summary("GD", 500)[0]
print("SGD / GD at T=500 (A, B, tau, total):", np.round(ratio, 3))
