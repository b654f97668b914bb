"""
Compressed rectangle features
=============================

A window of w x h pixels has (wh)^2 box-filter responses. A very sparse
random matrix squeezes them into a few dozen numbers, and an integral image
lets us compute those numbers without ever forming the big vector.
"""

import numpy as np

from dvstrack import SpikeCountFrame, build_integral, project, sample_matrix

rng = np.random.default_rng(0)

# A 16x16 window has 65536 rectangle features; keep 50 of their mixtures.
M = sample_matrix(50, (16, 16), seed=0)
print(f"m = {M.m}, s = {M.s:.0f}, nonzero weights are +-{M.magnitude:.0f}")
print("rectangles per row:", [len(r) for r in M.rows[:10]], "...")

# Each compressed feature is a signed sum of a handful of box sums.
frame = SpikeCountFrame(rng.poisson(0.5, size=(128, 128)))
ii = build_integral(frame)
v = project(M, (56, 56), ii)
print("features at (56, 56):", np.round(v[:5], 1), "...")

# Same numbers the slow way: densify the matrix and apply it to every
# clipped box sum of the window.
def box_bank(window):
    cs = np.pad(window, ((1, 0), (1, 0))).cumsum(0).cumsum(1)
    bank = np.empty((16, 16, 16, 16))
    y0, x0 = np.arange(16), np.arange(16)
    for ry in range(1, 17):
        for rx in range(1, 17):
            y1, x1 = np.minimum(y0 + ry, 16), np.minimum(x0 + rx, 16)
            bank[ry - 1, rx - 1] = cs[y1][:, x1] - cs[y0][:, x1] - cs[y1][:, x0] + cs[y0][:, x0]
    return bank.ravel()


dense = M.to_dense() @ box_bank(frame.counts[56:72, 56:72])
print("max difference from the dense product:", np.abs(dense - v).max())

# Random projections roughly keep distances between the 65536-long
# rectangle vectors; compare windows pairwise.
origins = rng.integers(0, 112, size=(30, 2))
full = np.array([box_bank(frame.counts[y:y + 16, x:x + 16]) for x, y in origins])
comp = np.array([project(M, tuple(o), ii) for o in origins])
iu = np.triu_indices(30, 1)
d_full = np.array([np.linalg.norm(full[i] - full[j]) for i, j in zip(*iu)])
d_comp = np.linalg.norm(comp[:, None] - comp[None], axis=2)[iu]
print("correlation of pairwise distances:", np.corrcoef(d_full, d_comp)[0, 1].round(3))
