"""
Co-occurrence and run-length features on tiny windows
=====================================================

Small hand-checkable windows, with the matrices printed next to the
statistics derived from them.
"""

import numpy as np

from texseg.glcm import FEATURE_NAMES, compute_glcm, glcm_features
from texseg.rlm import compute_rlm, rlm_features

# two columns of different grey level: every horizontal pair is (0, 1)
window = np.array([[0, 1],
                   [0, 1]])
g = compute_glcm(window, direction=0)
print("symmetric counts at 0 deg:\n", g.counts)
print("probabilities:\n", g.probabilities)
for name, value in zip(FEATURE_NAMES, glcm_features(g).as_array()):
    print(f"  {name:16s} {value:.4f}")

# horizontal stripes look flat along rows and busy along columns
stripes = np.zeros((8, 8), dtype=int)
stripes[1::2] = 7
for d in (0, 45, 90, 135):
    f = glcm_features(compute_glcm(stripes, d, levels=8))
    print(f"stripes {d:3d} deg: contrast {f.contrast:5.1f}  energy {f.energy:.3f}")

# run lengths of the same stripes: one long run per row, unit runs per column
for d in (0, 90):
    sre, lre, gln, rln, rp = rlm_features(compute_rlm(stripes, d, levels=8))
    print(f"runs {d:2d} deg: SRE {sre:.3f} LRE {lre:5.1f} RP {rp:.3f}")
