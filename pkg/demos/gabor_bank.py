"""
The dyadic Gabor bank and its response to gratings
==================================================

Builds the 20 filter bank and feeds it one grating per filter.  The
energy table shows that each grating lights up its own filter.
"""

import math

import numpy as np

from texseg.gabor import apply_bank, build_bank

bank = build_bank(256)
print("centre frequencies (cycles/pixel):", np.round(bank.frequencies, 4))
print("kernel sizes:", sorted({f.kernel.shape[0] for f in bank.filters}))

y, x = np.mgrid[0:256, 0:256].astype(float)
print("\ngrating (f, deg)   best filter   runner-up ratio")
for k, flt in enumerate(bank.filters):
    u = x * math.cos(flt.theta) + y * math.sin(flt.theta)
    img = 0.5 + 0.35 * np.cos(2 * np.pi * flt.f0 * u)
    energy = (apply_bank(img, bank).responses ** 2).mean(axis=(1, 2))
    order = np.argsort(energy)[::-1]
    print(f"  {flt.f0:.4f} {math.degrees(flt.theta):5.0f}      {order[0]:2d}"
          f"            {energy[order[1]] / energy[order[0]]:.3f}")
