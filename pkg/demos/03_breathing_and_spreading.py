"""Uniform fields: the kink breathes when B3 != 0 and spreads ballistically when B3 = 0.

Run with ``python3 demos/03_breathing_and_spreading.py``.
"""

import math

import numpy as np

from xxzkink.interface_motion import UniformField3, m3_profile, profile_limit_fit, scaling_profile

xs = np.arange(-12, 13)

tilted = UniformField3.from_alpha(alpha=1.0, gamma=0.5, q=0.5)
period = tilted.params.period
print(f"tilted field: period 2 pi / gamma = {period:.4f}")
for t in (0.0, period / 4, period / 2, period):
    prof = m3_profile(xs, t, tilted)
    width = int(np.sum(np.abs(np.abs(prof) - 0.5) > 1e-3))
    print(f"  t = {t:7.4f}: {width:2d} sites visibly away from +-1/2")

free = UniformField3.from_alpha(alpha=1.0, gamma=0.0, q=0.5)
print("\nfree field: m3(v t, t) approaches -kappa arcsin(v / 2 alpha)")
for v in (0.5, 1.0, 1.5, 2.5):
    vals = [m3_profile([round(v * t)], t, free)[0] for t in (50, 200)]
    print(f"  v = {v}: t=50 {vals[0]:+.4f}, t=200 {vals[1]:+.4f}, 1/pi form {scaling_profile(v, 1.0):+.4f}")

rep = profile_limit_fit(alpha=1.0, q=0.5)
print(f"\nfitted kappa {rep.kappa_fit:.5f}; 1/pi = {1 / math.pi:.5f}, 2/pi = {2 / math.pi:.5f}")
print(f"continuity at v = 2 alpha picks kappa = {rep.continuity_choice:.5f}")
