"""The one-body problem behind the reduced dynamics.

Run with ``python3 demos/04_stark_jacobi.py``.
"""

import numpy as np

from xxzkink.stark_jacobi import (
    StarkJacobiParams,
    ZdFieldVector,
    build_k0_truncated,
    eigenfunction_vector,
    kernel_column,
    zd_spectral_measure,
    zd_spectrum,
)

p = StarkJacobiParams(alpha=1.0, gamma=0.5)
R = 90
K = build_k0_truncated(p, R)
for m in (-1, 0, 2):
    v = eigenfunction_vector(m, p, R)
    print(f"eigenvalue gamma*{m:+d}: residual {np.linalg.norm(K @ v - 0.5 * m * v):.1e}")

# Bloch oscillation: the wave packet started at 0 returns after 2 pi / gamma.
for t in (0.0, p.period / 2, p.period):
    col = kernel_column(0, t, p, R)
    spread = np.sqrt(np.sum(np.arange(-R, R + 1) ** 2 * np.abs(col) ** 2))
    print(f"t = {t:7.3f}: rms spread {spread:.4f}")

field = ZdFieldVector((1.0, 2.0), alpha=1.0)
desc = zd_spectrum(field)
nodes, weights = zd_spectral_measure(field, 40)
print(f"\nZ^2 with gamma = (1, 2): {desc.kind}, verified step {desc.generators['step']}")
print("spectral weights of the origin:", ", ".join(f"{int(round(n)):+d}:{w:.3f}" for n, w in zip(nodes, weights) if w > 1e-3))
