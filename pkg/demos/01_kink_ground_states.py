"""Kink ground states of a finite XXZ chain.

Run with ``python3 demos/01_kink_ground_states.py``.
"""

import numpy as np

from xxzkink.kink_profiles import magnetization_z
from xxzkink.xxz_core import (
    ChainSpec,
    build_hamiltonian,
    gap_scan,
    kink_ground_family,
    richardson_extrapolate,
    spectral_decomposition,
    spin_operator,
)

chain = ChainSpec.centered(10, 2.0)
H = build_hamiltonian(chain)
family = kink_ground_family(chain)
sd = spectral_decomposition(H, vectors=False)

print(f"L = {chain.L}, Delta = 2, q = {chain.q:.6f}")
print(f"kernel dimension {sd.clusters[sd.kernel_index()].multiplicity} (one kink per sector)")
print(f"largest residual |H psi| over the family: {family.residuals(H).max():.1e}")

# The centered kink: up on the left, down on the right, a domain wall of width ~ 1/|log q|.
psi = family.state(0)
print("\n  x   finite chain    infinite volume")
for x in chain.sites:
    finite = np.vdot(psi, spin_operator(chain, "z", x) @ psi).real
    print(f"{x:3d}   {finite:+.8f}    {magnetization_z(x, chain.q):+.8f}")

# Gap above the ground space and its large-L limit 1 - 1/Delta.
rows = gap_scan(2.0, range(4, 13))
print("\n  L   gap")
for L, g in rows:
    print(f"{L:3d}   {g:.6f}")
print(f"Richardson limit: {richardson_extrapolate(*zip(*rows)):.6f} (expected 0.5)")
