"""Signed compositions and the closed form of simplex integrals.

A graph ``G`` in ``G_n`` has vertices ``n+1, ..., 1`` and one incoming bond
per vertex ``j <= n`` from a parent ``p(j) > j``.  With no crossing and no
properly nested bonds, ``G`` is determined by the composition
``[p(1) - 1, p(p(1)) - p(1), ...]`` of ``n``: the vertices of a block
``s, ..., s + c - 1`` all hang from ``s + c``.

Signs follow the inductive construction: adding a vertex bonded to the old
vertex 1 prepends a part 1 and flips the sign; bonding it to ``p(1)``
increments the first part and keeps the sign.  Hence
``sigma(G) = (-1)^(number of parts - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, SingularityError

__all__ = [
    "SignedComposition",
    "enumerate_graphs",
    "iterated_integral_closed_form",
    "iterated_integral_quadrature",
]

MAX_GRAPH_ORDER = 20
MAX_CLOSED_FORM_ORDER = 12


@dataclass(frozen=True)
class SignedComposition:
    parts: tuple[int, ...]
    sign: int

    @property
    def n(self) -> int:
        return sum(self.parts)

    @cached_property
    def parents(self) -> tuple[int, ...]:
        """``(p(1), ..., p(n))`` with 1-based vertex labels."""
        out = []
        start = 1
        for c in self.parts:
            out.extend([start + c] * c)
            start += c
        return tuple(out)

    @property
    def bond_lengths(self) -> tuple[int, ...]:
        """``l(b(j)) = p(j) - j``."""
        return tuple(p - j for j, p in enumerate(self.parents, start=1))

    @property
    def length(self) -> int:
        return sum(self.bond_lengths)

    def k_sums(self, k) -> np.ndarray:
        """``k(j; G) = sum_{j <= i < p(j)} k_i`` for every vertex."""
        k = np.asarray(k)
        csum = np.concatenate([[0], np.cumsum(k)])
        p = np.array(self.parents)
        j = np.arange(1, self.n + 1)
        return csum[p - 1] - csum[j - 1]


def _grow(graphs: list[SignedComposition]) -> list[SignedComposition]:
    out = []
    for g in graphs:
        out.append(SignedComposition((1,) + g.parts, -g.sign))
        out.append(SignedComposition((g.parts[0] + 1,) + g.parts[1:], g.sign))
    return out


def enumerate_graphs(n: int) -> list[SignedComposition]:
    """All ``2^(n-1)`` signed compositions of ``n`` in construction order."""
    if int(n) != n or not 1 <= n <= MAX_GRAPH_ORDER:
        raise DomainError(f"graph order must be an integer in [1, {MAX_GRAPH_ORDER}], got {n}")
    graphs = [SignedComposition((1,), 1)]
    for _ in range(int(n) - 1):
        graphs = _grow(graphs)
    return graphs


def iterated_integral_closed_form(E, k, lam: float, t: float, rtol: float = 1e-13) -> complex:
    """Closed form of ``int_{0 <= t_n <= ... <= t_1 <= t} prod_j exp(-i t_j (E_{j+1} - E_j + i lam k_j))``.

    Parameters
    ----------
    E : array_like, length n + 1
    k : array_like, length n (complex allowed)
    lam, t : float

    Raises
    ------
    SingularityError
        When some denominator ``E_{p(j)} - E_j + i lam k(j;G)`` vanishes
        (relative to the scale of the inputs); the offending composition
        and vertex are attached.
    """
    E = np.asarray(E, dtype=complex)
    k = np.asarray(k, dtype=complex)
    n = k.size
    if E.size != n + 1:
        raise DomainError("E must have one more entry than k")
    if not 1 <= n <= MAX_CLOSED_FORM_ORDER:
        raise DomainError(f"closed form supported for 1 <= n <= {MAX_CLOSED_FORM_ORDER}")
    scale = 1.0 + np.max(np.abs(E)) + abs(lam) * np.sum(np.abs(k))
    total = 0j
    for g in enumerate_graphs(n):
        p = np.array(g.parents)
        den = E[p - 1] - E[:n] + 1j * lam * g.k_sums(k)
        small = np.flatnonzero(np.abs(den) <= rtol * scale)
        if small.size:
            raise SingularityError(
                f"vanishing denominator for composition {list(g.parts)} at vertex {small[0] + 1}",
                composition=g,
                vertex=int(small[0] + 1),
            )
        term = g.sign * np.prod(1j / den)
        total += term * (np.exp(-1j * t * den[0]) - 1.0)
    return complex(total)


def iterated_integral_quadrature(E, k, lam: float, t: float, nodes: int = 32) -> complex:
    """Same simplex integral by nested Gauss-Legendre rules (``nodes`` per level).

    The integrand is entire, so the rule converges spectrally; cost grows as
    ``nodes**n``, which is fine up to ``n = 4``.
    """
    E = np.asarray(E, dtype=complex)
    k = np.asarray(k, dtype=complex)
    n = k.size
    rates = E[1:] - E[:-1] + 1j * lam * k
    x, w = np.polynomial.legendre.leggauss(nodes)
    uppers = np.array([float(t)])
    weights = np.array([1.0 + 0j])
    for j in range(n):
        # map the rule to [0, upper] for every current upper limit
        tj = (uppers[:, None] * (x[None, :] + 1.0) / 2.0).ravel()
        wj = (weights[:, None] * (uppers[:, None] / 2.0) * w[None, :]).ravel()
        weights = wj * np.exp(-1j * tj * rates[j])
        uppers = tj
    return complex(np.sum(weights))
