"""The Stark-Jacobi operator ``K0 = alpha*Delta + gamma*W`` on l2(Z) and l2(Z^d).

``Delta`` is the off-diagonal hopping ``(Delta f)(n) = f(n-1) + f(n+1)`` and
``W`` the Stark potential ``(W f)(n) = n f(n)``.  For ``gamma != 0`` the
spectrum is the ladder ``gamma * Z`` with eigenfunctions
``phi_m(n) = J_{m-n}(2 alpha / gamma)``, and the propagator
``<x|exp(-i t K0)|n>`` has the closed form implemented in
:func:`propagator_kernel`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .bessel import bessel_j, bessel_j_block
from .errors import DomainError

__all__ = [
    "StarkJacobiParams",
    "truncation_radius",
    "build_k0_truncated",
    "eigenfunction",
    "eigenfunction_vector",
    "propagator_kernel",
    "kernel_column",
    "free_kernel",
    "ZdFieldVector",
    "SpectrumDescription",
    "zd_spectrum",
    "build_zd_truncated",
    "zd_spectral_measure",
    "zd_central_eigenvalues",
    "lattice_distance",
]


@dataclass(frozen=True)
class StarkJacobiParams:
    alpha: float
    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.gamma)):
            raise DomainError("alpha and gamma must be finite")

    @classmethod
    def from_field(cls, B: Sequence[float], q: float) -> "StarkJacobiParams":
        """``alpha = |(B1, B2)| * a(q)``, ``gamma = B3``."""
        from .kink_profiles import hopping_coefficient_a

        b1, b2, b3 = (float(c) for c in B)
        return cls(math.hypot(b1, b2) * hopping_coefficient_a(q), b3)

    @property
    def is_free(self) -> bool:
        return self.gamma == 0.0

    @property
    def period(self) -> float:
        return math.inf if self.is_free else 2.0 * math.pi / abs(self.gamma)

    def w(self, t: float) -> float:
        """Bessel argument ``(4 alpha / gamma) sin(gamma t / 2)``."""
        if self.is_free:
            raise DomainError("w(t) is undefined at gamma = 0; use the free kernel argument 2*alpha*t")
        return 4.0 * self.alpha / self.gamma * math.sin(0.5 * self.gamma * t)

    def chi(self, t: float) -> float:
        if self.is_free:
            raise DomainError("chi(t) is undefined at gamma = 0")
        return 0.5 * (math.pi - self.gamma * t)

    def bessel_argument(self, t: float) -> float:
        """``w(t)``, or its continuous limit ``2 alpha t`` when gamma = 0."""
        return 2.0 * self.alpha * t if self.is_free else self.w(t)


def truncation_radius(params: StarkJacobiParams) -> int:
    """Default finite window ``ceil(|2 alpha / gamma|) + 80``."""
    if params.is_free:
        raise DomainError("no time-independent truncation radius at gamma = 0")
    return math.ceil(abs(2.0 * params.alpha / params.gamma)) + 80


def build_k0_truncated(params: StarkJacobiParams, R: int) -> sp.csr_matrix:
    """Tridiagonal ``K0`` on sites ``-R..R`` (row ``i`` is site ``i - R``)."""
    if R < 1:
        raise DomainError("truncation radius must be at least 1")
    n = np.arange(-R, R + 1, dtype=float)
    off = np.full(2 * R, float(params.alpha))
    return sp.diags([off, params.gamma * n, off], [-1, 0, 1], format="csr")


def eigenfunction(m: int, params: StarkJacobiParams, n: int) -> float:
    """``phi_m(n) = J_{m-n}(2 alpha / gamma)``, eigenvalue ``gamma * m``."""
    if params.is_free:
        raise DomainError("gamma = 0: K0 has no point spectrum, so there are no eigenfunctions")
    return bessel_j(int(m) - int(n), 2.0 * params.alpha / params.gamma)


def eigenfunction_vector(m: int, params: StarkJacobiParams, R: int) -> np.ndarray:
    """``phi_m`` restricted to sites ``-R..R``."""
    if params.is_free:
        raise DomainError("gamma = 0: K0 has no point spectrum, so there are no eigenfunctions")
    # phi_m(n) = J_{m-n}; orders run from m+R down to m-R
    return bessel_j_block(int(m) - R, int(m) + R, 2.0 * params.alpha / params.gamma)[::-1].copy()


def _kernel_phase(x, n, t, gamma):
    return np.exp(-1j * (0.5 * (gamma * t - math.pi) * x + 0.5 * (gamma * t + math.pi) * n))


def propagator_kernel(x: int, n: int, t: float, params: StarkJacobiParams) -> complex:
    """``<x|exp(-i t K0)|n>``.

    ``J_{n-x}(w) exp[-i((gamma t - pi)/2 x + (gamma t + pi)/2 n)]``; at
    ``gamma = 0`` this is delegated to :func:`free_kernel`, its continuous limit.
    """
    if params.is_free:
        return free_kernel(x, n, t, params.alpha)
    return complex(bessel_j(int(n) - int(x), params.w(t)) * _kernel_phase(x, n, t, params.gamma))


def free_kernel(x: int, n: int, t: float, alpha: float) -> complex:
    """``e^{i pi (x - n)/2} J_{n-x}(2 alpha t)``, the gamma -> 0 limit of the kernel."""
    return complex(bessel_j(int(n) - int(x), 2.0 * alpha * t) * np.exp(0.5j * math.pi * (int(x) - int(n))))


def kernel_column(n: int, t: float, params: StarkJacobiParams, R: int) -> np.ndarray:
    """Kernel column ``x -> <x|exp(-i t K0)|n>`` for sites ``x = -R..R``."""
    x = np.arange(-R, R + 1)
    z = params.bessel_argument(t)
    orders = int(n) - x
    j = bessel_j_block(int(orders.min()), int(orders.max()), z)[orders - orders.min()]
    if params.is_free:
        return j * np.exp(0.5j * math.pi * (x - int(n)))
    return j * _kernel_phase(x, int(n), t, params.gamma)


# ---------------------------------------------------------------------------
# Z^d

KINDS = ("pure-point-lattice", "dense-pure-point", "band-plus-lattice", "absolutely-continuous-band")
_DENOMINATOR_CAP = 10 ** 6
_RATIO_RTOL = 4 * np.finfo(float).eps


@dataclass(frozen=True)
class ZdFieldVector:
    """Tilt vector on ``Z^d`` with hopping ``alpha`` (d <= 6).

    Components may be given as exact rationals (``fractions.Fraction``);
    floats are tested for commensurability by continued fractions with
    denominators up to 10**6.
    """

    gamma_vec: tuple
    alpha: float = 1.0

    def __post_init__(self):
        g = tuple(self.gamma_vec)
        if not 1 <= len(g) <= 6:
            raise DomainError("dimension d must be between 1 and 6")
        object.__setattr__(self, "gamma_vec", g)

    @property
    def d(self) -> int:
        return len(self.gamma_vec)

    @property
    def nonzero(self) -> list:
        return [g for g in self.gamma_vec if g != 0]

    def integer_ratios(self):
        """``(gamma0, [a_j])`` with coprime integers ``a_j`` and ``gamma_j = a_j * gamma0``.

        Returns ``None`` when some ratio is irrational at the declared precision.
        """
        nz = self.nonzero
        if not nz:
            return None
        ref = nz[0]
        fracs = []
        for g in nz:
            if isinstance(g, Rational) and isinstance(ref, Rational):
                fracs.append(Fraction(g) / Fraction(ref))
                continue
            r = float(g) / float(ref)
            fr = Fraction(r).limit_denominator(_DENOMINATOR_CAP)
            if abs(r - float(fr)) > _RATIO_RTOL * max(1.0, abs(r)):
                return None
            fracs.append(fr)
        den = math.lcm(*(f.denominator for f in fracs))
        ints = [int(f * den) for f in fracs]
        g = math.gcd(*ints)
        a = [k // g for k in ints]
        gamma0 = abs(float(ref)) * g / den
        if ints[0] < 0:
            a = [-k for k in a]
        return gamma0, a

    @property
    def classification(self) -> str:
        if not self.nonzero:
            return "partially-zero"
        if len(self.nonzero) < self.d:
            return "partially-zero"
        return "all-zero-free commensurable" if self.integer_ratios() is not None else "incommensurable"


@dataclass
class SpectrumDescription:
    """Spectral type plus generators.

    ``generators`` holds the verified description (separable operator:
    the eigenvalues are the sums ``sum_j gamma_j n_j`` plus, for every
    zero component, a band ``[-2 alpha, 2 alpha]``).  ``stated_generators``
    holds the lattice spacings from the closed formula with
    ``|gamma|^2 / (lcm(a) gamma0)`` and ``|gamma|^2 / gamma_j``, kept for
    comparison.
    """

    kind: str
    generators: dict
    stated_generators: dict = field(default_factory=dict)
    notes: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown spectrum kind {self.kind!r}")
        step = self.generators.get("step")
        if step is not None and not step > 0:
            raise DomainError("lattice step must be positive")
        band = self.generators.get("band")
        if band is not None and not band[0] <= band[1]:
            raise DomainError("band endpoints must be ordered")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def zd_spectrum(field_vec: ZdFieldVector) -> SpectrumDescription:
    g = [float(c) for c in field_vec.gamma_vec]
    alpha = abs(float(field_vec.alpha))
    nz = [c for c in g if c != 0]
    zeros = len(g) - len(nz)
    norm2 = math.fsum(c * c for c in g)

    if not nz:
        band = [-2.0 * alpha * zeros, 2.0 * alpha * zeros]
        return SpectrumDescription("absolutely-continuous-band", {"band": band}, {"band": band})

    if zeros:
        band = [-2.0 * alpha * zeros, 2.0 * alpha * zeros]
        return SpectrumDescription(
            "band-plus-lattice",
            {"band": band, "lattice": sorted(abs(c) for c in nz)},
            {"band": band, "lattice": sorted(norm2 / abs(c) for c in nz)},
            notes="spectrum is the closure of band + sum of the listed lattices",
        )

    ratios = field_vec.integer_ratios()
    if ratios is None:
        return SpectrumDescription(
            "dense-pure-point",
            {"lattice": [abs(c) for c in nz]},
            {"lattice": [norm2 / abs(c) for c in nz]},
            notes="eigenvalues sum_j gamma_j n_j are dense; closure of the spectrum is R",
        )
    gamma0, a = ratios
    stated = norm2 / (math.lcm(*(abs(k) for k in a)) * gamma0)
    return SpectrumDescription(
        "pure-point-lattice",
        {"step": gamma0, "gamma0": gamma0, "a": a},
        {"step": stated},
        notes="verified step is gcd of the tilt components",
    )


def build_zd_truncated(field_vec: ZdFieldVector, R: int) -> sp.csr_matrix:
    """Kronecker-sum operator on the box ``[-R, R]^d``."""
    d = field_vec.d
    if (2 * R + 1) ** d > 2_000_000:
        raise DomainError("truncated Z^d box too large")
    eye = sp.identity(2 * R + 1, format="csr")
    total = None
    for j, gj in enumerate(field_vec.gamma_vec):
        axis = build_k0_truncated(StarkJacobiParams(float(field_vec.alpha), float(gj)), R)
        term = None
        for k in range(d):
            factor = axis if k == j else eye
            term = factor if term is None else sp.kron(term, factor, format="csr")
        total = term if total is None else total + term
    return total.tocsr()


def zd_spectral_measure(field_vec: ZdFieldVector, R: int, steps: int = 300, site=None):
    """Spectral measure of a lattice site for the truncated ``Z^d`` operator.

    Lanczos with full reorthogonalization started from the site vector
    (the origin by default); returns Gauss nodes and weights.  Only the
    part of the spectrum the site actually sees is resolved, so states
    deformed by the truncation edge carry exponentially small weight.
    """
    K = build_zd_truncated(field_vec, R)
    dim = K.shape[0]
    side = 2 * R + 1
    site = (0,) * field_vec.d if site is None else tuple(site)
    index = int(np.ravel_multi_index(tuple(s + R for s in site), (side,) * field_vec.d))
    steps = min(steps, dim)
    Q = np.zeros((steps + 1, dim))
    Q[0, index] = 1.0
    diag, off = [], []
    for j in range(steps):
        w = K @ Q[j]
        diag.append(Q[j] @ w)
        w -= diag[-1] * Q[j]
        if j:
            w -= off[-1] * Q[j - 1]
        for _ in range(2):
            w -= Q[: j + 1].T @ (Q[: j + 1] @ w)
        beta = np.linalg.norm(w)
        if beta < 1e-13 or j == steps - 1:
            break
        off.append(beta)
        Q[j + 1] = w / beta
    T = np.diag(diag) + np.diag(off[: len(diag) - 1], 1) + np.diag(off[: len(diag) - 1], -1)
    nodes, vecs = np.linalg.eigh(T)
    return nodes, vecs[0] ** 2


def zd_central_eigenvalues(field_vec: ZdFieldVector, R: int, weight_tol: float = 1e-8, steps: int = 300) -> np.ndarray:
    """Eigenvalues carrying at least ``weight_tol`` of the origin's spectral weight."""
    nodes, weights = zd_spectral_measure(field_vec, R, steps)
    return nodes[weights > weight_tol]


def lattice_distance(values, step: float) -> float:
    """Largest distance from ``values`` to the lattice ``step * Z``."""
    v = np.asarray(values, float) / step
    return float(np.max(np.abs(v - np.round(v)) * step, initial=0.0))
