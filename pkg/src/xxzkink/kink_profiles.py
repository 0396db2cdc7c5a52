"""Infinite-volume kink profiles and matrix elements.

Conventions
-----------
``|n>`` is the kink with total ``S^3 = n`` relative to the centered kink
``|0>``, whose profile is antisymmetric about the bond (0, 1).  Amplitudes
are real and nonnegative in the product basis, so every matrix element of
``S^+`` between neighbouring kinks is real and positive.  The transverse
element is taken as ``g(n) = <n|S^+_0|n-1>``, equivalently
``<n-1|S^-_0|n>``.  Translation covariance

    <n|S^3_x|n> = M(x - n),        <n|S^+_x|n-1> = g(n - x)

is used as the definition of the elements away from the origin.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .policy import DEFAULT_POLICY

__all__ = [
    "QSeriesPolicy",
    "f_series",
    "magnetization_z",
    "magnetization_profile",
    "transverse_matrix_element",
    "hopping_coefficient_a",
    "hopping_coefficient_lattice_sum",
    "p_measure",
    "ptilde_measure",
    "ProfileTable",
    "profile_table",
    "finite_chain_profile",
    "finite_chain_transverse",
    "decay_constant",
]


@dataclass(frozen=True)
class QSeriesPolicy:
    """Deformation parameter plus the truncations used by every q-series.

    ``term_cutoff`` defaults to the smallest ``N`` with ``q**(N*(N-1))``
    below ``tail``, which bounds the first omitted term of ``f`` for
    ``|z| <= 1``.
    """

    q: float
    term_cutoff: int | None = None
    truncation_radius: int = DEFAULT_POLICY.truncation_radius
    tail: float = field(default=DEFAULT_POLICY.series_tail, repr=False)

    def __post_init__(self):
        q = float(self.q)
        if not 0.0 < q < 1.0:
            raise DomainError(f"q-series need 0 < q < 1 (got {q}); they diverge for q >= 1")
        object.__setattr__(self, "q", q)
        if self.term_cutoff is None:
            n = 2
            while n * (n - 1) * math.log(q) >= math.log(self.tail):
                n += 1
            object.__setattr__(self, "term_cutoff", n)

    @classmethod
    def from_delta(cls, delta: float, **kw) -> "QSeriesPolicy":
        from .xxz_core import q_from_delta

        return cls(q_from_delta(delta), **kw)


def _as_policy(policy) -> QSeriesPolicy:
    return policy if isinstance(policy, QSeriesPolicy) else QSeriesPolicy(float(policy))


def _fsum_complex(terms) -> complex:
    terms = list(terms)
    return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))


def f_series(z, policy) -> complex:
    """``f(z) = sum_{k>=0} (-1)^k z^k q^{k(k-1)}``.

    The terms decay superexponentially, so for ``|z| > 1`` summation simply
    continues past ``term_cutoff`` until they drop below the tail tolerance.
    """
    pol = _as_policy(policy)
    real_input = not isinstance(z, complex) and np.isrealobj(z)
    q, z = pol.q, complex(z)
    log_q, log_tail = math.log(q), math.log(pol.tail)
    log_z = math.log(abs(z)) if z != 0 else -math.inf
    terms = []
    k = 0
    while True:
        if k > pol.term_cutoff and k * (k - 1) * log_q + k * log_z < log_tail:
            break
        terms.append((-1) ** k * z ** k * q ** (k * (k - 1)))
        k += 1
    out = _fsum_complex(terms)
    return out.real if real_input else out


def _theta_tail(x: int, pol: QSeriesPolicy) -> float:
    """``sum_k (-1)^k q^{k(k+2x+1)}`` for ``x >= 1``."""
    q = pol.q
    terms = []
    for k in range(pol.term_cutoff + 1):
        terms.append((-1) ** k * q ** (k * (k + 2 * x + 1)))
    return math.fsum(terms)


def magnetization_z(x: int, policy) -> float:
    """``<0|S^3_x|0>``; series for ``x > 0``, reflection ``-M(1 - x)`` otherwise."""
    pol = _as_policy(policy)
    x = int(x)
    if x <= 0:
        return -magnetization_z(1 - x, pol)
    return -0.5 + pol.q ** (2 * x) * _theta_tail(x, pol)


def magnetization_profile(xs, policy) -> np.ndarray:
    pol = _as_policy(policy)
    return np.array([magnetization_z(int(x), pol) for x in np.atleast_1d(xs)])


def transverse_matrix_element(n: int, policy) -> float:
    """``g(n) = <n|S^+_0|n-1> = q^{|n|} f(q^{2|n|+2})``, real and positive."""
    pol = _as_policy(policy)
    n = abs(int(n))
    return pol.q ** n * float(np.real(f_series(pol.q ** (2 * n + 2), pol)))


def hopping_coefficient_a(policy) -> float:
    """``a = (1/2) sum_k (-1)^k q^{k(k+1)} (1 + q^{1+2k}) / (1 - q^{1+2k})``."""
    pol = _as_policy(policy)
    q = pol.q
    terms = []
    for k in range(pol.term_cutoff + 1):
        r = q ** (1 + 2 * k)
        terms.append((-1) ** k * q ** (k * (k + 1)) * (1 + r) / (1 - r))
    return 0.5 * math.fsum(terms)


def hopping_coefficient_lattice_sum(policy) -> float:
    """Cross-check of ``a`` summed site by site: ``(1/2) sum_x <x|S^+_0|x-1>``.

    Uses the double series ``q^{|x|} sum_k (-1)^k q^{2(|x|+1)k + k(k-1)}``
    directly, independent of ``f_series``.
    """
    pol = _as_policy(policy)
    q, R = pol.q, pol.truncation_radius
    terms = []
    for x in range(-R, R + 1):
        ax = abs(x)
        for k in range(pol.term_cutoff + 1):
            terms.append((-1) ** k * q ** (ax + 2 * (ax + 1) * k + k * (k - 1)))
    return 0.5 * math.fsum(terms)


def p_measure(m: int, policy) -> float:
    """``p(m) = <0|S^3_{m-1} - S^3_m|0>``, a probability distribution on Z."""
    pol = _as_policy(policy)
    return magnetization_z(int(m) - 1, pol) - magnetization_z(int(m), pol)


def ptilde_measure(m: int, policy) -> float:
    """``p~(m) = <1|S^+_m - S^+_{m-1}|0> = g(1 - m) - g(2 - m)``, total mass zero."""
    pol = _as_policy(policy)
    m = int(m)
    return transverse_matrix_element(1 - m, pol) - transverse_matrix_element(2 - m, pol)


def decay_constant(values, ms, q: float) -> float:
    """Smallest ``C`` with ``|values| <= C q^{|m|}`` on the sample."""
    values, ms = np.abs(np.asarray(values, float)), np.abs(np.asarray(ms))
    return float(np.max(values / q ** ms))


@dataclass
class ProfileTable:
    """``<0|S^3_x|0>`` on ``x_range[0] <= x <= x_range[1]``."""

    x_range: tuple[int, int]
    values: np.ndarray
    q: float

    @property
    def xs(self) -> np.ndarray:
        return np.arange(self.x_range[0], self.x_range[1] + 1)

    def check(self, tol: float = 1e-12) -> dict:
        v = self.values
        refl = [
            abs(v[i] + v[j])
            for i, x in enumerate(self.xs)
            for j in [int(1 - x - self.x_range[0])]
            if 0 <= j < v.size
        ]
        return {
            "monotone": bool(np.all(np.diff(v) <= tol)),
            "bounded": bool(np.all(np.abs(v) <= 0.5 + tol)),
            "antisymmetry": max(refl, default=0.0),
        }

    def to_csv(self, path=None) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "value"])
        for x, v in zip(self.xs, self.values):
            w.writerow([int(x), repr(float(v))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def profile_table(policy, lo: int, hi: int) -> ProfileTable:
    pol = _as_policy(policy)
    if hi < lo:
        raise DomainError("empty x range")
    return ProfileTable((int(lo), int(hi)), magnetization_profile(np.arange(lo, hi + 1), pol), pol.q)


# ---------------------------------------------------------------------------
# finite centered chains, exact for any length

def _poly_mul_scaled(a, la, b, lb):
    c = np.convolve(a, b)
    peak = np.max(np.abs(c))
    return c / peak, la + lb + math.log(peak)


def _esym_tables(u: np.ndarray):
    """Prefix and suffix generating polynomials of ``prod (1 + u_i t)``, log-scaled."""
    L = u.size
    pre = [(np.array([1.0]), 0.0)]
    for i in range(L):
        pre.append(_poly_mul_scaled(pre[-1][0], pre[-1][1], np.array([1.0, u[i]]), 0.0))
    suf = [(np.array([1.0]), 0.0)]
    for i in range(L - 1, -1, -1):
        suf.append(_poly_mul_scaled(suf[-1][0], suf[-1][1], np.array([1.0, u[i]]), 0.0))
    suf.reverse()
    return pre, suf


def _log_coeff(poly, k):
    vec, scale = poly
    if k < 0 or k >= vec.size or vec[k] <= 0:
        return -math.inf
    return math.log(vec[k]) + scale


def _centered_weights(L: int, q: float):
    if L < 2 or L % 2:
        raise DomainError("centered finite chains need an even length L >= 2")
    pos = np.arange(L)
    # down-spin weight q^{-2 pos}, shifted to keep the DP well scaled
    return q ** (-2.0 * (pos - (L - 1) / 2.0))


def finite_chain_profile(L: int, q: float, n: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """``<n|S^3_x|n>`` on the centered chain ``-(L/2 - 1) .. L/2``.

    Evaluated through elementary symmetric polynomials of the down-spin
    weights, so lengths far beyond exact diagonalization are cheap.
    """
    u = _centered_weights(L, q)
    k = L // 2 - int(n)
    if not 0 <= k <= L:
        raise DomainError(f"sector n={n} absent from an L={L} chain")
    pre, suf = _esym_tables(u)
    log_total = _log_coeff(pre[L], k)
    sites = np.arange(-(L // 2 - 1), L // 2 + 1)
    vals = np.empty(L)
    for p in range(L):
        without = _poly_mul_scaled(pre[p][0], pre[p][1], suf[p + 1][0], suf[p + 1][1])
        prob_down = math.exp(math.log(u[p]) + _log_coeff(without, k - 1) - log_total) if k >= 1 else 0.0
        vals[p] = 0.5 - prob_down
    return sites, vals


def finite_chain_transverse(L: int, q: float, n: int = 0, x: int = 0) -> float:
    """``<n|S^+_x|n-1>`` on the centered chain, same DP as the profile."""
    u = _centered_weights(L, q)
    k = L // 2 - int(n)
    p = int(x) + L // 2 - 1
    if not 0 <= p < L or not 0 <= k < L:
        raise DomainError("site or sector outside the chain")
    pre, suf = _esym_tables(u)
    without = _poly_mul_scaled(pre[p][0], pre[p][1], suf[p + 1][0], suf[p + 1][1])
    log_val = (
        _log_coeff(without, k)
        + 0.5 * math.log(u[p])
        - 0.5 * (_log_coeff(pre[L], k) + _log_coeff(pre[L], k + 1))
    )
    return math.exp(log_val)
