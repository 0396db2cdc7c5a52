"""Integer-order Bessel functions of the first kind for real arguments.

Three regimes:

* power series for ``|x| <= 12``, summed in exact rational arithmetic so the
  alternating terms cannot cancel catastrophically;
* Miller backward recurrence, normalized with ``J_0 + 2 sum_k J_2k = 1``;
* Hankel asymptotic expansion for ``|x| > 600`` when the order is small
  compared to the argument (``n**2 < |x| / 2``); larger orders stay on the
  recurrence, which remains stable there.

Negative orders and arguments are reduced with
``J_{-n}(x) = J_n(-x) = (-1)^n J_n(x)``.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import DomainError

__all__ = [
    "SERIES_MAX",
    "ASYMPTOTIC_MIN",
    "MAX_ORDER",
    "MAX_ARGUMENT",
    "bessel_j",
    "bessel_j_range",
    "bessel_j_block",
    "truncation_order",
    "squared_sum_check",
    "graf_sum",
    "graf_closed_form",
    "debye_leading",
]

SERIES_MAX = 12.0
ASYMPTOTIC_MIN = 600.0
MAX_ORDER = 10 ** 6
MAX_ARGUMENT = 1e4

_RESCALE = 1e250
_LOG_TINY = -745.0  # below this J_n(x) underflows a double
_TINY_X = 1e-20  # below this the recurrence factor 2k/x risks overflow


def truncation_order(x: float) -> int:
    """Order beyond which ``|J_n(x)|`` is negligible (< 1e-15)."""
    ax = abs(float(x))
    return math.ceil(ax) + 40 * max(1, math.ceil(ax ** (1.0 / 3.0))) + 40


def _miller_start(n: int, x: float) -> int:
    # the offset must be measured from the turning point when n < x
    start = max(n, math.ceil(x)) + 40 + math.ceil(10.0 * x ** (1.0 / 3.0))
    return start + (start & 1)


def _log_upper_bound(n: int, x: float) -> float:
    """log of ``(x/2)^n / n!``, an upper bound for ``|J_n(x)|``."""
    return n * (math.log(x) - math.log(2.0)) - math.lgamma(n + 1.0)


def _tiny_argument(orders: np.ndarray, x: float) -> np.ndarray:
    """Two leading series terms; exact to double precision once ``x < 1e-20``."""
    n = orders.astype(float)
    logs = n * (math.log(x) - math.log(2.0)) - np.array([math.lgamma(k + 1.0) for k in n])
    lead = np.where(logs < _LOG_TINY, 0.0, np.exp(np.maximum(logs, _LOG_TINY)))
    return lead * (1.0 - 0.25 * x * x / (n + 1.0))


def _series(n: int, x: float) -> float:
    """``sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!)`` evaluated exactly, n, x >= 0."""
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if _log_upper_bound(n, x) < _LOG_TINY:
        return 0.0
    h = Fraction(x) / 2
    h2 = h * h
    term = h ** n / math.factorial(n)
    total = term
    k = 0
    # terms shrink monotonically once k exceeds x/2; stop well below double resolution
    eps = Fraction(1, 10 ** 20) * abs(term)
    while True:
        k += 1
        term = -term * h2 / (k * (k + n))
        total += term
        if k > x and abs(term) < eps:
            break
    return float(total)


def _miller(n: int, x: float) -> float:
    """Backward recurrence for ``J_n(x)``, n >= 0, x > 0."""
    if _log_upper_bound(n, x) < _LOG_TINY and n > x:
        return 0.0
    if x < _TINY_X:
        return float(_tiny_argument(np.array([n]), x)[0])
    start = _miller_start(n, x)
    j_next, j_cur = 0.0, 1e-300
    norm = 0.0
    result = 0.0
    for k in range(start, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        # j_cur now holds the (unnormalized) value at order k - 1
        if k - 1 == n:
            result = j_cur
        if (k - 1) % 2 == 0:
            norm += j_cur if k == 1 else 2.0 * j_cur
        if abs(j_cur) > _RESCALE:
            j_cur /= _RESCALE
            j_next /= _RESCALE
            norm /= _RESCALE
            result /= _RESCALE
    return result / norm


def _hankel(n: int, x: float) -> float:
    """Large-argument expansion, n >= 0, x > 0."""
    mu = 4.0 * n * n
    p_sum, q_sum = 0.0, 0.0
    term = 1.0
    k = 0
    prev = math.inf
    while True:
        if k % 2 == 0:
            p_sum += term if (k // 2) % 2 == 0 else -term
        else:
            q_sum += term if (k // 2) % 2 == 0 else -term
        k += 1
        nxt = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if nxt == 0.0 or abs(nxt) < 1e-17 or abs(nxt) > prev:
            break
        prev = abs(term)
        term = nxt
    # phase (2n+1) pi/4 reduced exactly modulo 2 pi
    phase = ((2 * n + 1) % 8) * math.pi / 4.0
    c = math.cos(x) * math.cos(phase) + math.sin(x) * math.sin(phase)
    s = math.sin(x) * math.cos(phase) - math.cos(x) * math.sin(phase)
    return math.sqrt(2.0 / (math.pi * x)) * (p_sum * c - q_sum * s)


_METHODS = {"series": _series, "miller": _miller, "hankel": _hankel}


def _check_domain(n, x):
    if int(n) != n:
        raise DomainError(f"order must be an integer, got {n}")
    if not math.isfinite(x):
        raise DomainError(f"argument must be finite, got {x}")
    if abs(n) > MAX_ORDER or abs(x) > MAX_ARGUMENT:
        raise DomainError(
            f"J_n(x) supported for |n| <= {MAX_ORDER}, |x| <= {MAX_ARGUMENT:g}; got n={n}, x={x}"
        )


def bessel_j(n: int, x: float, method: str | None = None) -> float:
    """Bessel function ``J_n(x)`` of integer order.

    Parameters
    ----------
    n : int
        Order, ``|n| <= 10**6``.
    x : float
        Argument, ``|x| <= 10**4``.
    method : {"series", "miller", "hankel"}, optional
        Force one regime; by default it is chosen from ``(n, x)``.
    """
    x = float(x)
    _check_domain(n, x)
    n = int(n)
    sign = 1.0
    if n < 0:
        n = -n
        sign = -1.0 if n % 2 else 1.0
    if x < 0:
        x = -x
        if n % 2:
            sign = -sign
    if x == 0.0:
        return sign * (1.0 if n == 0 else 0.0)
    if method is None:
        if x <= SERIES_MAX:
            method = "series"
        elif x > ASYMPTOTIC_MIN and n * n < x / 2.0:
            method = "hankel"
        else:
            method = "miller"
    try:
        fn = _METHODS[method]
    except KeyError:
        raise DomainError(f"unknown method {method!r}") from None
    return sign * fn(n, x)


def bessel_j_range(nmax: int, x: float) -> np.ndarray:
    """``[J_0(x), J_1(x), ..., J_nmax(x)]`` from one backward sweep."""
    x = float(x)
    _check_domain(nmax, x)
    nmax = int(nmax)
    if nmax < 0:
        raise DomainError("nmax must be nonnegative")
    out = np.zeros(nmax + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    ax = abs(x)
    if ax < _TINY_X:
        out[:] = _tiny_argument(np.arange(nmax + 1), ax)
        if x < 0:
            out[1::2] *= -1.0
        return out
    start = _miller_start(nmax, ax)
    vals = np.zeros(start + 2)
    vals[start] = 1e-300
    for k in range(start, 0, -1):
        vals[k - 1] = (2.0 * k / ax) * vals[k] - vals[k + 1]
        if abs(vals[k - 1]) > _RESCALE:
            vals[k - 1:] /= _RESCALE
    norm = vals[0] + 2.0 * np.sum(vals[2::2])
    out[:] = vals[: nmax + 1] / norm
    if x < 0:
        out[1::2] *= -1.0
    return out


def bessel_j_block(lo: int, hi: int, x: float) -> np.ndarray:
    """``J_m(x)`` for the integer orders ``lo <= m <= hi`` (either sign)."""
    if hi < lo:
        return np.zeros(0)
    top = max(abs(lo), abs(hi))
    base = bessel_j_range(top, x)
    m = np.arange(lo, hi + 1)
    vals = base[np.abs(m)]
    neg = (m < 0) & (np.abs(m) % 2 == 1)
    vals[neg] *= -1.0
    return vals


def squared_sum_check(x: float, M: int) -> float:
    """``sum_{|m| <= M} J_m(x)^2``, which tends to 1 once M passes the turning point."""
    j = bessel_j_range(int(M), x)
    return float(j[0] ** 2 + 2.0 * math.fsum(j[1:] ** 2))


def graf_sum(a: int, z: float, theta: float, M: int) -> complex:
    """Truncated ``sum_{|m| <= M} e^{i theta m} J_{m+a}(z) J_m(z)``."""
    a, M = int(a), int(M)
    m = np.arange(-M, M + 1)
    jm = bessel_j_block(-M - abs(a), M + abs(a), z)
    offset = M + abs(a)
    terms = np.exp(1j * theta * m) * jm[m + a + offset] * jm[m + offset]
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def graf_closed_form(a: int, z: float, theta: float) -> complex:
    """``e^{i (pi - theta) a / 2} J_a(2 z sin(theta / 2))``."""
    return complex(np.exp(0.5j * (math.pi - theta) * a)) * bessel_j(a, 2.0 * z * math.sin(theta / 2.0))


def debye_leading(n: int, x: float) -> float:
    """Leading large-order (Debye) approximation of ``J_n(x)``, n > 0, x > 0.

    Exponential form below the turning point (``x = n sech(alpha)``),
    oscillatory form above it (``x = n sec(beta)``).
    """
    n, x = int(n), float(x)
    if n <= 0 or x <= 0:
        raise DomainError("Debye forms need n > 0 and x > 0")
    if x < n:
        alpha = math.acosh(n / x)
        th = math.tanh(alpha)
        return math.exp(n * (th - alpha)) / math.sqrt(2.0 * math.pi * n * th)
    if x > n:
        beta = math.acos(n / x)
        tb = math.tan(beta)
        return math.sqrt(2.0 / (math.pi * n * tb)) * math.cos(n * tb - n * beta - math.pi / 4.0)
    raise DomainError("Debye forms are singular at the turning point x = n")
