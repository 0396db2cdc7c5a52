"""Magnetization profiles of a kink driven by a uniform field.

For a uniform field ``B`` the reduced dynamics acts on the kink family
``|n>`` as ``K = gamma n + alpha (e^{-i theta} |n><n-1| + h.c.)`` with
``alpha = |(B1, B2)| a(q)`` and ``gamma = B3``.  The diagonal phase
``|n> -> e^{-i theta n} |n>`` removes ``theta`` and leaves the
Stark-Jacobi operator, so the centered kink evolves into

    psi_t(n) = J_n(w) exp(-i n (theta + gamma t / 2 + pi / 2))

with ``w = (4 alpha / gamma) sin(gamma t / 2)`` (``2 alpha t`` when
``gamma = 0``).  Expectations follow from translation covariance:
``<n|S^3_x|n> = M(x - n)`` and ``<n|S^+_x|n-1> = g(n - x)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .bessel import bessel_j_block, truncation_order
from .errors import DomainError
from .kink_profiles import (
    hopping_coefficient_a,
    magnetization_z,
    ptilde_measure,
    transverse_matrix_element,
)
from .stark_jacobi import StarkJacobiParams

__all__ = [
    "UniformField3",
    "ProfileSnapshot",
    "m3",
    "m1",
    "m2",
    "m_general",
    "m3_profile",
    "m1_profile",
    "snapshot",
    "phi_prime",
    "phi_prime_difference",
    "scaling_profile",
    "KAPPA_CANDIDATES",
    "ProfileLimitReport",
    "profile_limit_fit",
    "TransverseReport",
    "transverse_spread_check",
    "time_dependent_alpha_m3",
    "light_cone_radius",
]

KAPPA_CANDIDATES = (1.0 / math.pi, 2.0 / math.pi)


def _check_q(q: float) -> float:
    q = float(q)
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    return q


@dataclass(frozen=True)
class UniformField3:
    """Uniform field ``B`` together with the deformation parameter ``q``."""

    B: tuple[float, float, float]
    q: float

    def __post_init__(self):
        B = tuple(float(c) for c in self.B)
        if len(B) != 3 or not all(math.isfinite(c) for c in B):
            raise DomainError("B must be a finite 3-vector")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "q", _check_q(self.q))

    @property
    def transverse(self) -> float:
        return math.hypot(self.B[0], self.B[1])

    @property
    def theta(self) -> float:
        return math.atan2(self.B[1], self.B[0])

    @property
    def a_rot(self) -> float:
        return self.B[0] / self.transverse if self.transverse else 1.0

    @property
    def b_rot(self) -> float:
        return self.B[1] / self.transverse if self.transverse else 0.0

    @property
    def alpha(self) -> float:
        return self.transverse * hopping_coefficient_a(self.q)

    @property
    def gamma(self) -> float:
        return self.B[2]

    @property
    def params(self) -> StarkJacobiParams:
        return StarkJacobiParams(self.alpha, self.gamma)

    @classmethod
    def from_alpha(cls, alpha: float, gamma: float, q: float, theta: float = 0.0) -> "UniformField3":
        """Field whose reduced operator has hopping ``alpha`` and tilt ``gamma``."""
        r = alpha / hopping_coefficient_a(q)
        return cls((r * math.cos(theta), r * math.sin(theta), gamma), q)


# ---------------------------------------------------------------------------
# cached one-kink data

def _cutoff(q: float) -> int:
    """Distance beyond which ``q**|y|`` is below 1e-300 and both profiles are exact constants."""
    return math.ceil(300 * math.log(10) / -math.log(q))


@lru_cache(maxsize=64)
def _profile_core(q: float) -> tuple[int, np.ndarray]:
    Y = _cutoff(q)
    return Y, np.array([magnetization_z(y, q) for y in range(-Y, Y + 1)])


@lru_cache(maxsize=64)
def _transverse_core(q: float) -> tuple[int, np.ndarray]:
    Y = _cutoff(q)
    return Y, np.array([transverse_matrix_element(n, q) for n in range(-Y, Y + 1)])


def _profile(y: np.ndarray, q: float) -> np.ndarray:
    """``M(y)`` on an integer array; ``-sgn`` steps outside the cached core."""
    Y, core = _profile_core(q)
    y = np.asarray(y)
    out = np.where(y > 0, -0.5, 0.5)
    inside = np.abs(y) <= Y
    out[inside] = core[y[inside] + Y]
    return out


def _transverse(n: np.ndarray, q: float) -> np.ndarray:
    Y, core = _transverse_core(q)
    n = np.asarray(n)
    out = np.zeros(n.shape)
    inside = np.abs(n) <= Y
    out[inside] = core[n[inside] + Y]
    return out


def light_cone_radius(w: float) -> int:
    """Truncation ``M = ceil|w| + 40 max(1, ceil|w|^(1/3)) + 40`` for every m-sum."""
    return truncation_order(w)


@lru_cache(maxsize=256)
def _weights(w: float):
    M = light_cone_radius(w)
    J = bessel_j_block(-M - 1, M, w)  # orders -M-1..M
    return M, J


# ---------------------------------------------------------------------------
# profiles

def _argument(field: UniformField3, t: float) -> float:
    return field.params.bessel_argument(t)


def _m3_from_argument(xs, w: float, q: float) -> tuple[np.ndarray, float]:
    M, J = _weights(w)
    J2 = J[1:] ** 2  # orders -M..M
    m = np.arange(-M, M + 1)
    xs = np.atleast_1d(np.asarray(xs, dtype=int))
    vals = np.array([np.dot(J2, _profile(x - m, q)) for x in xs])
    # a convex combination of values in [-1/2, 1/2]; clip the last-ulp excess
    vals = np.clip(vals, -0.5, 0.5)
    tail = abs(1.0 - math.fsum(J2))
    return vals, tail


def m3_profile(xs, t: float, field: UniformField3) -> np.ndarray:
    """Vectorized ``m^3(x, t) = sum_m J_m(w)^2 M(x - m)``."""
    return _m3_from_argument(xs, _argument(field, t), field.q)[0]


def m3(x: int, t: float, field: UniformField3) -> float:
    return float(m3_profile([x], t, field)[0])


def _transverse_sum(xs, w: float, q: float) -> np.ndarray:
    """``S(x) = sum_n J_n(w) J_{n-1}(w) g(n - x)``."""
    M, J = _weights(w)
    c = J[1:] * J[:-1]  # J_n J_{n-1} for n = -M..M
    n = np.arange(-M, M + 1)
    xs = np.atleast_1d(np.asarray(xs, dtype=int))
    return np.array([np.dot(c, _transverse(n - x, q)) for x in xs])


def _rotation_angle(field: UniformField3, t: float) -> float:
    return field.theta + 0.5 * field.gamma * t


def m1_profile(xs, t: float, field: UniformField3) -> np.ndarray:
    """``m^1(x, t) = -[a_rot sin(gamma t/2) + b_rot cos(gamma t/2)] S(x)``."""
    S = _transverse_sum(xs, _argument(field, t), field.q)
    return -math.sin(_rotation_angle(field, t)) * S


def m1(x: int, t: float, field: UniformField3) -> float:
    return float(m1_profile([x], t, field)[0])


def m2(x: int, t: float, field: UniformField3) -> float:
    """``m^2(x, t) = [a_rot cos(gamma t/2) - b_rot sin(gamma t/2)] S(x)``."""
    S = _transverse_sum([x], _argument(field, t), field.q)[0]
    return float(math.cos(_rotation_angle(field, t)) * S)


def m_general(omega_hat: Sequence[float], x: int, t: float, field: UniformField3) -> float:
    """``<Omega . S_x>`` at time ``t``; the transverse part is the rotated ``<S^+_x>``."""
    omega = np.asarray(omega_hat, dtype=float)
    if omega.shape != (3,) or abs(np.linalg.norm(omega) - 1.0) > 1e-12:
        raise DomainError("omega_hat must be a unit 3-vector")
    out = omega[2] * m3(x, t, field)
    if omega[0] or omega[1]:
        S = _transverse_sum([x], _argument(field, t), field.q)[0]
        phase = _rotation_angle(field, t)
        out += (-omega[0] * math.sin(phase) + omega[1] * math.cos(phase)) * S
    return float(out)


@dataclass
class ProfileSnapshot:
    t: float
    component: str
    x_range: tuple[int, int]
    values: np.ndarray
    truncation: int
    tail_bound: float

    @property
    def xs(self) -> np.ndarray:
        return np.arange(self.x_range[0], self.x_range[1] + 1)

    def rows(self):
        for x, v in zip(self.xs, self.values):
            yield (self.t, int(x), float(v), self.component)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "x", "value", "component"])
        for t, x, v, c in self.rows():
            writer.writerow([repr(float(t)), x, repr(v), c])
        return buf.getvalue()


def snapshot(field: UniformField3, t: float, lo: int, hi: int, component: str = "z") -> ProfileSnapshot:
    """Profile on ``lo..hi`` for ``component`` in ``{"z", "x", "y"}``."""
    xs = np.arange(lo, hi + 1)
    w = _argument(field, t)
    if component == "z":
        vals, tail = _m3_from_argument(xs, w, field.q)
    elif component in ("x", "y"):
        S = _transverse_sum(xs, w, field.q)
        phase = _rotation_angle(field, t)
        vals = -math.sin(phase) * S if component == "x" else math.cos(phase) * S
        tail = abs(1.0 - math.fsum(bessel_j_block(-light_cone_radius(w), light_cone_radius(w), w) ** 2))
    else:
        raise DomainError(f"unknown component {component!r}")
    return ProfileSnapshot(float(t), component, (int(lo), int(hi)), vals, light_cone_radius(w), tail)


def time_dependent_alpha_m3(x: int, t: float, alpha_fn: Callable[[float], float], q: float) -> float:
    """``m^3`` for ``B3 = 0`` and a time-dependent hopping: ``2 alpha t -> 2 int_0^t alpha``."""
    q = _check_q(q)
    integral, _ = quad(alpha_fn, 0.0, t, limit=200, epsabs=1e-13, epsrel=1e-13)
    return float(_m3_from_argument([x], 2.0 * integral, q)[0][0])


# ---------------------------------------------------------------------------
# ballistic regime

def _p_core(q: float) -> tuple[np.ndarray, np.ndarray]:
    Y = _cutoff(q)
    j = np.arange(-Y + 1, Y + 1)
    prof = _profile(np.arange(-Y, Y + 1), q)
    return j, prof[:-1] - prof[1:]  # p(j) = M(j - 1) - M(j)


def phi_prime(x: int, v: float, alpha: float, q: float) -> float:
    """``phi'_x(v) = -(x/v) sum_j J_{x+1-j}(2 alpha x / v)^2 p(j)``.

    This is ``t [m^3(x+1, t) - m^3(x, t)]`` on the ray ``x = v t`` of the
    free (``gamma = 0``) evolution.
    """
    if v == 0:
        raise DomainError("phi_prime needs v != 0 (phi(0) = 0 by symmetry)")
    q = _check_q(q)
    j, p = _p_core(q)
    z = 2.0 * alpha * x / v
    orders = int(x) + 1 - j
    J = bessel_j_block(int(orders.min()), int(orders.max()), z)
    return float(-(x / v) * np.dot(J[orders - orders.min()] ** 2, p))


def phi_prime_difference(x: int, v: float, alpha: float, q: float) -> float:
    """Same quantity from two profile evaluations (independent route)."""
    t = x / v
    f = UniformField3.from_alpha(alpha, 0.0, q)
    vals = m3_profile([x, x + 1], t, f)
    return float(t * (vals[1] - vals[0]))


def scaling_profile(v, alpha: float, kappa: float = 1.0 / math.pi):
    """``-kappa arcsin(v / 2 alpha)`` inside the light cone, ``-sgn(v)/2`` outside."""
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    v = np.asarray(v, dtype=float)
    s = np.clip(v / (2.0 * alpha), -1.0, 1.0)
    out = np.where(np.abs(v) > 2.0 * alpha, -0.5 * np.sign(v), -kappa * np.arcsin(s))
    return out if out.ndim else float(out)


def _m3_at_real_x(x: float, w: float, q: float) -> float:
    lo = math.floor(x)
    vals, _ = _m3_from_argument([lo, lo + 1], w, q)
    frac = x - lo
    return float((1.0 - frac) * vals[0] + frac * vals[1])


def _extrapolate(inv_t: np.ndarray, values: np.ndarray) -> float:
    """Richardson extrapolation to ``1/t = 0`` (polynomial through all points)."""
    coeffs = np.polyfit(inv_t, values, len(inv_t) - 1)
    return float(coeffs[-1])


@dataclass
class ProfileLimitReport:
    alpha: float
    q: float
    t_list: list[float]
    v_grid: list[float]
    extrapolated: list[float]
    raw: list[list[float]]
    kappa_fit: float
    kappa_stderr: float
    continuity_residuals: dict
    plateau_residual: float

    @property
    def kappa_selected(self) -> float | None:
        """The single candidate within 10% of the fit, else ``None``."""
        close = [k for k in KAPPA_CANDIDATES if abs(self.kappa_fit - k) <= 0.1 * k]
        return close[0] if len(close) == 1 else None

    @property
    def continuity_choice(self) -> float:
        return min(KAPPA_CANDIDATES, key=lambda k: self.continuity_residuals[repr(k)])

    @property
    def continuity_residual(self) -> float:
        return self.continuity_residuals[repr(self.continuity_choice)]

    def per_v_table(self) -> list[dict]:
        out = []
        for v, val in zip(self.v_grid, self.extrapolated):
            s = math.asin(v / (2 * self.alpha)) if abs(v) < 2 * self.alpha else math.nan
            local = -val / s if s and not math.isnan(s) else math.nan
            out.append({"v": v, "m3_extrapolated": val, "kappa_fit_local": local})
        return out

    def to_dict(self) -> dict:
        return {
            "kappa_fit": self.kappa_fit,
            "kappa_stderr": self.kappa_stderr,
            "kappa_candidates": list(KAPPA_CANDIDATES),
            "continuity_residual": self.continuity_residual,
            "continuity_residuals": self.continuity_residuals,
            "plateau_residual": self.plateau_residual,
            "per_v_table": self.per_v_table(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def profile_limit_fit(alpha: float = 1.0, q: float = 0.5, t_list: Sequence[float] | None = None,
                      v_grid: Sequence[float] | None = None, phases: int = 8) -> ProfileLimitReport:
    """Large-time limit of ``m^3(v t, t)`` and the arcsin prefactor.

    For each ``t`` the profile is averaged over ``phases`` times spaced by
    ``pi / (2 alpha phases)``, which together cover one period of the Bessel
    ``cos^2`` oscillation in the argument ``2 alpha t``.  Values are
    evaluated on the ray by linear interpolation in ``x`` and extrapolated
    to ``1/t = 0``.  ``kappa`` is the least-squares fit of
    ``-kappa arcsin(v / 2 alpha)`` for ``|v| < 2 alpha``.  The continuity residual of a candidate is the
    distance between the extrapolated profile at ``v = 2 alpha`` and that
    candidate's left limit ``-kappa pi / 2``.
    """
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    q = _check_q(q)
    t_list = [c / alpha for c in (50, 100, 200, 400)] if t_list is None else [float(t) for t in t_list]
    if v_grid is None:
        step = 0.05 * 2 * alpha
        v_grid = [round(k * step, 12) for k in range(-30, 31)]
    v_grid = [float(v) for v in v_grid]
    # phases spread over one period pi of the cos^2 in the argument 2 alpha t
    dt = math.pi / (2.0 * alpha * max(phases, 1))
    raw = []
    for v in v_grid:
        row = []
        for t in t_list:
            samples = []
            for k in range(phases):
                tk = t + k * dt
                samples.append(_m3_at_real_x(v * tk, 2.0 * alpha * tk, q))
            row.append(math.fsum(samples) / len(samples))
        raw.append(row)
    inv_t = 1.0 / np.array(t_list)
    ext = [_extrapolate(inv_t, np.array(row)) for row in raw]

    inside = [(math.asin(v / (2 * alpha)), e) for v, e in zip(v_grid, ext) if abs(v) < 2 * alpha]
    s = np.array([a for a, _ in inside])
    y = np.array([e for _, e in inside])
    kappa = float(-np.dot(s, y) / np.dot(s, s))
    resid = y + kappa * s
    dof = max(len(s) - 1, 1)
    stderr = float(math.sqrt(np.dot(resid, resid) / dof / np.dot(s, s)))

    edge = [e for v, e in zip(v_grid, ext) if abs(v - 2 * alpha) <= 1e-12]
    edge_val = edge[0] if edge else _extrapolate(
        inv_t, np.array([_m3_at_real_x(2 * alpha * t, 2 * alpha * t, q) for t in t_list]))
    continuity = {repr(k): abs(edge_val + k * math.pi / 2) for k in KAPPA_CANDIDATES}
    plateau = [abs(e + 0.5 * math.copysign(1.0, v)) for v, e in zip(v_grid, ext) if abs(v) > 2 * alpha + 1e-12]
    return ProfileLimitReport(alpha, q, t_list, v_grid, ext, raw, kappa, stderr, continuity,
                              max(plateau) if plateau else 0.0)


# ---------------------------------------------------------------------------
# transverse component in the ballistic regime

@dataclass
class TransverseReport:
    v_values: list[float]
    t_list: list[float]
    psi_prime: dict  # repr(v) -> list over t
    localization_lengths: list[float]
    r_squared: list[float]
    ptilde_sum: float

    @property
    def decays_along_rays(self) -> bool:
        return all(
            all(abs(b) < abs(a) for a, b in zip(vals, vals[1:])) for vals in self.psi_prime.values()
        )

    @property
    def min_r_squared(self) -> float:
        return min(self.r_squared)

    @property
    def length_spread(self) -> float:
        return max(self.localization_lengths) / min(self.localization_lengths)

    def to_dict(self) -> dict:
        return {
            "v": self.v_values,
            "t": self.t_list,
            "psi_prime": self.psi_prime,
            "localization_length": self.localization_lengths,
            "r_squared": self.r_squared,
            "ptilde_sum": self.ptilde_sum,
        }


def _exponential_fit(xs: np.ndarray, vals: np.ndarray) -> tuple[float, float]:
    """Fit ``log|vals| = c - |x| / ell``; returns ``(ell, R^2)``."""
    keep = np.abs(vals) > 0
    X, Y = np.abs(xs[keep]).astype(float), np.log(np.abs(vals[keep]))
    slope, icpt = np.polyfit(X, Y, 1)
    pred = icpt + slope * X
    ss_res = float(np.sum((Y - pred) ** 2))
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return (-1.0 / slope if slope < 0 else math.inf), r2


def transverse_spread_check(v_values: Sequence[float], alpha: float, q: float, t_list: Sequence[float],
                            x_min: int = 10, x_max: int | None = None) -> TransverseReport:
    """``psi'_x(v) = t [m^1(x+1, t) - m^1(x, t)]`` along rays and the spatial decay of ``m^1``.

    The field is purely transverse along ``e_2`` (``b_rot = 1``, ``gamma = 0``).
    The localization length at each ``t`` is an exponential fit of
    ``|m^1(x, t)|`` over ``x_min <= |x| <= x_max`` (default ``x_min + 30``).
    """
    q = _check_q(q)
    f = UniformField3.from_alpha(alpha, 0.0, q, theta=math.pi / 2)
    psi = {}
    for v in v_values:
        vals = []
        for t in t_list:
            x = int(round(v * t))
            pair = m1_profile([x, x + 1], t, f)
            vals.append(float(t * (pair[1] - pair[0])))
        psi[repr(float(v))] = vals
    x_max = x_min + 30 if x_max is None else x_max
    xs = np.concatenate([np.arange(-x_max, -x_min + 1), np.arange(x_min, x_max + 1)])
    lengths, r2 = [], []
    for t in t_list:
        ell, r = _exponential_fit(xs, m1_profile(xs, t, f))
        lengths.append(ell)
        r2.append(r)
    Y = _cutoff(q)
    ptilde = math.fsum(ptilde_measure(m, q) for m in range(-Y, Y + 2))
    return TransverseReport([float(v) for v in v_values], [float(t) for t in t_list], psi, lengths, r2, ptilde)
