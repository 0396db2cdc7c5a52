import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xxzkink.bessel import bessel_j
from xxzkink.errors import DomainError
from xxzkink.interface_motion import (
    KAPPA_CANDIDATES,
    UniformField3,
    light_cone_radius,
    m1,
    m1_profile,
    m2,
    m3,
    m3_profile,
    m_general,
    phi_prime,
    phi_prime_difference,
    profile_limit_fit,
    scaling_profile,
    snapshot,
    time_dependent_alpha_m3,
    transverse_spread_check,
)
from xxzkink.kink_profiles import magnetization_z, transverse_matrix_element
from xxzkink.perturbation_dynamics import FieldSpec, reduced_evolution
from xxzkink.stark_jacobi import propagator_kernel
from xxzkink.xxz_core import ChainSpec, kink_ground_family, spin_operator

Q = 0.5


def test_uniform_field_derived_quantities():
    f = UniformField3((0.3, 0.4, 0.2), Q)
    assert f.a_rot ** 2 + f.b_rot ** 2 == pytest.approx(1.0)
    assert f.theta == pytest.approx(math.atan2(0.4, 0.3))
    assert f.alpha == pytest.approx(0.5 * 1.3474787321015986, rel=1e-14)
    assert f.gamma == 0.2
    g = UniformField3.from_alpha(1.5, 0.0, Q, theta=0.3)
    assert g.alpha == pytest.approx(1.5) and g.theta == pytest.approx(0.3)
    with pytest.raises(DomainError):
        UniformField3((1, 0, 0), 1.0)


def test_time_zero_is_static_kink():
    f = UniformField3((0.3, 0.4, 0.2), Q)
    for x in range(-4, 5):
        assert m3(x, 0.0, f) == magnetization_z(x, Q)
        assert m1(x, 0.0, f) == 0.0


def test_m1_vanishes_for_b2_zero_free_case():
    f = UniformField3((0.7, 0.0, 0.0), Q)
    assert np.abs(m1_profile(range(-10, 11), 3.7, f)).max() == 0.0


def test_general_direction_reduces_to_components():
    f = UniformField3((0.3, -0.5, 0.4), Q)
    for x, t in [(0, 1.3), (2, 4.0), (-3, 7.5)]:
        assert m_general((0, 0, 1), x, t, f) == pytest.approx(m3(x, t, f), abs=1e-12)
        assert m_general((1, 0, 0), x, t, f) == pytest.approx(m1(x, t, f), abs=1e-15)
        n = np.array([1.0, 2.0, 2.0]) / 3
        combo = n[0] * m1(x, t, f) + n[1] * m2(x, t, f) + n[2] * m3(x, t, f)
        assert m_general(n, x, t, f) == pytest.approx(combo, abs=1e-14)
    with pytest.raises(DomainError):
        m_general((1, 1, 0), 0, 1.0, f)


def _kernel_state(f, t, R=80):
    """psi_t(n) = e^{-i theta n} <n|exp(-it K0)|0> from the Stark-Jacobi kernel."""
    ns = np.arange(-R, R + 1)
    return ns, np.array([np.exp(-1j * f.theta * n) * propagator_kernel(n, 0, t, f.params) for n in ns])


@pytest.mark.parametrize("B,t", [((0.3, 0.4, 0.25), 5.0), ((1.0, -0.2, 0.0), 6.0), ((0.1, 0.9, -0.6), 11.0)])
def test_series_match_kernel_double_sum(B, t):
    f = UniformField3(B, Q)
    ns, psi = _kernel_state(f, t)
    for x in (-2, 0, 1, 5):
        z = np.dot(np.abs(psi) ** 2, [magnetization_z(x - n, Q) for n in ns])
        splus = np.dot(np.conj(psi[1:]) * psi[:-1], [transverse_matrix_element(n - x, Q) for n in ns[1:]])
        assert m3(x, t, f) == pytest.approx(z, abs=1e-13)
        assert m1(x, t, f) == pytest.approx(splus.real, abs=1e-13)
        assert m2(x, t, f) == pytest.approx(splus.imag, abs=1e-13)


def test_many_body_bridge_all_components():
    chain = ChainSpec.centered(10, 2.0)
    fam = kink_ground_family(chain)
    B = (0.3, 0.4, 0.25)
    field = FieldSpec.uniform(chain, B)
    f = UniformField3(B, chain.q)
    for t in (0.5, 1.0, 2.0):
        psi = reduced_evolution(fam, field, t, fam.state(0))
        for x in (0, 1):
            vals = {c: np.vdot(psi, spin_operator(chain, c, x) @ psi).real for c in "xyz"}
            assert abs(vals["z"] - m3(x, t, f)) <= 5e-3
            assert abs(vals["x"] - m1(x, t, f)) <= 5e-3
            assert abs(vals["y"] - m2(x, t, f)) <= 5e-3


def test_periodicity():
    f = UniformField3((0.4, 0.1, 0.5), Q)
    xs = np.arange(-15, 16)
    t = 2.3
    np.testing.assert_allclose(m3_profile(xs, t + f.params.period, f), m3_profile(xs, t, f), atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(0.2, 2.0), st.floats(0, 30), st.integers(-40, 40))
def test_convex_combination_sandwich(alpha, gamma, t, x):
    f = UniformField3.from_alpha(alpha, gamma, Q)
    M = light_cone_radius(f.params.w(t))
    translates = [magnetization_z(x - m, Q) for m in range(-M, M + 1)]
    assert min(translates) - 1e-14 <= m3(x, t, f) <= max(translates) + 1e-14
    assert -0.5 <= m3(x, t, f) <= 0.5


def test_localized_for_nonzero_gamma():
    f = UniformField3.from_alpha(2.0, 0.5, Q)
    reach = abs(f.params.w(3.0))
    xs = np.arange(int(reach) + 5, int(reach) + 25)
    dev = np.abs(m3_profile(xs, 3.0, f) + 0.5)
    assert np.all(dev <= 10.0 * np.exp(-0.5 * (xs - reach)))


def test_light_cone_plateau():
    alpha, t = 1.0, 30.0
    f = UniformField3.from_alpha(alpha, 0.0, Q)
    z = 2 * alpha * t
    edge = math.ceil(z + 40 * z ** (1 / 3) + 40)
    vals = m3_profile([edge, edge + 7, -edge, -edge - 3], t, f)
    np.testing.assert_allclose(vals, [-0.5, -0.5, 0.5, 0.5], atol=1e-6)


def test_small_gamma_continuity():
    f0 = UniformField3.from_alpha(1.0, 0.0, Q)
    f1 = UniformField3.from_alpha(1.0, 1e-4, Q)
    xs = np.arange(-25, 26)
    for t in (1.0, 5.0, 10.0):
        assert np.abs(m3_profile(xs, t, f0) - m3_profile(xs, t, f1)).max() <= 1e-5


def test_phi_prime_forms_agree_and_sign():
    for x, v in [(10, 0.5), (25, 1.3), (40, 1.9), (30, 2.5)]:
        a = phi_prime(x, v, 1.0, Q)
        assert a <= 0
        assert a == pytest.approx(phi_prime_difference(x, v, 1.0, Q), abs=1e-9)
    with pytest.raises(DomainError):
        phi_prime(5, 0.0, 1.0, Q)


def test_phi_prime_outside_cone_decays():
    vals = [abs(phi_prime(x, 2.6, 1.0, Q)) for x in (20, 40, 80, 160)]
    assert all(b < 0.1 * a for a, b in zip(vals, vals[1:]))


def test_scaling_profile_shape():
    assert scaling_profile(0.0, 1.0) == 0.0
    assert scaling_profile(2.5, 1.0) == -0.5 and scaling_profile(-2.5, 1.0) == 0.5
    assert scaling_profile(2.0, 1.0) == pytest.approx(-0.5)
    assert scaling_profile(1.0, 1.0, kappa=2 / math.pi) == pytest.approx(-1 / 3)
    with pytest.raises(DomainError):
        scaling_profile(0.1, 0.0)


def test_profile_limit_fit_small_run():
    rep = profile_limit_fit(1.0, Q, t_list=[25, 50, 100], v_grid=[-2.4, -1.0, 0.5, 1.5, 2.0, 2.4], phases=4)
    assert rep.kappa_selected == KAPPA_CANDIDATES[0]
    assert rep.continuity_choice == KAPPA_CANDIDATES[0]
    payload = json.loads(rep.to_json())
    assert set(payload) >= {"kappa_fit", "kappa_candidates", "continuity_residual", "per_v_table"}
    assert payload["kappa_candidates"][1] == pytest.approx(2 / math.pi)


def test_time_dependent_alpha():
    f = UniformField3.from_alpha(0.8, 0.0, Q)
    assert time_dependent_alpha_m3(3, 4.0, lambda s: 0.8, Q) == pytest.approx(m3(3, 4.0, f), abs=1e-14)
    for x in (-2, 0, 1, 4):
        assert time_dependent_alpha_m3(x, 2 * math.pi, math.cos, Q) == pytest.approx(magnetization_z(x, Q), abs=1e-12)
    # nonnegative alpha: the front (last site visibly above -1/2) only advances
    def front(t):
        return max(x for x in range(0, 80) if time_dependent_alpha_m3(x, t, lambda s: 1 + math.sin(s), Q) > -0.5 + 1e-6)

    fronts = [front(t) for t in (0.5, 1, 2, 3, 4, 6)]
    assert all(b >= a for a, b in zip(fronts, fronts[1:]))
    assert fronts[-1] > fronts[0]


def test_snapshot_csv_and_tail():
    f = UniformField3((0.3, 0.4, 0.5), Q)
    snap = snapshot(f, 1.7, -5, 5)
    assert snap.tail_bound < 1e-10
    assert np.all(np.abs(snap.values) <= 0.5)
    lines = snap.to_csv().splitlines()
    assert lines[0] == "t,x,value,component" and len(lines) == 12
    assert float(lines[1].split(",")[2]) == snap.values[0]
    x_snap = snapshot(f, 1.7, -2, 2, "x")
    assert x_snap.values[2] == pytest.approx(m1(0, 1.7, f), abs=1e-15)
    with pytest.raises(DomainError):
        snapshot(f, 1.0, 0, 1, "w")


def test_transverse_report_structure():
    rep = transverse_spread_check([0.5, 1.0], 1.0, Q, [5, 10])
    assert abs(rep.ptilde_sum) <= 1e-12
    assert set(rep.psi_prime) == {"0.5", "1.0"}
    assert len(rep.r_squared) == 2
    json.dumps(rep.to_dict())
