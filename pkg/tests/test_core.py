import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcn_duality import core
from bcn_duality.core import (ChamberError, CouplingError, Couplings,
                              DomainError, PhasePointR, PhasePointS,
                              AsymptoticState, alpha_beta, build_C, build_E,
                              build_h, build_Q, build_xi, couplings_from_rsvd,
                              delta_phase, validate_chamber, z_factor, z_vector)

from conftest import random_chamber


# ---------------------------------------------------------------------------
# couplings
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("mu,nu,kappa,g_sq,g1_sq,g2_sq", [
    (-1.0, 2.0, 0.0, 1.0, 0.0, 2.0),
    (-1.0, 1.0, 1.0, 1.0, 0.5, 0.0),
    (-2.0, 3.0, 1.0, 4.0, 1.5, 2.0),
])
def test_coupling_relations(mu, nu, kappa, g_sq, g1_sq, g2_sq):
    c = couplings_from_rsvd(mu, nu, kappa)
    assert c.g_sq == pytest.approx(g_sq)
    assert c.g1_sq == pytest.approx(g1_sq)
    assert c.g2_sq == pytest.approx(g2_sq)


@pytest.mark.parametrize("mu,nu,kappa,needle", [
    (1.0, 1.0, 0.0, "mu"),
    (0.0, 1.0, 0.0, "mu"),
    (-1.0, -1.0, 0.0, "nu"),
    (-1.0, 0.0, 0.0, "nu"),
    (-1.0, 1.0, -0.5, "kappa"),
])
def test_coupling_sign_constraints(mu, nu, kappa, needle):
    with pytest.raises(CouplingError, match=needle):
        couplings_from_rsvd(mu, nu, kappa)


@given(mu=st.floats(-5, -0.01), nu=st.floats(0.01, 5), kappa=st.floats(0, 5))
def test_derived_couplings_always_admissible(mu, nu, kappa):
    c = couplings_from_rsvd(mu, nu, kappa)
    assert c.g_sq > 0
    assert c.g1_sq + c.g2_sq > 0


# ---------------------------------------------------------------------------
# chamber and phase points
# ---------------------------------------------------------------------------

def test_chamber_basic():
    assert validate_chamber([3.0, 2.0, 1.0])
    assert not validate_chamber([1.0, 2.0])
    assert not validate_chamber([2.0, 2.0])
    assert not validate_chamber([2.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        validate_chamber([])


@given(st.lists(st.floats(0.1, 50), min_size=1, max_size=8, unique=True))
def test_chamber_accepts_sorted_distinct_positive(xs):
    xs = sorted(xs, reverse=True)
    gaps_ok = all(a - b > 1e-6 for a, b in zip(xs, xs[1:])) and xs[-1] > 1e-6
    assert validate_chamber(xs, margin=1e-6) == gaps_ok


def test_phase_point_validation():
    PhasePointS(q=[2.0, 1.0], p=[0.0, 0.0])
    with pytest.raises(ChamberError):
        PhasePointS(q=[1.0, 2.0], p=[0.0, 0.0])
    with pytest.raises(ValueError):
        PhasePointS(q=[2.0, 1.0], p=[0.0])
    pt = PhasePointR(lam=[2.0, 1.0], theta=[0.3, -0.4])
    with pytest.raises(ValueError):
        pt.lam[0] = 5.0  # frozen array


def test_asymptotic_state_ordering():
    AsymptoticState(x=[0.0, 0.0], y=[2.0, 1.0], sign=+1)
    AsymptoticState(x=[0.0, 0.0], y=[-2.0, -1.0], sign=-1)
    with pytest.raises(ChamberError):
        AsymptoticState(x=[0.0, 0.0], y=[1.0, 2.0], sign=+1)
    with pytest.raises(ChamberError):
        AsymptoticState(x=[0.0, 0.0], y=[-1.0, -2.0], sign=-1)


# ---------------------------------------------------------------------------
# matrix builders
# ---------------------------------------------------------------------------

def test_build_C_n1():
    np.testing.assert_allclose(build_C(1), [[0, 1], [1, 0]])


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_build_C_involution_hermitian(n):
    C = build_C(n)
    np.testing.assert_allclose(C @ C, np.eye(2 * n), atol=0)
    np.testing.assert_allclose(C, C.conj().T, atol=0)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_build_E_identities(n):
    E = build_E(n)
    if n == 2:
        np.testing.assert_allclose(E, [1, 1, -1, -1])
    assert (E.conj() @ E).real == pytest.approx(2 * n)
    np.testing.assert_allclose(build_C(n) @ E, -E, atol=0)


def test_xi_substitution_n1():
    c = Couplings(mu=-1.0, nu=1.0, kappa=0.0)
    E = build_E(1)
    xi = build_xi(E, c)
    expect = -1j * (np.outer(E, E.conj()) - np.eye(2)) - 2j * build_C(1)
    np.testing.assert_allclose(xi, expect, atol=1e-15)


def test_xi_anti_hermitian_and_trace(c3):
    rng = np.random.default_rng(3)
    for n in (1, 2, 4):
        V = rng.normal(size=2 * n) + 1j * rng.normal(size=2 * n)
        xi = build_xi(V, c3)
        np.testing.assert_allclose(xi, -xi.conj().T, atol=1e-13)
        # oracle: direct trace evaluation, tr xi = i mu (V*V - N)
        expect = 1j * c3.mu * (V.conj() @ V - 2 * n)
        assert np.trace(xi) == pytest.approx(expect, abs=1e-12)
        # normalized V (V*V = N) kills the trace
        Vn = V * np.sqrt(2 * n) / np.linalg.norm(V)
        assert abs(np.trace(build_xi(Vn, c3))) < 1e-12
    with pytest.raises(ValueError):
        build_xi(np.ones(3), c3)


def test_build_Q():
    Q = build_Q([1.0, 0.5])
    np.testing.assert_allclose(np.diag(Q).real, [1.0, 0.5, -1.0, -0.5])
    assert np.trace(Q) == 0
    C = build_C(2)
    np.testing.assert_allclose(C @ Q @ C, -Q, atol=0)


# ---------------------------------------------------------------------------
# spectral factors z_a
# ---------------------------------------------------------------------------

def test_z_factor_n1():
    c = Couplings(mu=-1.0, nu=2.0, kappa=0.0)
    z = z_factor(0, [2.0], c)
    assert z == pytest.approx(-(1 + 1j))
    assert abs(z) == pytest.approx(math.sqrt(2))


@given(lam1=st.floats(0.2, 20), nu=st.floats(0.1, 5))
@settings(max_examples=50)
def test_z_factor_n1_modulus(lam1, nu):
    c = Couplings(mu=-1.0, nu=nu, kappa=0.0)
    assert abs(z_factor(0, [lam1], c)) == pytest.approx(
        math.sqrt(1 + nu ** 2 / lam1 ** 2), rel=1e-12)


def test_z_vector_n2_frozen():
    # oracle: independent term-by-term product evaluation (frozen values)
    c = Couplings(mu=-1.0, nu=1.0, kappa=0.0)
    z = z_vector([2.0, 1.0], c)
    np.testing.assert_allclose(z[0], -1 + 17j / 6, rtol=1e-14)
    np.testing.assert_allclose(z[1], -1 - 11j / 3, rtol=1e-14)


def test_z_vector_rejects_collision():
    c = Couplings(mu=-1.0, nu=1.0, kappa=0.0)
    with pytest.raises(ChamberError):
        z_vector([2.0, 2.0], c)


# ---------------------------------------------------------------------------
# dressing functions alpha, beta and h
# ---------------------------------------------------------------------------

def test_alpha_beta_kappa_zero():
    al, be = alpha_beta(1.7, 0.0)
    assert al == pytest.approx(1.0)
    assert be == 0


def test_alpha_beta_frozen_point():
    al, be = alpha_beta(1.0, 1.0)
    assert al ** 2 == pytest.approx((1 + math.sqrt(2)) / 2, rel=1e-14)
    assert (be ** 2).real == pytest.approx(-1 / (2 * (1 + math.sqrt(2))), rel=1e-13)
    assert al ** 2 + be ** 2 == pytest.approx(1.0, rel=1e-13)
    assert 2 * al * be == pytest.approx(1j, rel=1e-13)


@given(x=st.floats(0.05, 30), kappa=st.floats(0, 8))
@settings(max_examples=200)
def test_alpha_beta_identities(x, kappa):
    al, be = alpha_beta(x, kappa)
    assert abs(al ** 2 + be ** 2 - 1) < 1e-13
    assert abs(al ** 2 - be ** 2 - math.sqrt(1 + kappa ** 2 / x ** 2)) < 1e-13 * (1 + kappa / x)
    assert abs(2 * al * be - 1j * kappa / x) < 1e-13 * (1 + kappa / x)


def test_alpha_beta_domain():
    with pytest.raises(DomainError):
        alpha_beta(0.0, 1.0)
    with pytest.raises(DomainError):
        alpha_beta(-1.0, 1.0)


def test_h_kappa_zero_is_identity(c_k0):
    np.testing.assert_allclose(build_h([2.0, 1.0], c_k0), np.eye(4), atol=0)


def test_h_inverse_square_frozen():
    # oracle: numeric inversion of h
    c = Couplings(mu=-1.0, nu=1.0, kappa=1.0)
    h = build_h([1.0], c)
    hinv2 = np.linalg.matrix_power(np.linalg.inv(h), 2)
    s2 = math.sqrt(2)
    np.testing.assert_allclose(hinv2, [[s2, -1j], [1j, s2]], atol=1e-14)
    np.testing.assert_allclose(hinv2, core.h_inv_sq_closed_form([1.0], c), atol=1e-14)


def test_h_group_membership_and_closed_form():
    rng = np.random.default_rng(11)
    for n in range(1, 9):
        c = Couplings(mu=-1.0, nu=1.1, kappa=float(rng.uniform(0.1, 2.0)))
        lam = random_chamber(rng, n)
        h = build_h(lam, c)
        C = core.build_C(n)
        np.testing.assert_allclose(h, h.conj().T, atol=1e-14)
        np.testing.assert_allclose(h.conj().T @ C @ h, C, atol=1e-13)
        hinv2 = np.linalg.matrix_power(np.linalg.inv(h), 2)
        closed = core.h_inv_sq_closed_form(lam, c)
        assert np.linalg.norm(hinv2 - closed, 2) <= 1e-12 * np.linalg.norm(closed, 2)


# ---------------------------------------------------------------------------
# scattering phases Delta_a
# ---------------------------------------------------------------------------

def test_delta_n1_values():
    c = Couplings(mu=-1.0, nu=2.0, kappa=0.0)
    assert delta_phase([2.0], c)[0] == pytest.approx(0.5 * math.log(2), rel=1e-14)
    c = Couplings(mu=-1.0, nu=1.0, kappa=1.0)
    assert delta_phase([1.0], c)[0] == pytest.approx(math.log(2), rel=1e-14)


def test_delta_n2_frozen():
    # oracle: independent summation of the five log terms (frozen values)
    c = Couplings(mu=-1.0, nu=1.0, kappa=0.0)
    d = delta_phase([2.0, 1.0], c)
    np.testing.assert_allclose(d, [1.1001531219368137, -0.2742829758744188], rtol=1e-14)


def test_delta_pair_cancellation():
    # the antisymmetric difference terms cancel in the total phase
    rng = np.random.default_rng(5)
    for n in (2, 3, 5):
        c = Couplings(mu=float(rng.uniform(-1.5, -0.5)), nu=1.0, kappa=0.4)
        lam = random_chamber(rng, n)
        total = np.sum(delta_phase(lam, c))
        one, _, pair_sum = core.delta_decomposition(lam, c)
        assert total == pytest.approx(np.sum(one) + 0.5 * np.sum(pair_sum), rel=1e-12)
