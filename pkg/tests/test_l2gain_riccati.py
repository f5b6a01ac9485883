import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from targetpoint.analysis.l2gain import (ParameterError, l2_gain_closed_form, l2_gain_upper,
                                         l2_gain_sweep, lambda_min_at, system_matrix,
                                         upsilon_sq_expansion)
from targetpoint.analysis.linalg import jacobi_eigh, sqrtm_spd2, sym2_eigvals
from targetpoint.analysis.riccati import (c0_constant, pk_asymptotics, riccati_residual,
                                          riccati_solve)

A = 3 / 16


def _svd_gain(k1, k2, n=20001):
    """Brute-force oracle: largest singular value of (jwI - A)^-1 on a dense grid."""
    Am = system_matrix(k1, k2)
    best = 0.0
    for w in np.linspace(0.0, 10 * k2, n):
        G = np.linalg.inv(1j * w * np.eye(2) - Am)
        best = max(best, np.linalg.svd(G, compute_uv=False)[0])
    return best


def test_upper_expression_at_k2_20():
    assert l2_gain_upper(75, 20) == pytest.approx(1.0520, abs=5e-5)


def test_closed_form_matches_sweep_and_svd_at_k2_20():
    cf = l2_gain_closed_form(75, 20)
    assert l2_gain_sweep(75, 20).upsilon == pytest.approx(cf, rel=1e-6)
    assert _svd_gain(75, 20, n=2001) == pytest.approx(cf, rel=1e-6)


def test_upper_expression_bounds_exact_gain():
    for k2 in (20, 50, 200, 1000):
        assert l2_gain_upper(A * k2 ** 2, k2) >= l2_gain_closed_form(A * k2 ** 2, k2)


def test_gain_at_k2_200_in_range():
    assert 1 < l2_gain_closed_form(7500, 200) < 1.2
    assert 1 < l2_gain_upper(7500, 200) < 1.2


def test_expansion_of_upper_expression():
    k2 = 1e4
    u2 = l2_gain_upper(A * k2 ** 2, k2) ** 2
    assert (u2 - 1) == pytest.approx(upsilon_sq_expansion(k2), rel=0.05)


@pytest.mark.parametrize("k2", [20, 50, 200])
def test_lambda_min_window(k2):
    assert 0.93 < l2_gain_sweep(A * k2 ** 2, k2).lambda_min < 1


def test_non_hurwitz_rejected():
    with pytest.raises(ParameterError):
        l2_gain_sweep(1, 0)
    with pytest.raises(ParameterError):
        riccati_solve(1, 0)


@settings(max_examples=20, deadline=None)
@given(k2=st.floats(20, 1000))
def test_closed_form_agrees_with_sweep(k2):
    k1 = A * k2 * k2
    assert l2_gain_sweep(k1, k2).upsilon == pytest.approx(l2_gain_closed_form(k1, k2), rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(k1=st.floats(0.1, 1e4), k2=st.floats(0.1, 1e3), w=st.floats(0, 1e3))
def test_lambda_min_formula_matches_numpy(k1, k2, w):
    M = 1j * w * np.eye(2) - system_matrix(k1, k2)
    ref = np.linalg.eigvalsh(M.conj().T @ M)[0]
    assert lambda_min_at(k1, k2, w) == pytest.approx(ref, rel=1e-7, abs=1e-9 * (1 + k1 * k1))


@pytest.mark.parametrize("k2", [20, 50, 100, 200, 500, 1000])
def test_riccati_residual_and_pd(k2):
    sol = riccati_solve(A * k2 ** 2, k2)
    assert sol.ok, sol.reason
    assert sol.residual <= 1e-8
    assert sol.P[0, 1] == sol.P[1, 0]
    assert sol.positive_definite


def test_riccati_signs_at_200():
    P = riccati_solve(7500, 200).P
    assert np.all(P > 0)
    assert np.linalg.det(P) > 0


def test_zero_matrix_residual_is_one():
    assert riccati_residual(np.zeros((2, 2)), 75, 20, 1.05) == pytest.approx(1.0)


def test_riccati_fails_below_gain():
    # an attenuation level below the true gain has no stabilising solution
    sol = riccati_solve(75, 20, upsilon=1.0)
    assert not sol.ok
    assert sol.reason


def test_asymptotic_structure():
    rep = pk_asymptotics()
    assert rep.slopes_ok, rep.slopes
    assert rep.det_ok
    assert np.all(rep.F_limit > 0)


def test_sin_phi_tends_to_minus_one():
    s = [riccati_solve(A * k2 ** 2, k2).sin_phi for k2 in (1e2, 1e3, 1e4)]
    assert s[0] > s[1] > s[2] > -1
    assert 1 + s[2] < 1e-6


def test_c0():
    assert c0_constant() == pytest.approx(math.sqrt(5 / 8) * 16 / 3, rel=1e-15)
    assert c0_constant() == pytest.approx(4.2164, abs=1e-4)


def test_jacobi_against_numpy():
    rng = np.random.default_rng(3)
    for _ in range(20):
        m = rng.standard_normal((4, 4))
        m = m + m.T
        w, v = jacobi_eigh(m)
        assert w == pytest.approx(np.linalg.eigvalsh(m), abs=1e-12)
        assert np.allclose(m @ v, v * w, atol=1e-11)
    assert jacobi_eigh(np.eye(4))[0] == pytest.approx(np.ones(4))


def test_two_by_two_helpers():
    s = np.array([[5.0, 2.0], [2.0, 3.0]])
    r = sqrtm_spd2(s)
    assert r @ r == pytest.approx(s, abs=1e-13)
    assert sorted(sym2_eigvals(s)) == pytest.approx(sorted(np.linalg.eigvalsh(s)))
