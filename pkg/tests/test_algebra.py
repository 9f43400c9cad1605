import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import digamma, gamma as sp_gamma

from nldiv.algebra import (c_ns, eigenvalue_lipschitz_gap, eigh_sym, gamma, operator_norm,
                           sphere_area, unit_ball_volume)
from nldiv.errors import DimensionError, DomainError


# ----------------------------------------------------------------- gamma

def test_gamma_examples():
    assert gamma(1.0) == pytest.approx(1.0, rel=1e-14)
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert gamma(1.5) == pytest.approx(0.5 * math.sqrt(math.pi), rel=1e-13)


def test_gamma_matches_scipy_on_grid():
    x = np.concatenate([np.geomspace(1e-3, 1.0, 200), np.linspace(1.0, 30.0, 400)])
    ours = np.array([gamma(v) for v in x])
    assert np.max(np.abs(ours / sp_gamma(x) - 1.0)) <= 1e-12


@given(st.floats(min_value=0.05, max_value=29.0))
def test_gamma_recursion(x):
    assert gamma(x + 1.0) == pytest.approx(x * gamma(x), rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5, math.nan])
def test_gamma_domain(x):
    with pytest.raises(DomainError):
        gamma(x)


# ------------------------------------------------------------- constants

def test_sphere_areas_and_ball_volumes():
    assert [sphere_area(n) for n in (1, 2, 3)] == pytest.approx([2.0, 2 * math.pi, 4 * math.pi])
    assert [unit_ball_volume(n) for n in (1, 2, 3)] == pytest.approx([2.0, math.pi, 4 * math.pi / 3])
    with pytest.raises(DimensionError):
        sphere_area(4)


def test_c_ns_half_one_dimension():
    assert c_ns(1, 0.5) == pytest.approx(1.0 / math.pi, rel=1e-14)


@given(st.sampled_from([1, 2, 3]), st.floats(min_value=0.01, max_value=0.99))
def test_c_ns_matches_classical_form(n, s):
    # s 4^s Gamma((n+2s)/2) / (pi^{n/2} Gamma(1-s)) times (1-s)/(1-s), with scipy's Gamma
    ref = s * 4.0 ** s * sp_gamma(0.5 * n + s) / (math.pi ** (0.5 * n) * sp_gamma(1.0 - s))
    assert c_ns(n, s) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_c_ns_limits(n):
    w = sphere_area(n)
    assert abs(c_ns(n, 1e-4) / 1e-4 - 2.0 / w) <= 1e-3
    assert abs(c_ns(n, 1 - 1e-4) / 1e-4 - 4.0 * n / w) <= 1e-3


@pytest.mark.parametrize("n", [1, 2, 3])
def test_c_ns_first_order_expansion_near_zero(n):
    # c/s = (2/w) (1 + s (2 ln 2 + psi(n/2) - 1 + psi(2)) + O(s^2))
    w = sphere_area(n)
    slope = (2.0 / w) * (2 * math.log(2) + digamma(0.5 * n) - 1.0 + digamma(2.0))
    s = 1e-3
    assert c_ns(n, s) / s - 2.0 / w == pytest.approx(slope * s, rel=1e-2)


@pytest.mark.parametrize("s", [0.0, 1.0, -0.1, 1.5])
def test_c_ns_domain(s):
    with pytest.raises(DomainError):
        c_ns(1, s)


# ------------------------------------------------------------ eigen

def test_eigh_examples():
    sp = eigh_sym(np.eye(2))
    assert np.allclose(sp.eigenvalues, [1, 1]) and np.allclose(np.abs(sp.eigenvectors), np.eye(2))
    sp = eigh_sym(np.diag([2.0, 0.5]))
    assert np.allclose(sp.eigenvalues, [0.5, 2.0])
    sp = eigh_sym(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(sp.eigenvalues, [-1.0, 1.0], atol=1e-14)


sym_matrices = st.integers(min_value=1, max_value=3).flatmap(
    lambda n: st.lists(st.floats(-5, 5), min_size=n * n, max_size=n * n).map(
        lambda v, n=n: (lambda m: 0.5 * (m + m.T))(np.array(v).reshape(n, n))))


@settings(max_examples=200)
@given(sym_matrices)
def test_eigh_against_numpy(A):
    sp = eigh_sym(A)
    scale = max(1.0, float(np.linalg.norm(A, 2)))
    assert np.allclose(sp.eigenvalues, np.linalg.eigvalsh(A), atol=1e-12 * scale)
    assert np.all(np.diff(sp.eigenvalues) >= 0)
    O = sp.eigenvectors
    assert np.max(np.abs(O @ O.T - np.eye(len(A)))) <= 1e-12
    assert np.max(np.abs(sp.reconstruct() - A)) <= 1e-10 * scale


def test_eigh_deterministic_and_batched():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(50, 3, 3))
    A = m + np.swapaxes(m, -1, -2)
    a, b = eigh_sym(A), eigh_sym(A.copy())
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)
    assert np.allclose(a.eigenvalues, np.linalg.eigvalsh(A), atol=1e-12)


def test_operator_norm_examples():
    assert operator_norm(np.eye(2)) == pytest.approx(1.0)
    assert operator_norm(np.diag([0.5, 2.0])) == pytest.approx(2.0)
    assert operator_norm(np.array([[0.0, 1.0], [0.0, 0.0]])) == pytest.approx(1.0)


@given(st.lists(st.floats(-3, 3), min_size=9, max_size=9))
def test_operator_norm_matches_svd(v):
    A = np.array(v).reshape(3, 3)
    assert operator_norm(A) == pytest.approx(np.linalg.norm(A, 2), rel=1e-10, abs=1e-13)


def test_lipschitz_gap_examples():
    r = eigenvalue_lipschitz_gap(np.eye(2), np.eye(2))
    assert (r.max_eigenvalue_gap, r.norm_gap) == (0.0, 0.0)
    r = eigenvalue_lipschitz_gap(np.diag([1.0, 2.0]), np.diag([1.0, 2.5]))
    assert r.max_eigenvalue_gap == pytest.approx(0.5) and r.norm_gap == pytest.approx(0.5)
    r = eigenvalue_lipschitz_gap(np.eye(2), np.array([[1.0, 0.1], [0.1, 1.0]]))
    assert r.max_eigenvalue_gap == pytest.approx(0.1) and r.norm_gap == pytest.approx(0.1)
    with pytest.raises(DimensionError):
        eigenvalue_lipschitz_gap(np.eye(2), np.eye(3))


@given(sym_matrices, st.integers(0, 2 ** 31))
def test_lipschitz_gap_property(A, seed):
    E = np.random.default_rng(seed).normal(size=A.shape)
    r = eigenvalue_lipschitz_gap(A, A + 0.5 * (E + E.T))
    assert r.holds
    assert r.max_eigenvalue_gap <= r.norm_gap + 1e-10
