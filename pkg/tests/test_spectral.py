import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from nldiv.algebra import eigh_sym, operator_norm, sphere_area
from nldiv.errors import DimensionError, DomainError
from nldiv.spectral import (FIELD_CATALOGUE, HPerturbation, MatrixFieldA, MatrixFieldM,
                            build_M_field, build_N, check_structural, constant_field,
                            hyperellipsoid_integral, localized_field, mollify_A_field,
                            quadratic_H, recover_A, rotated_field, rotating_field, sigma_bounds,
                            sigma_from_lambda, smooth_field, sphere_rule, step_field)


def dense_sphere_integral(fun, n, m=400):
    """Independent product rule on S^{n-1}: quad on S^1, GL x trapezoid on S^2."""
    if n == 2:
        return quad(lambda t: fun(np.array([math.cos(t), math.sin(t)])), 0, 2 * math.pi,
                    epsabs=0, epsrel=1e-13, limit=400)[0]
    ct, wt = np.polynomial.legendre.leggauss(m)
    ph = (np.arange(2 * m) + 0.5) * math.pi / m
    st_ = np.sqrt(1 - ct ** 2)
    pts = np.stack([np.outer(st_, np.cos(ph)), np.outer(st_, np.sin(ph)),
                    np.outer(ct, np.ones_like(ph))], -1)
    return float(np.sum(wt[:, None] * (math.pi / m) * fun(pts)))


# ---------------------------------------------------------------- sigma

def test_sigma_examples():
    assert sigma_from_lambda([1.0, 1.0]) == pytest.approx([1.0, 1.0])
    assert sigma_from_lambda([2.0, 0.5]) == pytest.approx([1 / math.sqrt(2), math.sqrt(2)])
    s = sigma_from_lambda([1.0, 2.0, 4.0])
    assert s[0] == pytest.approx(math.sqrt(8 ** 0.2), rel=1e-12)
    assert s[0] == pytest.approx(1.23114, abs=1e-5)
    with pytest.raises(DomainError):
        sigma_from_lambda([1.0, 0.0])


@given(st.integers(1, 3).flatmap(lambda n: st.lists(st.floats(0.5, 2.0), min_size=n, max_size=n)))
def test_sigma_sandwich(lam):
    lo, hi = sigma_bounds(0.5, 2.0, len(lam))
    s = sigma_from_lambda(lam)
    assert np.all(s >= lo - 1e-14) and np.all(s <= hi + 1e-14)


def test_build_N_examples():
    assert np.allclose(build_N(np.eye(2)), np.eye(2))
    assert np.allclose(build_N(np.diag([2.0, 0.5])), np.diag([1 / math.sqrt(2), math.sqrt(2)]))
    N = build_N(np.array([[1.25, 0.75], [0.75, 1.25]]))
    assert np.allclose(N, [[1.06066, -0.35355], [-0.35355, 1.06066]], atol=1e-5)
    with pytest.raises(DomainError):
        build_N(np.diag([1.0, -1.0]))


def test_build_N_one_dimension_fast_path():
    a = np.array([0.3, 1.0, 2.5]).reshape(3, 1, 1)
    assert np.allclose(build_N(a).ravel(), a.ravel() ** (-1.0 / 3.0))


# ------------------------------------------------------- hyperellipsoid

def test_hyperellipsoid_examples():
    assert hyperellipsoid_integral([1.0, 1.0], 0) == pytest.approx(math.pi)
    assert hyperellipsoid_integral([1.0, 2.0], 0) == pytest.approx(math.pi / 2)
    assert hyperellipsoid_integral([1.0, 2.0], 1) == pytest.approx(math.pi / 8)


def _ellipsoid_integrand(sig, i):
    sig = np.asarray(sig)
    n = len(sig)
    return lambda p: p[..., i] ** 2 * np.sum((sig * p) ** 2, axis=-1) ** (-(n + 2) / 2)


@pytest.mark.parametrize("n", [2, 3])
def test_hyperellipsoid_against_dense_quadrature(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        sig = rng.uniform(0.5, 2.0, n)
        for i in range(n):
            ref = dense_sphere_integral(_ellipsoid_integrand(sig, i), n)
            assert hyperellipsoid_integral(sig, i) == pytest.approx(ref, rel=1e-8)


# ------------------------------------------------------------- sphere rule

@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("level", [1, 2])
def test_sphere_rule_moments(n, level):
    rule = sphere_rule(n, level)
    w = sphere_area(n)
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(w, abs=1e-10)
    assert np.allclose(np.linalg.norm(rule.nodes, axis=1), 1.0)
    second = np.einsum("q,qi,qj->ij", rule.weights, rule.nodes, rule.nodes)
    assert np.allclose(second, (w / n) * np.eye(n), atol=1e-12)


def test_sphere_rule_examples():
    r1 = sphere_rule(1, 5)
    assert np.array_equal(r1.nodes.ravel(), [-1.0, 1.0]) and np.array_equal(r1.weights, [1.0, 1.0])
    r2 = sphere_rule(2, 1)
    assert len(r2.weights) == 128 and np.allclose(r2.weights, 2 * math.pi / 128)
    assert r2.integrate(r2.nodes[:, 0] ** 2) == pytest.approx(math.pi, abs=1e-12)
    with pytest.raises(DomainError):
        sphere_rule(2, 0)
    with pytest.raises(DimensionError):
        sphere_rule(4, 1)


def test_sphere_rule_degree_eight():
    rule = sphere_rule(3, 2)
    p = rule.nodes
    # int x^a y^b z^c over S^2 = 2 prod Gamma((k+1)/2) / Gamma((a+b+c+3)/2)
    ref = 2 * math.gamma(2.5) * math.gamma(1.5) * math.gamma(1.5) / math.gamma(5.5)
    assert rule.integrate(p[:, 0] ** 4 * p[:, 1] ** 2 * p[:, 2] ** 2) == pytest.approx(ref, abs=1e-9)


# ------------------------------------------------------------- recover A

def test_recover_examples():
    rule = sphere_rule(2, 2)
    assert np.allclose(recover_A(np.eye(2), rule), np.eye(2), atol=1e-12)
    assert np.allclose(recover_A(np.diag([1 / math.sqrt(2), math.sqrt(2)]), rule),
                       np.diag([2.0, 0.5]), atol=1e-10)
    with pytest.raises(DomainError):
        recover_A(np.zeros((2, 2)), rule)
    with pytest.raises(DimensionError):
        recover_A(np.eye(3), rule)


@pytest.mark.parametrize("n", [2, 3])
def test_round_trip_random_spd(n):
    rng = np.random.default_rng(10 + n)
    rule = sphere_rule(n, 2)
    for _ in range(100):
        A = rotated_field(rng.uniform(0.5, 2.0, n), rng.uniform(0, 2 * math.pi, 3)).constant
        assert operator_norm(recover_A(build_N(A), rule) - A) <= 1e-6


def test_round_trip_one_dimension():
    rule = sphere_rule(1)
    a = np.array([[0.7]])
    assert recover_A(build_N(a), rule) == pytest.approx(a, rel=1e-13)


# ----------------------------------------------------------- build M

def test_build_M_constant_fields():
    M = build_M_field(constant_field(np.eye(2)))
    x = np.random.default_rng(0).normal(size=(20, 2))
    assert np.allclose(M(x, x[::-1]), np.eye(2))
    M = build_M_field(constant_field(np.diag([2.0, 0.5])))
    assert np.allclose(M(x, x[::-1]), np.diag([1 / math.sqrt(2), math.sqrt(2)]))


def test_build_M_with_H():
    M = build_M_field(constant_field(np.eye(2)), quadratic_H(2))
    y = np.array([[0.3, 0.4], [2.0, 0.0], [0.0, 0.0]])
    expect = 1.0 + np.minimum(np.sum(y * y, -1), 1.0)
    assert np.allclose(M(np.zeros((3, 2)), y), expect[:, None, None] * np.eye(2))
    assert np.allclose(M.at_origin(np.ones(2)), np.eye(2))


def test_H_checks():
    H = quadratic_H(2, 0.5)
    assert H.check(np.random.default_rng(1).normal(size=(200, 2))) == 0.0
    bad = HPerturbation(1, lambda y: (y[..., 0] ** 3)[..., None, None], 10.0)
    assert bad.check(np.array([[0.5], [1.0]])) > 0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_structural_identity_of_built_fields(n):
    rng = np.random.default_rng(n)
    fields = [localized_field(n), smooth_field(n)] + ([rotating_field(n)] if n > 1 else [])
    for A in fields:
        for H in (None, quadratic_H(n, 0.3)):
            M = build_M_field(A, H)
            xs, ys, xis = (rng.normal(size=(1000, n)) for _ in range(3))
            rep = check_structural(M, xs, ys, xis)
            assert rep.ok(1e-10), (A.name, rep)


def test_structural_detects_asymmetric_field():
    def func(x, y):
        out = np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2)).copy()
        out[..., 0, 1] += 0.1 * np.tanh(x[..., 0])
        return out

    M = MatrixFieldM(2, func, 1.2, 0.8)
    rng = np.random.default_rng(2)
    rep = check_structural(M, rng.normal(size=(200, 2)), rng.normal(size=(200, 2)),
                           rng.normal(size=(200, 2)))
    assert rep.structural_violation > 1e-3
    assert check_structural(MatrixFieldM.identity(2), *(rng.normal(size=(50, 2)),) * 3).ok(0.0)


def test_A_field_bounds_check():
    A = rotating_field(2)
    ok, lo, hi = A.check_bounds(np.random.default_rng(0).normal(size=(100, 2)))
    assert ok and lo >= 0.5 - 1e-12 and hi <= 2.0 + 1e-12


def test_field_catalogue_builds():
    for name, make in FIELD_CATALOGUE.items():
        n = 2
        A = make(n)
        assert isinstance(A, MatrixFieldA) and A(np.zeros(n)).shape == (n, n)


# ----------------------------------------------------------- mollifier

def test_mollify_constant_is_fixed_point():
    A = constant_field(np.array([[1.5, 0.2], [0.2, 0.8]]))
    Al = mollify_A_field(A, 4)
    x = np.random.default_rng(0).normal(size=(30, 2))
    assert np.allclose(Al(x), A(x), atol=1e-12)


def test_mollify_step_field_one_dimension():
    A = step_field(1)
    Al = mollify_A_field(A, 4)
    x = np.linspace(-1, 1, 401)[:, None]
    v = Al(x).ravel()
    assert np.all(v >= 1 - 1e-12) and np.all(v <= 2 + 1e-12)
    assert np.allclose(v[np.abs(x.ravel()) >= 0.25], np.where(x.ravel() < 0, 1.0, 2.0)[np.abs(x.ravel()) >= 0.25])
    assert np.all(np.diff(v) >= -1e-12)
    # closed form: (1 + 2) / 2 at the jump, and the bump CDF elsewhere
    assert Al(np.zeros((1, 1))).item() == pytest.approx(1.5, abs=1e-12)
    t = 0.1 * 4
    cdf = 0.5 + (15 / 16) * (t - 2 * t ** 3 / 3 + t ** 5 / 5)
    assert Al(np.array([[0.1]])).item() == pytest.approx(1.0 + cdf, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_mollify_preserves_eigenvalue_bounds(n):
    rng = np.random.default_rng(5)
    for A in ([step_field(n), smooth_field(n, 0.8, 3.0)] + ([rotating_field(n)] if n > 1 else [])):
        Al = mollify_A_field(A, 2)
        lam = eigh_sym(Al(rng.uniform(-2, 2, (100, n)))).eigenvalues
        assert lam.min() >= A.lower - 1e-9 and lam.max() <= A.upper + 1e-9
