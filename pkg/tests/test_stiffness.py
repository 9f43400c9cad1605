import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import eigh as sp_eigh

from nldiv.errors import AssemblyError, DimensionError, DomainError
from nldiv.kernel import KernelSpec
from nldiv.spectral import MatrixFieldM, build_M_field, localized_field
from nldiv.stiffness import DiscreteFunction, Mesh, assemble_stiffness, gagliardo_seminorm


def hat_seminorm_fourier(s):
    """[u]_s for u(x) = (1 - |x|)_+ via c int int |u(x)-u(z)|^2 / |x-z|^{1+2s} = (1/pi) int |xi|^{2s} |u^|^2."""
    f = lambda xi: xi ** (2 * s) * (2 * (1 - math.cos(xi)) / xi ** 2) ** 2
    total = sum(quad(f, a, b, epsabs=0, epsrel=1e-12, limit=400)[0]
                for a, b in [(0, 1), (1, 50), (50, 1000)])
    total += quad(f, 1000, math.inf, limit=400)[0]
    # the full line integral is twice the half line; (2 pi)^{-1} normalisation, times 2 for c/2
    return math.sqrt(2 * 2 * total / (2 * math.pi))


def test_mesh_basics():
    m = Mesh(-1.0, 1.0, 8)
    assert m.h == 0.25 and m.ndof == 7 and m.diameter == 2.0
    assert np.allclose(m.mass_matrix().sum(), 2.0 - 4.0 * m.h / 3.0)
    with pytest.raises(DimensionError):
        Mesh(-1, 1, 8, n=2)
    with pytest.raises(DomainError):
        Mesh(1, -1, 8)


def test_discrete_function_evaluation():
    m = Mesh(-1.0, 1.0, 4)
    u = DiscreteFunction(m, [1.0, 2.0, 1.0])
    assert u(np.array([-2.0, -0.75, 0.0, 1.0])) == pytest.approx([0.0, 0.5, 2.0, 0.0])
    assert u.max_norm() == 2.0
    with pytest.raises(DimensionError):
        DiscreteFunction(m, [1.0, 2.0])


def test_seminorm_examples():
    m = Mesh(-1.0, 1.0, 64)
    assert gagliardo_seminorm(DiscreteFunction.zeros(m), 0.3) == 0.0
    u = DiscreteFunction.interpolate(m, lambda x: np.maximum(1 - np.abs(x), 0))
    base = gagliardo_seminorm(u, 0.3)
    assert gagliardo_seminorm(-2.5 * u, 0.3) == pytest.approx(2.5 * base, rel=1e-12)
    assert base == pytest.approx(hat_seminorm_fourier(0.3), rel=1e-3)


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_toeplitz_and_quadrature_agree(s):
    mesh = Mesh(-1.0, 1.0, 16)
    K = KernelSpec(MatrixFieldM.identity(1), s)
    a = assemble_stiffness(K, mesh, method="toeplitz").matrix
    b = assemble_stiffness(K, mesh, method="quadrature").matrix
    assert np.max(np.abs(a - b)) <= 1e-7 * np.max(np.abs(a))


def test_stiffness_symmetric_positive_definite():
    mesh = Mesh(-1.0, 1.0, 24)
    for rho in (math.inf, 0.5):
        K = KernelSpec(build_M_field(localized_field(1)), 0.6, rho)
        S = assemble_stiffness(K, mesh)
        assert np.array_equal(S.matrix, S.matrix.T)
        assert np.linalg.eigvalsh(S.matrix).min() > 0
        assert S.cert_error <= 1e-6
        one = np.ones(mesh.ndof)
        assert one @ S.matrix @ one > 0


def test_fractional_poincare_first_eigenvalue():
    K = KernelSpec(MatrixFieldM.identity(1), 0.5)
    lams = []
    for N in (32, 64, 128):
        mesh = Mesh(-1.0, 1.0, N)
        S = assemble_stiffness(K, mesh).matrix
        # S is the weak form of (-Delta)^{1/2}, so its eigenvalues relative to the mass matrix
        lams.append(sp_eigh(S, mesh.mass_matrix(), eigvals_only=True)[0])
    assert min(lams) > 1.1
    # first Dirichlet eigenvalue of (-Delta)^{1/2} on (-1, 1) is 1.1577738...
    assert lams[-1] == pytest.approx(1.1577738, rel=1e-2)
    assert lams[0] >= lams[1] >= lams[2]


def test_energy_refinement_self_consistency():
    K = KernelSpec(build_M_field(localized_field(1)), 0.4)
    f = lambda x: np.cos(0.5 * math.pi * x)
    e = []
    for N in (16, 32, 64):
        mesh = Mesh(-1.0, 1.0, N)
        e.append(assemble_stiffness(K, mesh).energy(DiscreteFunction.interpolate(mesh, f)))
    d1, d2 = abs(e[1] - e[0]), abs(e[2] - e[1])
    assert d2 < d1 and d2 <= 2.0 / 64


def test_assembly_errors():
    mesh = Mesh(-1.0, 1.0, 16)
    with pytest.raises(DomainError):
        assemble_stiffness(KernelSpec(MatrixFieldM.identity(1), 0.5, rho=0.1), mesh)
    with pytest.raises(DomainError):
        assemble_stiffness(KernelSpec(MatrixFieldM.identity(1), 0.5, rho=1.0), mesh, method="toeplitz")
    with pytest.raises(AssemblyError) as exc:
        assemble_stiffness(KernelSpec(build_M_field(localized_field(1)), 0.9), mesh, order=2,
                           tol_asm=1e-15)
    assert exc.value.achieved > 1e-15


def test_norm_equivalence_probe_finite_horizon():
    mesh = Mesh(-1.0, 1.0, 32)
    rng = np.random.default_rng(0)
    s = 0.4
    K = KernelSpec(build_M_field(localized_field(1)), s, rho=0.5)
    S = assemble_stiffness(K, mesh).matrix
    S_id = assemble_stiffness(KernelSpec(MatrixFieldM.identity(1), s), mesh).matrix
    ratios = []
    for _ in range(100):
        u = rng.normal(size=mesh.ndof)
        ratios.append((u @ S_id @ u) / (u @ S @ u))
    # empirical constant for this configuration
    assert max(ratios) <= 5.0
    assert np.isfinite(ratios).all()
