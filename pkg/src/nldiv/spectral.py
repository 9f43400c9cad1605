"""Correspondence between elliptic matrix fields A(x) and kernel-modulating
fields M(x, y).

Given A, the matrix N_A = O diag(sigma) O^T with
sigma_i = sqrt(prod(lambda)^{1/(n+2)} / lambda_i) satisfies

    A_ij = n / |S^{n-1}| * int_{S^{n-1}} psi_i psi_j / |N_A psi|^{n+2} dH(psi),

and M(x, y) = (N_{A(x)} + N_{A(x+y)}) / 2 + H(y) is a modulating field whose
local limit is A.  ``recover_A`` evaluates the sphere integral by
quadrature; ``hyperellipsoid_integral`` gives the closed form used to check
it.
"""
from dataclasses import dataclass
import math
from typing import Callable, Optional

import numpy as np

from .algebra import as_sym, check_dimension, eigh_sym, gamma, operator_norm, sphere_area
from .errors import DimensionError, DomainError


def _points(x, n):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != n:
        if n == 1:
            x = x[..., None]
        else:
            raise DimensionError(f"points must have trailing dimension {n}, got {x.shape}")
    return x


@dataclass(frozen=True)
class MatrixFieldA:
    """Symmetric elliptic field x -> A(x) with eigenvalues in [lower, upper].

    ``func`` maps points of shape (..., n) to matrices (..., n, n).
    ``constant`` is set for spatially constant fields, ``lipschitz`` when a
    Lipschitz bound is known, ``jumps`` lists x_1-positions of
    discontinuity hyperplanes (used by the mollifier) and ``at_infinity`` is
    the limit matrix of A(x) as |x| grows, when it exists.
    """

    n: int
    func: Callable
    lower: float
    upper: float
    name: str = "custom"
    constant: Optional[np.ndarray] = None
    lipschitz: Optional[float] = None
    jumps: tuple = ()
    at_infinity: Optional[np.ndarray] = None

    def __call__(self, x):
        return np.asarray(self.func(_points(x, self.n)), dtype=float)

    def check_bounds(self, points, slack=1e-12):
        lam = eigh_sym(self(points)).eigenvalues
        low = float(np.min(lam))
        high = float(np.max(lam))
        return low >= self.lower - slack and high <= self.upper + slack, low, high


@dataclass(frozen=True)
class HPerturbation:
    """Even, positive semidefinite, bounded perturbation with H(0) = 0."""

    n: int
    func: Callable
    bound: float = 0.0
    name: str = "custom"
    even: bool = False

    def __call__(self, y):
        return np.asarray(self.func(_points(y, self.n)), dtype=float)

    @classmethod
    def zero(cls, n):
        return cls(n, lambda y: np.zeros(y.shape[:-1] + (n, n)), 0.0, "zero", even=True)

    def check(self, samples):
        """Return the largest violation of H(0) = 0, evenness, PSD and the bound."""
        ys = _points(samples, self.n)
        origin = float(np.max(np.abs(self(np.zeros(self.n)))))
        even = float(np.max(np.abs(self(ys) - self(-ys))))
        lam = eigh_sym(self(ys)).eigenvalues
        psd = float(max(0.0, -np.min(lam)))
        over = float(max(0.0, np.max(operator_norm(self(ys))) - self.bound))
        return max(origin, even, psd, over)


@dataclass(frozen=True)
class MatrixFieldM:
    """Modulating field (x, y) -> M(x, y) with beta|xi| <= |M(x-y,y) xi| <= alpha|xi|.

    Optional metadata: ``lipschitz`` (C_M), ``constant`` (a fixed matrix),
    ``at_infinity`` (callable (x, psi) -> lim_t M(x - t psi, t psi)) and
    ``structural``, set when M(x - y, y) = M(x, -y) holds by construction, so
    that the kernel is symmetric and one orientation suffices.
    """

    n: int
    func: Callable
    alpha: float
    beta: float
    lipschitz: Optional[float] = None
    constant: Optional[np.ndarray] = None
    at_infinity: Optional[Callable] = None
    name: str = "custom"
    structural: bool = False

    def __post_init__(self):
        if not self.alpha >= self.beta > 0:
            raise DomainError(f"need alpha >= beta > 0, got alpha={self.alpha}, beta={self.beta}")

    def __call__(self, x, y):
        x = _points(x, self.n)
        y = _points(y, self.n)
        x, y = np.broadcast_arrays(x, y)
        return np.asarray(self.func(x, y), dtype=float)

    def at_origin(self, x):
        x = _points(x, self.n)
        return self(x, np.zeros_like(x))

    @classmethod
    def from_matrix(cls, matrix, name="constant"):
        m = np.atleast_2d(np.asarray(matrix, dtype=float))
        n = m.shape[0]
        sv = np.sqrt(np.maximum(eigh_sym(m.T @ m).eigenvalues, 0.0))
        if sv[0] <= 0.0:
            raise DomainError("constant modulating matrix must be nonsingular")

        def func(x, y, m=m):
            return np.broadcast_to(m, x.shape[:-1] + (n, n)).copy()

        return cls(n, func, float(sv[-1]), float(sv[0]), lipschitz=0.0, constant=m,
                   at_infinity=lambda x, psi, m=m: np.broadcast_to(m, np.broadcast_shapes(
                       np.shape(x)[:-1], np.shape(psi)[:-1]) + (n, n)).copy(),
                   name=name, structural=True)

    @classmethod
    def identity(cls, n):
        return cls.from_matrix(np.eye(n), name="identity")


def sigma_from_lambda(lam):
    """sigma_i = sqrt(prod(lambda)^{1/(n+2)} / lambda_i); stacked input allowed."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0.0):
        raise DomainError("all eigenvalues must be positive")
    n = lam.shape[-1]
    log_bar = np.sum(np.log(lam), axis=-1, keepdims=True)
    return np.sqrt(np.exp(log_bar / (n + 2)) / lam)


def sigma_bounds(lower, upper, n):
    """Sandwich bounds on every sigma_i for eigenvalues in [lower, upper]."""
    low = lower ** (n / (2.0 * (n + 2))) / math.sqrt(upper)
    high = upper ** (n / (2.0 * (n + 2))) / math.sqrt(lower)
    return low, high


def build_N(A):
    """N_A = O diag(sigma) O^T for symmetric positive definite A (stackable)."""
    A = as_sym(A)
    if A.shape[-1] == 1:
        if np.any(A <= 0.0):
            raise DomainError("build_N needs a positive definite matrix")
        # sigma = sqrt(lambda^{1/3} / lambda)
        return A ** (-1.0 / 3.0)
    spec = eigh_sym(A)
    if np.any(spec.eigenvalues <= 0.0):
        raise DomainError("build_N needs a positive definite matrix")
    sig = sigma_from_lambda(spec.eigenvalues)
    O = spec.eigenvectors
    return np.einsum("...ik,...k,...jk->...ij", O, sig, O)


def hyperellipsoid_integral(sigma, i):
    """Closed form of int_{S^{n-1}} phi_i^2 (sum_k sigma_k^2 phi_k^2)^{-(n+2)/2} dH.

    ``i`` is a zero-based index.  The value is V / sigma_i^2 where
    V = pi^{n/2} / (Gamma((n+2)/2) prod(sigma)) is the volume of the
    ellipsoid with semiaxes 1/sigma_k.
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0.0):
        raise DomainError("semiaxis parameters must be positive")
    n = sigma.shape[-1]
    vol = math.pi ** (n / 2.0) / (gamma((n + 2.0) / 2.0) * np.prod(sigma, axis=-1))
    return vol / sigma[..., i] ** 2


@dataclass(frozen=True)
class SphereRule:
    n: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values):
        """Sum over the leading node axis of ``values`` (shape (m, ...))."""
        return np.tensordot(self.weights, values, axes=(0, 0))


def sphere_rule(n, level=1):
    """Quadrature on S^{n-1}.

    n = 1: the two points {-1, +1} with unit weights.
    n = 2: equiangular trapezoid rule with 64 * 2**level nodes.
    n = 3: Gauss-Legendre in cos(theta) (16 * 2**level nodes) times a
    trapezoid rule in the azimuth (32 * 2**level nodes).
    """
    check_dimension(n)
    if level < 1:
        raise DomainError("level must be >= 1")
    if n == 1:
        return SphereRule(1, np.array([[-1.0], [1.0]]), np.array([1.0, 1.0]))
    if n == 2:
        m = 64 * 2 ** level
        t = 2.0 * math.pi * np.arange(m) / m
        nodes = np.stack([np.cos(t), np.sin(t)], axis=-1)
        return SphereRule(2, nodes, np.full(m, 2.0 * math.pi / m))
    m_t = 16 * 2 ** level
    m_p = 32 * 2 ** level
    ct, wt = np.polynomial.legendre.leggauss(m_t)
    ph = 2.0 * math.pi * np.arange(m_p) / m_p
    st = np.sqrt(1.0 - ct * ct)
    nodes = np.stack([
        np.outer(st, np.cos(ph)),
        np.outer(st, np.sin(ph)),
        np.outer(ct, np.ones(m_p)),
    ], axis=-1).reshape(-1, 3)
    weights = np.outer(wt, np.full(m_p, 2.0 * math.pi / m_p)).ravel()
    return SphereRule(3, nodes, weights)


def recover_A(N, rule):
    """A_ij = (n/omega) sum_q w_q psi_i psi_j / |N psi_q|^{n+2}.

    ``N`` may be a stack of matrices (..., n, n).
    """
    N = np.asarray(N, dtype=float)
    n = rule.n
    if N.shape[-2:] != (n, n):
        raise DimensionError(f"matrix shape {N.shape} does not match rule dimension {n}")
    smin = np.sqrt(np.maximum(eigh_sym(np.swapaxes(N, -1, -2) @ N).eigenvalues[..., 0], 0.0))
    if np.any(smin <= 1e-14 * np.maximum(1.0, operator_norm(N))):
        raise DomainError("recover_A needs a nonsingular modulating matrix")
    psi = rule.nodes
    Npsi = np.einsum("...ij,qj->...qi", N, psi)
    inv = np.sum(Npsi * Npsi, axis=-1) ** (-(n + 2) / 2.0)
    w = rule.weights * inv
    A = np.einsum("...q,qi,qj->...ij", w, psi, psi) * (n / sphere_area(n))
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def build_M_field(A, H=None):
    """M(x, y) = (N_{A(x)} + N_{A(x+y)}) / 2 + H(y).

    The returned field carries alpha = sigma_high + C_H and beta = sigma_low,
    where sigma_low/high bound every sigma_i given the eigenvalue bounds of A.
    """
    n = A.n
    H = HPerturbation.zero(n) if H is None else H
    if H.n != n:
        raise DimensionError("A and H dimensions differ")
    if not 0.0 < A.lower <= A.upper:
        raise DomainError("A must have 0 < lower <= upper eigenvalue bounds")
    s_low, s_high = sigma_bounds(A.lower, A.upper, n)
    alpha = s_high + H.bound
    beta = s_low

    if A.constant is not None:
        N0 = build_N(A.constant)

        def n_of(x):
            return np.broadcast_to(N0, x.shape[:-1] + (n, n))
    else:
        def n_of(x):
            return build_N(A(x))

    def func(x, y):
        return 0.5 * (n_of(x) + n_of(x + y)) + H(y)

    constant = None
    at_inf = None
    lip = None
    if A.lipschitz is not None:
        rng = np.random.default_rng(12345)
        box = rng.uniform(-3.0, 3.0, size=(400, n))
        ys = rng.uniform(-1.5, 1.5, size=(400, n))
        probe = MatrixFieldM(n, func, alpha, beta)
        lip = estimate_lipschitz(probe, box, ys, rng=rng)
    if A.constant is not None and H.name == "zero":
        constant = build_N(A.constant)
        at_inf = lambda x, psi, c=constant: np.broadcast_to(
            c, np.broadcast_shapes(np.shape(x)[:-1], np.shape(psi)[:-1]) + (n, n)).copy()
    elif A.at_infinity is not None and H.name == "zero":
        # M(x - t psi, t psi) = (N_{A(x - t psi)} + N_{A(x)}) / 2 -> (N_inf + N_{A(x)}) / 2
        n_inf = build_N(np.asarray(A.at_infinity, dtype=float))

        def at_inf(x, psi):
            x = _points(x, n)
            shape = np.broadcast_shapes(x.shape[:-1], np.shape(psi)[:-1]) + (n, n)
            return np.broadcast_to(0.5 * (n_inf + n_of(x)), shape).copy()
    return MatrixFieldM(n, func, alpha, beta, lipschitz=0.0 if constant is not None else lip,
                        constant=constant, at_infinity=at_inf, name=f"M[{A.name}]",
                        structural=H.name == "zero" or H.even)


@dataclass(frozen=True)
class StructuralReport:
    bound_violation: float
    structural_violation: float

    def ok(self, tol=1e-10):
        return self.bound_violation <= tol and self.structural_violation <= tol


def check_structural(M, xs, ys, xis):
    """Largest violations of the two-sided bound and of M(x-y, y) = M(x, -y)."""
    xs = _points(xs, M.n)
    ys = _points(ys, M.n)
    xis = _points(xis, M.n)
    lhs = M(xs - ys, ys)
    rhs = M(xs, -ys)
    mx = np.linalg.norm(np.einsum("...ij,...j->...i", lhs, xis), axis=-1)
    nx = np.linalg.norm(xis, axis=-1)
    nx_safe = np.where(nx > 0, nx, 1.0)
    bound = np.maximum(M.beta * nx - mx, mx - M.alpha * nx) / nx_safe
    struct = operator_norm(lhs - rhs)
    return StructuralReport(float(max(0.0, np.max(bound))), float(np.max(struct)))


def estimate_lipschitz(M, xs, ys, step=1e-5, rng=None):
    """Finite-difference estimate of the Lipschitz constant of M in (x, y)."""
    rng = np.random.default_rng(0) if rng is None else rng
    xs = _points(xs, M.n)
    ys = _points(ys, M.n)
    d = rng.normal(size=xs.shape[:-1] + (2 * M.n,))
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    dx, dy = d[..., :M.n], d[..., M.n:]
    diff = M(xs + step * dx, ys + step * dy) - M(xs - step * dx, ys - step * dy)
    return float(np.max(operator_norm(diff)) / (2.0 * step))


def bump_normalisation(n):
    """int_{B_1} (1 - |x|^2)^2 dx."""
    return sphere_area(n) * (1.0 / n - 2.0 / (n + 2) + 1.0 / (n + 4))


def _transverse_rule(n, order):
    # rule on the (n-1)-ball for the weight (1 - |u|^2)^2; a single empty node when n = 1
    t, w = np.polynomial.legendre.leggauss(order)
    if n == 1:
        return np.zeros((1, 0)), np.ones(1)
    if n == 2:
        return t[:, None], w * (1.0 - t * t) ** 2
    r = 0.5 * (t + 1.0)
    m = 2 * order
    ph = 2.0 * math.pi * np.arange(m) / m
    nodes = np.stack([np.outer(r, np.cos(ph)), np.outer(r, np.sin(ph))], axis=-1).reshape(-1, 2)
    weights = np.outer(0.5 * w * r * (1.0 - r * r) ** 2, np.full(m, 2.0 * math.pi / m)).ravel()
    return nodes, weights


def _bump_gradient_mass(n):
    # int |grad b| for the unit-mass bump b(x) = (1 - |x|^2)^2 / bump_normalisation(n)
    t, w = np.polynomial.legendre.leggauss(64)
    r = 0.5 * (t + 1.0)
    return sphere_area(n) * float(np.sum(0.5 * w * 4.0 * r * (1.0 - r * r) * r ** (n - 1))) / bump_normalisation(n)


def mollify_A_field(A, ell, order=None, chunk=20000):
    """Entrywise convolution of A with the bump c (1 - |x/eps|^2)_+^2, eps = 1/ell.

    The bump integral is written as an integral over t_1 in [-1, 1] and a
    transverse (n-1)-ball.  The t_1 range is split at every jump hyperplane
    x_1 = b listed in ``A.jumps`` so that piecewise smooth fields are
    integrated with full Gauss accuracy.  Weights are normalised discretely,
    which keeps A_eps(x) an exact convex combination of values of A.
    """
    if ell < 1:
        raise DomainError("smoothing index ell must be >= 1")
    if A.constant is not None:
        return A
    n = A.n
    order = order if order is not None else (16 if n == 1 else 12)
    eps = 1.0 / ell
    tau, wtau = np.polynomial.legendre.leggauss(order)
    u_nodes, u_weights = _transverse_rule(n, order)
    jumps = np.asarray(A.jumps, dtype=float)

    def block(xb):
        P = xb.shape[0]
        if len(jumps):
            cuts = np.clip((xb[:, :1] - jumps[None, :]) / eps, -1.0, 1.0)
            edges = np.sort(np.concatenate([-np.ones((P, 1)), cuts, np.ones((P, 1))], axis=1), axis=1)
        else:
            edges = np.broadcast_to(np.array([-1.0, 1.0]), (P, 2))
        lo, hi = edges[:, :-1, None], edges[:, 1:, None]
        t1 = (lo + 0.5 * (hi - lo) * (tau + 1.0)).reshape(P, -1)
        w1 = (0.5 * (hi - lo) * wtau).reshape(P, -1)
        rho1 = np.sqrt(np.maximum(1.0 - t1 * t1, 0.0))
        w1 = w1 * rho1 ** (n + 3)
        if n == 1:
            W = w1 / w1.sum(axis=1, keepdims=True)
            vals = A(xb[:, None, :] - eps * t1[:, :, None])
            return np.sum(W[:, :, None, None] * vals, axis=1)
        offs = np.concatenate([
            np.broadcast_to(t1[:, :, None, None], t1.shape + (len(u_weights), 1)),
            rho1[:, :, None, None] * u_nodes[None, None, :, :],
        ], axis=-1)
        pts = xb[:, None, None, :] - eps * offs
        W = w1[:, :, None] * u_weights[None, None, :]
        W = W / W.sum(axis=(1, 2), keepdims=True)
        return np.einsum("ptu,ptuij->pij", W, A(pts))

    def func(x):
        shape = x.shape[:-1]
        flat = x.reshape(-1, n)
        out = np.concatenate([block(flat[i:i + chunk]) for i in range(0, len(flat), chunk)]) \
            if len(flat) else np.zeros((0, n, n))
        return out.reshape(shape + (n, n))

    # |A_eps(x) - A_eps(x')| <= (upper - lower)/2 * |x - x'| * ell * int |grad bump|
    lip = 0.5 * (A.upper - A.lower) * ell * _bump_gradient_mass(n)
    if A.lipschitz is not None:
        lip = min(lip, A.lipschitz)
    return MatrixFieldA(n, func, A.lower, A.upper, name=f"{A.name}*bump[{ell}]", lipschitz=lip,
                        at_infinity=A.at_infinity)


# ---------------------------------------------------------------- catalogue

def constant_field(matrix, name="constant"):
    m = as_sym(np.atleast_2d(matrix))
    lam = eigh_sym(m).eigenvalues
    if lam[0] <= 0.0:
        raise DomainError("constant field must be positive definite")
    n = m.shape[0]
    return MatrixFieldA(n, lambda x, m=m: np.broadcast_to(m, x.shape[:-1] + (n, n)).copy(),
                        float(lam[0]), float(lam[-1]), name=name, constant=m, lipschitz=0.0)


def rotation_matrix(n, angles):
    """Rotation from angles: one angle in 2D, three Euler angles (z-y-z) in 3D."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if n == 1:
        return np.eye(1)
    if n == 2:
        c, s = math.cos(angles[0]), math.sin(angles[0])
        return np.array([[c, -s], [s, c]])
    a, b, g = (list(angles) + [0.0, 0.0, 0.0])[:3]

    def rz(t):
        return np.array([[math.cos(t), -math.sin(t), 0.0], [math.sin(t), math.cos(t), 0.0], [0, 0, 1.0]])

    ry = np.array([[math.cos(b), 0.0, math.sin(b)], [0.0, 1.0, 0.0], [-math.sin(b), 0.0, math.cos(b)]])
    return rz(a) @ ry @ rz(g)


def rotated_field(eigenvalues, angles=0.0, name="rotated"):
    lam = np.asarray(eigenvalues, dtype=float)
    R = rotation_matrix(len(lam), angles)
    return constant_field(R @ np.diag(lam) @ R.T, name=name)


def identity_field(n):
    return constant_field(np.eye(n), name="identity")


def anisotropic_diag_field(n, values=None):
    values = np.asarray(values if values is not None else [2.0, 0.5, 1.0][:n], dtype=float)
    if values.shape != (n,):
        raise DimensionError("need one diagonal entry per dimension")
    return constant_field(np.diag(values), name="anisotropic-diag")


def rotating_field(n, lam=(2.0, 0.5), frequency=1.0):
    """A(x) = R(frequency * x_1) diag(lam) R^T in the (x_1, x_2) plane (n >= 2)."""
    if n < 2:
        raise DimensionError("rotating-field needs n >= 2")
    l1, l2 = lam
    extra = np.ones(n - 2)

    def func(x):
        t = frequency * x[..., 0]
        c, s = np.cos(t), np.sin(t)
        out = np.zeros(x.shape[:-1] + (n, n))
        out[..., 0, 0] = l1 * c * c + l2 * s * s
        out[..., 1, 1] = l1 * s * s + l2 * c * c
        out[..., 0, 1] = out[..., 1, 0] = (l1 - l2) * c * s
        for k in range(2, n):
            out[..., k, k] = extra[k - 2]
        return out

    vals = [l1, l2] + ([1.0] if n > 2 else [])
    return MatrixFieldA(n, func, min(vals), max(vals), name="rotating-field",
                        lipschitz=abs(l1 - l2) * abs(frequency))


def smooth_field(n, amplitude=0.5, frequency=1.0):
    """A(x) = (1 + amplitude sin(frequency * x_1)) Id."""
    if not 0.0 <= amplitude < 1.0:
        raise DomainError("amplitude must lie in [0, 1)")

    def func(x):
        a = 1.0 + amplitude * np.sin(frequency * x[..., 0])
        return a[..., None, None] * np.eye(n)

    return MatrixFieldA(n, func, 1.0 - amplitude, 1.0 + amplitude, name="smooth-field",
                        lipschitz=amplitude * abs(frequency))


def localized_field(n, amplitude=0.5):
    """A(x) = Id + amplitude exp(-|x|^2) D with D = diag(1, -1/2, 1/2).

    The anisotropic modulation decays at infinity, so M(x + r psi, -r psi)
    has a limit as r grows.
    """
    if not 0.0 <= amplitude < 2.0:
        raise DomainError("amplitude must lie in [0, 2)")
    D = np.diag([1.0, -0.5, 0.5][:n])

    def func(x):
        e = np.exp(-np.sum(x * x, axis=-1))
        return np.eye(n) + amplitude * e[..., None, None] * D

    lam = [1.0 + amplitude] + ([1.0 - 0.5 * amplitude] if n > 1 else [1.0])
    return MatrixFieldA(n, func, min(lam), max(lam), name="localized-field",
                        lipschitz=amplitude * math.sqrt(2.0) * math.exp(-0.5),
                        at_infinity=np.eye(n))


def step_field(n, low=1.0, high=2.0):
    """A(x) = low * Id for x_1 < 0 and high * Id for x_1 >= 0."""

    def func(x):
        a = np.where(x[..., 0] < 0.0, low, high)
        return a[..., None, None] * np.eye(n)

    return MatrixFieldA(n, func, min(low, high), max(low, high), name="step-field", jumps=(0.0,))


def quadratic_H(n, bound=1.0):
    """H(y) = min(|y|^2, 1) * bound * Id: even, PSD, H(0) = 0."""

    def func(y):
        r2 = np.minimum(np.sum(y * y, axis=-1), 1.0)
        return bound * r2[..., None, None] * np.eye(n)

    return HPerturbation(n, func, bound, name="quadratic", even=True)


FIELD_CATALOGUE = {
    "identity": lambda n, **kw: identity_field(n),
    "anisotropic-diag": lambda n, **kw: anisotropic_diag_field(n, kw.get("values")),
    "rotating-field": lambda n, **kw: rotating_field(n, **{k: v for k, v in kw.items() if k in ("lam", "frequency")}),
    "smooth-field": lambda n, **kw: smooth_field(n, **{k: v for k, v in kw.items() if k in ("amplitude", "frequency")}),
    "localized-field": lambda n, **kw: localized_field(n, **{k: v for k, v in kw.items() if k == "amplitude"}),
    "step-field": lambda n, **kw: step_field(n, **{k: v for k, v in kw.items() if k in ("low", "high")}),
}
