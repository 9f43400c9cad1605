"""Anisotropic kernel K(x, z) = c chi_{[0,rho)}(|x-z|) / |M(z, x-z)(x-z)|^{n+2s},
the pointwise operator L_K u(x) = P.V. int (u(x) - u(z)) K(x, z) dz and the
kernel-level diagnostics.

All integrals over y = z - x are computed in polar coordinates y = r psi with a
sphere rule in psi and a graded radial rule in r.  The radial rule puts a
Gauss-Jacobi panel (weight r^a) next to the singularity and Gauss-Legendre
panels on dyadic shells r in [R 2^{-k-1}, R 2^{-k}] further out.  The far
field r > R is mapped by v = r^{-2s}, which turns the r^{-1-2s} tail into a
bounded integrand on a finite interval.
"""
from dataclasses import dataclass
from functools import cached_property, lru_cache
import math
from typing import Callable, Optional

import numpy as np
from scipy.special import roots_jacobi

from .algebra import c_ns, eigh_sym, operator_norm
from .errors import DomainError, PreconditionError, SingularityError
from .spectral import MatrixFieldM, _points, sphere_rule


@lru_cache(maxsize=None)
def gauss_legendre(order):
    return np.polynomial.legendre.leggauss(order)


@lru_cache(maxsize=None)
def _jacobi(order, a):
    t, w = roots_jacobi(order, 0.0, a)
    return t, w


def graded_radial_rule(R, a, order=24, levels=4):
    """Nodes r and weights w with sum w phi(r) ~ int_0^R r^a phi(r) dr.

    Gauss-Jacobi on (0, R 2^{-levels}) and Gauss-Legendre on the dyadic
    shells above it; ``a`` > -1.
    """
    if a <= -1.0:
        raise DomainError("radial weight exponent must exceed -1")
    r0 = R * 2.0 ** (-levels)
    t, w = _jacobi(order, a)
    nodes = [0.5 * r0 * (t + 1.0)]
    weights = [(0.5 * r0) ** (a + 1.0) * w]
    tg, wg = gauss_legendre(order)
    for k in range(levels):
        lo, hi = R * 2.0 ** (-k - 1), R * 2.0 ** (-k)
        r = lo + 0.5 * (hi - lo) * (tg + 1.0)
        nodes.append(r)
        weights.append(0.5 * (hi - lo) * wg * r ** a)
    return np.concatenate(nodes), np.concatenate(weights)


def panel_rule(lo, hi, order=16, width=0.5):
    """Composite Gauss-Legendre on [lo, hi] with panels no wider than ``width``."""
    if hi <= lo:
        return np.zeros(0), np.zeros(0)
    m = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, m + 1)
    tg, wg = gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    r = (edges[:-1, None] + half[:, None] * (tg + 1.0)).ravel()
    w = (half[:, None] * wg).ravel()
    return r, w


R_CAP = 1e100


def tail_rule(R, rho, s, order=12, rel=1e-14):
    """Rule for int_R^rho r^{-1-2s} k(r) dr = (1/2s) int_{rho^{-2s}}^{R^{-2s}} k(v^{-1/2s}) dv.

    Returns radial nodes r, weights w (already including 1/2s) and a pair
    (r_last, w_last) for the remainder beyond the last panel, where k is
    taken as constant.  The remainder weight is zero when rho is reached.
    """
    v_hi = R ** (-2.0 * s)
    v_lo = 0.0 if math.isinf(rho) else rho ** (-2.0 * s)
    v_stop = max(v_lo, rel * v_hi, R_CAP ** (-2.0 * s))
    tg, wg = gauss_legendre(order)
    nodes, weights = [], []
    hi = v_hi
    while hi > v_stop * (1.0 + 1e-12):
        lo = max(0.5 * hi, v_stop)
        v = lo + 0.5 * (hi - lo) * (tg + 1.0)
        nodes.append(v ** (-0.5 / s))
        weights.append(0.5 * (hi - lo) * wg / (2.0 * s))
        hi = lo
    rem_w = (v_stop - v_lo) / (2.0 * s)
    rem_r = v_stop ** (-0.5 / s) if v_stop > 0 else R_CAP
    if nodes:
        return np.concatenate(nodes), np.concatenate(weights), (rem_r, rem_w)
    return np.zeros(0), np.zeros(0), (rem_r, rem_w)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel data (M, s, rho).  ``c`` is c_{n,s}; ``n`` comes from M."""

    M: MatrixFieldM
    s: float
    rho: float = math.inf

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise DomainError(f"s must lie in (0, 1), got {self.s!r}")
        if not self.rho > 0.0:
            raise DomainError(f"horizon rho must be positive, got {self.rho!r}")

    @property
    def n(self):
        return self.M.n

    @cached_property
    def c(self):
        return c_ns(self.n, self.s)

    def __call__(self, x, z):
        return kernel_eval(self, x, z)

    def profile(self, z, d):
        """c / |M(z, d) d_hat|^{n+2s}: the kernel with the radial power removed."""
        r = np.linalg.norm(d, axis=-1)
        dhat = d / r[..., None]
        Md = np.einsum("...ij,...j->...i", self.M(z, d), dhat)
        return self.c * np.sum(Md * Md, axis=-1) ** (-(self.n + 2.0 * self.s) / 2.0)

    @cached_property
    def csharp(self):
        """Measured left side of the almost-symmetry condition, max over a few points."""
        pts = [np.zeros(self.n), 0.5 * np.eye(self.n)[0], -0.5 * np.eye(self.n)[0]]
        return max(almost_symmetry_integral(self, p) for p in pts)


def kernel_eval(K, x, z):
    """K(x, z); broadcasts over leading axes, raises on x = z."""
    n = K.n
    x = _points(x, n)
    z = _points(z, n)
    x, z = np.broadcast_arrays(x, z)
    d = x - z
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0.0):
        raise SingularityError("kernel is singular on the diagonal x = z")
    Md = np.einsum("...ij,...j->...i", K.M(z, d), d)
    val = K.c * np.sum(Md * Md, axis=-1) ** (-(n + 2.0 * K.s) / 2.0)
    val = np.where(r < K.rho, val, 0.0)
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class KernelBoundsReport:
    c_low: float
    c_high: float
    lower_violation: float
    upper_violation: float
    asymmetry: float

    def ok(self, tol=1e-12):
        return max(self.lower_violation, self.upper_violation, self.asymmetry) <= tol


def kernel_bounds_check(K, xs, zs):
    """Check c/alpha^p <= K |x-z|^p <= c/beta^p (p = n+2s) and K(x,z) = K(z,x).

    Violations are relative to the bound; the asymmetry is relative to K.
    Only pairs with |x - z| < rho enter the two-sided bound.
    """
    n = K.n
    xs = _points(xs, n)
    zs = _points(zs, n)
    p = n + 2.0 * K.s
    r = np.linalg.norm(xs - zs, axis=-1)
    kxz = np.asarray(kernel_eval(K, xs, zs))
    kzx = np.asarray(kernel_eval(K, zs, xs))
    c_low = K.c / K.M.alpha ** p
    c_high = K.c / K.M.beta ** p
    inside = r < K.rho
    ratio = kxz[inside] * r[inside] ** p
    low = float(np.max((c_low - ratio) / c_low, initial=0.0))
    high = float(np.max((ratio - c_high) / c_high, initial=0.0))
    scale = np.maximum(np.abs(kxz), np.finfo(float).tiny)
    asym = float(np.max(np.abs(kxz - kzx) / scale, initial=0.0))
    return KernelBoundsReport(c_low, c_high, max(low, 0.0), max(high, 0.0), asym)


# ------------------------------------------------------------------ probes

@dataclass(frozen=True)
class SmoothProbe:
    """C^2 test function with gradient, Hessian, support radius and C^2 bound.

    ``support`` is the radius of a ball (centred at ``center``) outside of
    which u vanishes, or is below 1e-17 for the Gaussian.
    """

    n: int
    func: Callable
    grad: Callable
    hess: Callable
    support: float
    c2_bound: float
    name: str = "custom"
    center: Optional[np.ndarray] = None

    def _shift(self, x):
        x = _points(x, self.n)
        return x if self.center is None else x - self.center

    def __call__(self, x):
        return self.func(self._shift(x))

    def gradient(self, x):
        return self.grad(self._shift(x))

    def hessian(self, x):
        return self.hess(self._shift(x))

    def translated(self, tau):
        tau = np.asarray(tau, dtype=float).reshape(self.n)
        center = tau if self.center is None else self.center + tau
        return SmoothProbe(self.n, self.func, self.grad, self.hess, self.support,
                           self.c2_bound, self.name, center)

    def scaled(self, factor):
        f = float(factor)
        return SmoothProbe(self.n, lambda y: f * self.func(y), lambda y: f * self.grad(y),
                           lambda y: f * self.hess(y), self.support, abs(f) * self.c2_bound,
                           self.name, self.center)

    def reach(self, x):
        """Radius around x beyond which the probe vanishes."""
        c = np.zeros(self.n) if self.center is None else self.center
        return self.support + float(np.linalg.norm(np.asarray(x, dtype=float).reshape(self.n) - c))


def gaussian_probe(n):
    """u(x) = exp(-|x|^2)."""

    def f(y):
        return np.exp(-np.einsum("...i,...i->...", y, y))

    def g(y):
        return -2.0 * y * f(y)[..., None]

    def h(y):
        e = f(y)[..., None, None]
        return (4.0 * y[..., :, None] * y[..., None, :] - 2.0 * np.eye(n)) * e

    return SmoothProbe(n, f, g, h, 6.5, 2.0, "gaussian")


def _bump_parts(y):
    q = np.maximum(1.0 - np.einsum("...i,...i->...", y, y), 0.0)
    return q


def polynomial_bump_probe(n):
    """u(x) = (1 - |x|^2)_+^3."""

    def f(y):
        return _bump_parts(y) ** 3

    def g(y):
        q = _bump_parts(y)
        return -6.0 * y * (q * q)[..., None]

    def h(y):
        q = _bump_parts(y)[..., None, None]
        return -6.0 * q * q * np.eye(n) + 24.0 * q * y[..., :, None] * y[..., None, :]

    return SmoothProbe(n, f, g, h, 1.0, 6.0, "polynomial-bump")


def odd_bump_probe(n):
    """u(x) = x_1 (1 - |x|^2)_+^3, odd in x_1."""
    e1 = np.eye(n)[0]

    def f(y):
        return y[..., 0] * _bump_parts(y) ** 3

    def g(y):
        q = _bump_parts(y)
        return e1 * (q ** 3)[..., None] - 6.0 * y[..., :1] * y * (q * q)[..., None]

    def h(y):
        q = _bump_parts(y)[..., None, None]
        gb = -6.0 * y * (_bump_parts(y) ** 2)[..., None]
        hb = -6.0 * q * q * np.eye(n) + 24.0 * q * y[..., :, None] * y[..., None, :]
        outer = e1[:, None] * gb[..., None, :] + gb[..., :, None] * e1[None, :]
        return outer + y[..., 0, None, None] * hb

    # C^2 bound measured on a dense radial grid and rounded up
    return SmoothProbe(n, f, g, h, 1.0, 7.0, "odd-bump")


def constant_probe(n, value=1.0):
    """u(x) = value everywhere (no compact support)."""
    v = float(value)
    return SmoothProbe(n, lambda y: np.full(y.shape[:-1], v), lambda y: np.zeros(y.shape),
                       lambda y: np.zeros(y.shape + (n,)), math.inf, abs(v), "constant")


PROBE_CATALOGUE = {
    "gaussian": gaussian_probe,
    "polynomial-bump": polynomial_bump_probe,
    "odd-bump": odd_bump_probe,
}


# --------------------------------------------------------- pointwise action

@dataclass(frozen=True)
class PointwiseResult:
    value: float
    error: float


def _profiles(K, x, psi, r):
    """Kernel profiles k+(r, psi) for z = x + r psi and k-(r, psi) for z = x - r psi.

    K(x, x + r psi) = r^{-n-2s} k+ and similarly for k-.
    """
    y = r[None, :, None] * psi[:, None, :]
    xp = np.broadcast_to(x, y.shape)
    # K(x, z) uses M(z, x - z)
    kp = K.profile(xp + y, -y)
    km = K.profile(xp - y, y)
    return kp, km


TAYLOR_RADIUS = 1e-4


def _differences(u, x, ux, psi, r):
    """d1 = u(x) - u(x + r psi) and d2 = 2u(x) - u(x + r psi) - u(x - r psi).

    Below TAYLOR_RADIUS (relative to the probe scale) the differences are
    replaced by their second-order Taylor expansions, which avoids the
    cancellation error eps/r^2 of the direct formula.
    """
    y = r[None, :, None] * psi[:, None, :]
    d1 = ux - u(x + y)
    d2 = 2.0 * ux - u(x + y) - u(x - y)
    small = r < TAYLOR_RADIUS * min(1.0, u.support)
    if np.any(small):
        g = np.asarray(u.gradient(x)).reshape(-1)
        H = np.asarray(u.hessian(x)).reshape(len(g), len(g))
        gp = psi @ g
        hp = np.einsum("qi,ij,qj->q", psi, H, psi)
        rs = r[small]
        d1[:, small] = -np.outer(gp, rs) - 0.5 * np.outer(hp, rs * rs)
        d2[:, small] = -np.outer(hp, rs * rs)
    return d1, d2


def _apply_once(K, u, x, rule, order, levels):
    n, s = K.n, K.s
    psi, wpsi = rule.nodes, rule.weights
    R1 = min(1.0, K.rho)
    ux = float(u(x))
    if s < 0.5:
        # direct integral: r^{n-1} K (u(x) - u(x + r psi)) = r^{-2s} * [k+ (ux - u+)/r]
        r, w = graded_radial_rule(R1, -2.0 * s, order, levels)
        y = r[None, :, None] * psi[:, None, :]
        kp = K.profile(x + y, -y)
        d1, _ = _differences(u, x, ux, psi, r)
        near = float(np.einsum("q,p,qp->", wpsi, w, kp * d1 / r))
    else:
        # symmetrised split, weight r^{1-2s}
        r, w = graded_radial_rule(R1, 1.0 - 2.0 * s, order, levels)
        kp, km = _profiles(K, x, psi, r)
        d1, d2 = _differences(u, x, ux, psi, r)
        phi = 0.5 * (d1 * (kp - km) + d2 * km) / (r * r)
        near = float(np.einsum("q,p,qp->", wpsi, w, phi))
    far = 0.0
    if K.rho > R1 and math.isinf(u.reach(x)):
        # probe without compact support: map the whole far field
        r, w, (r_rem, w_rem) = tail_rule(R1, K.rho, s, order)
        r = np.append(r, r_rem)
        w = np.append(w, w_rem)
        y = r[None, :, None] * psi[:, None, :]
        kp = K.profile(x + y, -y)
        far = float(np.einsum("q,p,qp->", wpsi, w, kp * (ux - u(x + y))))
    elif K.rho > R1:
        reach = min(K.rho, u.reach(x))
        if reach > R1:
            # - int u(x + r psi) K r^{n-1} dr on (R1, reach)
            r, w = panel_rule(R1, reach, order, 0.5)
            y = r[None, :, None] * psi[:, None, :]
            kp = K.profile(x + y, -y)
            up = u(x + y)
            far -= float(np.einsum("q,p,qp->", wpsi, w * r ** (-1.0 - 2.0 * s), kp * up))
        if ux != 0.0:
            r, w, (r_rem, w_rem) = tail_rule(R1, K.rho, s, order)
            r = np.append(r, r_rem)
            w = np.append(w, w_rem)
            y = r[None, :, None] * psi[:, None, :]
            kp = K.profile(x + y, -y)
            far += ux * float(np.einsum("q,p,qp->", wpsi, w, kp))
    return near + far


def apply_pointwise(K, u, x, order=24, levels=4, sphere_level=1, return_error=False):
    """L_K u(x) = P.V. int (u(x) - u(z)) K(x, z) dz.

    For s < 1/2 the integral converges absolutely and is computed directly.
    For s >= 1/2 the pair y, -y is combined:
        2 int_{B_R} = int (u(x) - u(x+y))(K(x,x+y) - K(x,x-y))
                      + int (2u(x) - u(x+y) - u(x-y)) K(x,x-y),
    which needs M Lipschitz; R = min(1, rho).  The error estimate is the
    difference to a rule with 8 more nodes per panel.

    The far field r > R is mapped by v = r^{-2s}; this is accurate when
    M(x + r psi, -r psi) settles as r grows.  For fields that oscillate
    forever the returned error estimate grows accordingly.
    """
    if K.s >= 0.5 and K.M.lipschitz is None:
        raise PreconditionError("pointwise evaluation for s >= 1/2 needs a Lipschitz M "
                                "(set M.lipschitz)")
    x = np.asarray(x, dtype=float).reshape(K.n)
    rule = sphere_rule(K.n, sphere_level)
    hi = _apply_once(K, u, x, rule, order + 8, levels)
    if not return_error:
        return hi
    lo = _apply_once(K, u, x, rule, order, levels)
    return PointwiseResult(hi, abs(hi - lo))


def almost_symmetry_integral(K, x, order=24, levels=8, sphere_level=1, return_error=False):
    """int_{B_1} |y| |K(x, x+y) - K(x, x-y)| dy (truncated at rho if rho < 1)."""
    n, s = K.n, K.s
    x = np.asarray(x, dtype=float).reshape(n)
    rule = sphere_rule(n, sphere_level)
    R1 = min(1.0, K.rho)

    def once(q):
        # r^{n-1} * r * r^{-n-2s} |k+ - k-| = r^{1-2s} * |k+ - k-| / r
        r, w = graded_radial_rule(R1, 1.0 - 2.0 * s, q, levels)
        kp, km = _profiles(K, x, rule.nodes, r)
        return float(np.einsum("q,p,qp->", rule.weights, w, np.abs(kp - km) / r))

    hi = once(order + 8)
    if not return_error:
        return hi
    return PointwiseResult(hi, abs(hi - once(order)))


@dataclass(frozen=True)
class PerturbationReport:
    ratio: float
    bound: float

    @property
    def holds(self):
        return self.ratio <= self.bound * (1.0 + 1e-12)


def perturbation_estimate_check(L, N, ys, s, alpha, beta):
    """sup_y | |Ly|^{-p} - |Ny|^{-p} | |y|^p / ||L - N||, p = n + 2s.

    With |L psi|, |N psi| in [beta, alpha] the mean value theorem gives the
    explicit bound p / beta^{p+1}; it is reported alongside the ratio.
    """
    L = np.atleast_2d(np.asarray(L, dtype=float))
    N = np.atleast_2d(np.asarray(N, dtype=float))
    n = L.shape[-1]
    ys = _points(ys, n)
    p = n + 2.0 * s
    for mat in (L, N):
        sv = np.sqrt(np.maximum(eigh_sym(mat.T @ mat).eigenvalues, 0.0))
        if sv[0] < beta * (1.0 - 1e-12) or sv[-1] > alpha * (1.0 + 1e-12):
            raise PreconditionError("ellipticity bounds beta <= |M psi| <= alpha are violated")
    gap = operator_norm(L - N)
    bound = p / beta ** (p + 1.0)
    if gap == 0.0:
        return PerturbationReport(0.0, bound)
    yn = np.linalg.norm(ys, axis=-1)
    ly = np.linalg.norm(ys @ L.T, axis=-1) / yn
    ny = np.linalg.norm(ys @ N.T, axis=-1) / yn
    ratio = float(np.max(np.abs(ly ** (-p) - ny ** (-p))) / gap)
    return PerturbationReport(ratio, bound)
