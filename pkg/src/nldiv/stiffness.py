"""P1 finite elements on an interval and assembly of the nonlocal stiffness
matrix

    S_ij = 1/2 int int (phi_i(x) - phi_i(z)) (phi_j(x) - phi_j(z)) K(x, z) dx dz

over R x R, with phi_i the hat functions of the interior nodes extended by
zero outside the domain.

Only the symmetric part K_sym(x, z) = (K(x, z) + K(z, x)) / 2 enters the
form, so it is used throughout.  The double integral splits into element
pairs inside the domain and a one-dimensional exterior term
int phi_i phi_j kappa with kappa(x) = int_{outside} K_sym(x, z) dz.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.linalg import toeplitz

from .errors import AssemblyError, DimensionError, DomainError
from .kernel import KernelSpec, _jacobi, gauss_legendre
from .spectral import MatrixFieldM


@dataclass(frozen=True)
class Mesh:
    """Uniform P1 mesh of the interval (a, b) with N elements.

    Degrees of freedom are the N - 1 interior nodes; functions vanish at the
    end points and outside the interval.
    """

    a: float
    b: float
    N: int
    n: int = 1

    def __post_init__(self):
        if self.n != 1:
            raise DimensionError("only one-dimensional meshes are implemented")
        if not self.b > self.a:
            raise DomainError("need a < b")
        if self.N < 2:
            raise DomainError("need at least two elements")

    @property
    def h(self):
        return (self.b - self.a) / self.N

    @property
    def nodes(self):
        return np.linspace(self.a, self.b, self.N + 1)

    @property
    def interior(self):
        return self.nodes[1:-1]

    @property
    def ndof(self):
        return self.N - 1

    @property
    def diameter(self):
        return self.b - self.a

    def lumped_weights(self):
        """Nodal quadrature weights int phi_i = h of the interior nodes."""
        return np.full(self.ndof, self.h)

    def mass_matrix(self):
        h = self.h
        main = np.full(self.ndof, 2.0 * h / 3.0)
        off = np.full(self.ndof - 1, h / 6.0)
        return np.diag(main) + np.diag(off, 1) + np.diag(off, -1)

    def refine(self):
        return Mesh(self.a, self.b, 2 * self.N)


@dataclass(frozen=True)
class DiscreteFunction:
    """Continuous P1 function given by its interior nodal values."""

    mesh: Mesh
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if c.shape != (self.mesh.ndof,):
            raise DimensionError(f"expected {self.mesh.ndof} coefficients, got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def interpolate(cls, mesh, f):
        return cls(mesh, np.asarray(f(mesh.interior), dtype=float))

    @classmethod
    def zeros(cls, mesh):
        return cls(mesh, np.zeros(mesh.ndof))

    @property
    def full_values(self):
        return np.concatenate([[0.0], self.coeffs, [0.0]])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.mesh.nodes, self.full_values, left=0.0, right=0.0)

    def __add__(self, other):
        return DiscreteFunction(self.mesh, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return DiscreteFunction(self.mesh, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return DiscreteFunction(self.mesh, float(c) * self.coeffs)

    __rmul__ = __mul__

    def l2_norm(self):
        c = self.coeffs
        return math.sqrt(max(float(c @ (self.mesh.mass_matrix() @ c)), 0.0))

    def max_norm(self):
        return float(np.max(np.abs(self.coeffs), initial=0.0))

    def l2_error(self, f, order=8):
        """|| u_h - f ||_{L2(a, b)} with Gauss-Legendre on every element."""
        t, w = gauss_legendre(order)
        nodes = self.mesh.nodes
        h = self.mesh.h
        x = (nodes[:-1, None] + 0.5 * h * (t + 1.0)).ravel()
        ww = np.tile(0.5 * h * w, self.mesh.N)
        diff = self(x) - np.asarray(f(x), dtype=float)
        return math.sqrt(float(np.sum(ww * diff * diff)))

    def to_rows(self):
        """(node, value) pairs over all nodes, boundary zeros included."""
        return list(zip(self.mesh.nodes.tolist(), self.full_values.tolist()))


@dataclass(frozen=True)
class StiffnessMatrix:
    matrix: np.ndarray
    mesh: Mesh
    s: float
    rho: float
    method: str
    order: int
    cert_error: float
    meta: dict = field(default_factory=dict)

    def energy(self, u):
        c = u.coeffs if isinstance(u, DiscreteFunction) else np.asarray(u, dtype=float)
        return float(c @ (self.matrix @ c))


# ------------------------------------------------------------ kernel pieces

def _gamma_sym(K, x, z):
    """|x - z|^{1+2s} K_sym(x, z) (c included) for 1D point arrays (x != z)."""
    x = np.asarray(x, dtype=float)[..., None]
    z = np.asarray(z, dtype=float)[..., None]
    d = x - z
    if K.M.structural:
        return K.profile(z, d)
    return 0.5 * (K.profile(z, d) + K.profile(x, -d))


def exterior_kappa(K, mesh, x, order=12, rel=1e-14):
    """kappa(x) = int_{R \\ (a, b)} K_sym(x, z) dz for points x in (a, b).

    Returned as the two one-sided parts times d^{2s} (d the
    distance to the respective end point), so callers can pair each side
    with a Gauss-Jacobi weight.  On each side t = |x - z| runs over
    (d, rho) and is mapped by v = (t/d)^{-2s} onto geometric panels of
    (nu_lo, 1]; beyond nu_lo = rel the profile is frozen.
    """
    s = K.s
    x = np.asarray(x, dtype=float)
    tg, wg = gauss_legendre(order)
    npan = 48
    out = []
    for sign, end in ((-1.0, mesh.a), (1.0, mesh.b)):
        d = np.abs(x - end)
        if K.M.constant is not None:
            g = _gamma_sym(K, np.zeros(1), np.array([sign]))[0]
            frac = np.where(d < K.rho, 1.0 - (np.minimum(d, K.rho) / K.rho) ** (2.0 * s), 0.0)
            out.append(g * frac / (2.0 * s))
            continue
        if math.isinf(K.rho):
            nu_lo = np.full_like(d, rel)
        else:
            nu_lo = np.where(d < K.rho, (np.minimum(d, K.rho) / K.rho) ** (2.0 * s), 1.0)
        # geometric panel edges between 1 and nu_lo, per point
        k = np.arange(npan + 1) / npan
        edges = np.exp(np.log(np.maximum(nu_lo, 1e-300))[:, None] * k[None, :])
        hi, lo = edges[:, :-1, None], edges[:, 1:, None]
        nu = (lo + 0.5 * (hi - lo) * (tg + 1.0)).reshape(len(d), -1)
        wnu = (0.5 * (hi - lo) * wg).reshape(len(d), -1)
        t = d[:, None] * nu ** (-0.5 / s)
        t = np.minimum(t, 1e100)
        z = x[:, None] + sign * t
        val = np.sum(wnu * _gamma_sym(K, np.broadcast_to(x[:, None], z.shape), z), axis=1)
        if math.isinf(K.rho):
            t_last = np.minimum(d * rel ** (-0.5 / s), 1e100)
            val = val + rel * _gamma_sym(K, x, x + sign * t_last)
        out.append(np.where(d < K.rho, val, 0.0) / (2.0 * s))
    return out[0], out[1]


# --------------------------------------------------------- general assembly

def _assemble_quadrature(K, mesh, q):
    s, h, N = K.s, mesh.h, mesh.N
    nodes = mesh.nodes
    S = np.zeros((N + 1, N + 1))
    tg, wg = gauss_legendre(q)
    tj1, wj1 = _jacobi(q, 1.0 - 2.0 * s)
    tj2, wj2 = _jacobi(q, 2.0 - 2.0 * s)
    e_idx = np.arange(N)

    # identical pairs: x - z = h d, d in (0, 1) with weight d^{1-2s}
    dd = 0.5 * (tj1 + 1.0)
    wd = 0.5 ** (2.0 - 2.0 * s) * wj1
    tau = 0.5 * (tg + 1.0)
    wt = 0.5 * wg
    eta = (1.0 - dd)[:, None] * tau[None, :]
    wgt = (wd * (1.0 - dd))[:, None] * wt[None, :]
    xs = nodes[:-1, None, None] + h * (eta + dd[:, None])[None]
    zs = nodes[:-1, None, None] + h * eta[None]
    # both orientations contribute equally for the symmetrised kernel
    val = 2.0 * h ** (1.0 - 2.0 * s) * np.sum(wgt[None] * _gamma_sym(K, xs, zs), axis=(1, 2))
    pat = np.array([[1.0, -1.0], [-1.0, 1.0]])
    for a in range(2):
        for b in range(2):
            np.add.at(S, (e_idx + a, e_idx + b), 0.5 * val * pat[a, b])

    # touching pairs (e, e + 1) sharing node e + 1: Duffy on two triangles
    rr = 0.5 * (tj2 + 1.0)
    wr = 0.5 ** (3.0 - 2.0 * s) * wj2
    W = (wr[:, None] * wt[None, :]) * (1.0 + tau[None, :]) ** (-1.0 - 2.0 * s)
    shared = nodes[1:-1]
    local = np.zeros((N - 1, 3, 3))
    for first in (True, False):
        if first:
            xi, et = rr[:, None] * np.ones_like(tau)[None, :], rr[:, None] * tau[None, :]
            dvec = np.stack([np.ones_like(tau), tau - 1.0, -tau])
        else:
            xi, et = rr[:, None] * tau[None, :], rr[:, None] * np.ones_like(tau)[None, :]
            dvec = np.stack([tau, 1.0 - tau, -np.ones_like(tau)])
        xs = shared[:, None, None] - h * xi[None]
        zs = shared[:, None, None] + h * et[None]
        g = _gamma_sym(K, xs, zs) * W[None]
        # dvec depends on t only
        local += np.einsum("ert,at,bt->eab", g, dvec, dvec)
    local *= h ** (1.0 - 2.0 * s)
    for a in range(3):
        for b in range(3):
            np.add.at(S, (e_idx[:-1] + a, e_idx[:-1] + b), local[:, a, b])

    # separated pairs k < l, l >= k + 2
    kk, ll = np.triu_indices(N, 2)
    if len(kk):
        gap = (ll - kk - 1) * h
        keep = gap < K.rho
        kk, ll = kk[keep], ll[keep]
    if len(kk):
        if math.isinf(K.rho):
            xb = np.stack([np.zeros(len(kk)), np.ones(len(kk))], axis=1)
        else:
            # split x-element where x + rho crosses the ends of element l
            c1 = np.clip((nodes[ll] - K.rho - nodes[kk]) / h, 0.0, 1.0)
            c2 = np.clip((nodes[ll] + h - K.rho - nodes[kk]) / h, 0.0, 1.0)
            xb = np.stack([np.zeros(len(kk)), c1, c2, np.ones(len(kk))], axis=1)
        lo, hi = xb[:, :-1, None], xb[:, 1:, None]
        xi = (lo + (hi - lo) * tau).reshape(len(kk), -1)
        wx = ((hi - lo) * wt).reshape(len(kk), -1)
        x = nodes[kk][:, None] + h * xi
        z_lo = nodes[ll][:, None] * np.ones_like(x)
        z_hi = np.minimum(nodes[ll][:, None] + h, x + K.rho)
        span = np.maximum(z_hi - z_lo, 0.0)
        z = z_lo[:, :, None] + span[:, :, None] * tau[None, None, :]
        wz = (span[:, :, None] / h) * wt[None, None, :]
        xx = np.broadcast_to(x[:, :, None], z.shape)
        kern = _gamma_sym(K, xx, z) * np.abs(xx - z) ** (-1.0 - 2.0 * s)
        w2 = wx[:, :, None] * wz * h * h * kern
        eta_loc = (z - nodes[ll][:, None, None]) / h
        phx = np.stack([1.0 - xi, xi])[:, :, :, None] * np.ones_like(z)[None]
        phz = -np.stack([1.0 - eta_loc, eta_loc])
        D = np.concatenate([phx, phz])
        local = np.einsum("kxz,akxz,bkxz->kab", w2, D, D)
        idx = np.stack([kk, kk + 1, ll, ll + 1], axis=1)
        for a in range(4):
            for b in range(4):
                np.add.at(S, (idx[:, a], idx[:, b]), local[:, a, b])

    # exterior term int phi_i phi_j kappa
    S += _exterior_matrix(K, mesh, q)
    return S[1:-1, 1:-1]


def _exterior_matrix(K, mesh, q):
    """int phi_i phi_j kappa over the interior nodes (boundary rows are zero).

    On the two boundary elements only the interior hat is nonzero, and
    phi^2 kappa ~ d^{2-2s}; Gauss-Jacobi with that weight integrates it.
    Elsewhere Gauss-Legendre is used, split where kappa has a kink
    (distance rho from an end point).
    """
    s, h, N = K.s, mesh.h, mesh.N
    nodes = mesh.nodes
    tg, wg = gauss_legendre(q)
    tj, wj = _jacobi(q, 2.0 - 2.0 * s)
    E = np.zeros((N + 1, N + 1))
    kinks = [mesh.a + K.rho, mesh.b - K.rho] if not math.isinf(K.rho) else []

    # boundary elements: d = distance to the end point, interior hat = d / h
    d = 0.5 * h * (tj + 1.0)
    w = (0.5 * h) ** (3.0 - 2.0 * s) * wj / (h * h)
    for node, x in ((1, mesh.a + d), (N - 1, mesh.b - d)):
        ka, kb = exterior_kappa(K, mesh, x, order=max(8, q // 2))
        da, db = x - mesh.a, mesh.b - x
        near, other, dn, do = (ka, kb, da, db) if node == 1 else (kb, ka, db, da)
        # phi^2 kappa = d^{2-2s} * (near + other (d/do)^{2s}) / h^2
        E[node, node] += float(np.sum(w * (near + other * (dn / do) ** (2.0 * s))))

    xs, ws, elem = [], [], []
    for e in range(1, N - 1):
        lo, hi = nodes[e], nodes[e + 1]
        cuts = sorted([lo, hi] + [k for k in kinks if lo < k < hi])
        for p0, p1 in zip(cuts[:-1], cuts[1:]):
            xs.append(p0 + 0.5 * (p1 - p0) * (tg + 1.0))
            ws.append(0.5 * (p1 - p0) * wg)
            elem.append(np.full(q, e))
    if xs:
        x = np.concatenate(xs)
        w = np.concatenate(ws)
        e = np.concatenate(elem)
        ka, kb = exterior_kappa(K, mesh, x, order=max(8, q // 2))
        kap = ka * (x - mesh.a) ** (-2.0 * s) + kb * (mesh.b - x) ** (-2.0 * s)
        phl = (nodes[e + 1] - x) / h
        phr = (x - nodes[e]) / h
        for a, pa in ((0, phl), (1, phr)):
            for b, pb in ((0, phl), (1, phr)):
                np.add.at(E, (e + a, e + b), w * kap * pa * pb)
    return E


# ------------------------------------------------------- closed-form route

def toeplitz_coefficients(s, h, count):
    """B_k, k = 0..count-1, for 1/2 int int (phi_i(x)-phi_i(z))(phi_j(x)-phi_j(z)) |x-z|^{-1-2s}.

    Uses the fourth difference of |t|^p, p = 3 - 2s, at the node offsets; the
    quadratic part that the fourth difference annihilates is subtracted to
    keep the s = 1/2 limit regular.
    """
    p = 3.0 - 2.0 * s
    E = (3.0 - 2.0 * s) * (2.0 - 2.0 * s) * (-2.0 * s)
    omega = np.array([1.0, -4.0, 6.0, -4.0, 1.0])
    k = np.arange(count)[:, None] + np.arange(-2, 3)[None, :]
    a = np.abs(k).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), 0.0)
        if abs(p - 2.0) < 1e-12:
            g = a * a * lg
        else:
            g = a * a * np.expm1((p - 2.0) * lg) / (p - 2.0)
    g = np.where(a > 0, g, 0.0)
    return -(2.0 * h ** (p - 2.0) / E) * (g @ omega)


def _assemble_toeplitz(K, mesh):
    m = np.abs(np.asarray(K.M.constant, dtype=float).reshape(()))
    B = toeplitz_coefficients(K.s, mesh.h, mesh.ndof)
    return 0.5 * K.c * m ** (-1.0 - 2.0 * K.s) * toeplitz(B)


def assemble_stiffness(K, mesh, order=8, tol_asm=1e-6, method="auto"):
    """Dense stiffness matrix over the interior nodes.

    ``method`` is "quadrature", "toeplitz" (constant M, rho = inf) or
    "auto", which picks the closed form when it applies.  The quadrature
    route is run at ``order`` and ``order + 4``; the entrywise difference is
    reported as the certified error and must not exceed ``tol_asm``.
    """
    if not isinstance(K, KernelSpec):
        raise TypeError("K must be a KernelSpec")
    if K.n != mesh.n:
        raise DimensionError("kernel and mesh dimensions differ")
    if K.rho < 2.0 * mesh.h:
        raise DomainError("horizon rho must be at least two element sizes")
    closed = K.M.constant is not None and math.isinf(K.rho)
    if method == "auto":
        method = "toeplitz" if closed else "quadrature"
    if method == "toeplitz":
        if not closed:
            raise DomainError("closed-form assembly needs constant M and rho = inf")
        S = _assemble_toeplitz(K, mesh)
        return StiffnessMatrix(S, mesh, K.s, K.rho, "toeplitz", 0, 0.0)
    if method != "quadrature":
        raise ValueError(f"unknown assembly method {method!r}")
    lo = _assemble_quadrature(K, mesh, order)
    hi = _assemble_quadrature(K, mesh, order + 4)
    err = float(np.max(np.abs(hi - lo)))
    if err > tol_asm:
        raise AssemblyError(f"assembly error bound {err:.3e} exceeds tol_asm={tol_asm:.1e}; "
                            "raise the quadrature order", achieved=err)
    hi = 0.5 * (hi + hi.T)
    return StiffnessMatrix(hi, mesh, K.s, K.rho, "quadrature", order + 4, err)


def gagliardo_seminorm(u, s, **kwargs):
    """[u]_s = sqrt(c_{1,s} int int |u(x) - u(z)|^2 / |x - z|^{1+2s}) = sqrt(2 <S_id u, u>)."""
    K = KernelSpec(MatrixFieldM.identity(u.mesh.n), s)
    S = assemble_stiffness(K, u.mesh, **kwargs)
    return math.sqrt(max(2.0 * S.energy(u), 0.0))


def local_stiffness(A, mesh):
    """P1 matrix int A grad phi_i . grad phi_j with A frozen at element midpoints."""
    mid = 0.5 * (mesh.nodes[:-1] + mesh.nodes[1:])
    a = np.asarray(A(mid[:, None]), dtype=float).reshape(mesh.N)
    S = np.zeros((mesh.N + 1, mesh.N + 1))
    e = np.arange(mesh.N)
    coef = a / mesh.h
    S[e, e] += coef
    S[e + 1, e + 1] += coef
    S[e, e + 1] -= coef
    S[e + 1, e] -= coef
    return S[1:-1, 1:-1]
