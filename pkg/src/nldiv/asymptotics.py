"""Limits of the nonlocal problem: the bilinear form as s -> 1 and s -> 0,
the solution sweep s -> 1 and the sweep over mollified coefficients.

The fractional form

    B_s(u, phi) = c/2 int int_{|y| < rho} (u(x) - u(x-y)) (phi(x) - phi(x-y))
                  / |M(x-y, y) y|^{n+2s} dy dx

is computed with the radial rules of the kernel module: near field
|y| < R1 = min(1, rho) in difference form with weight r^{1-2s}, far field
expanded into the four products u phi(x), u phi(x-y), ..., where the
diagonal products only need int_{|y| > R1} K and the cross products have
bounded y-range.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .algebra import sphere_area
from .errors import DomainError, PreconditionError
from .kernel import (KernelSpec, SmoothProbe, gauss_legendre, graded_radial_rule, panel_rule,
                     tail_rule)
from .solver import SolverOptions, solve_local_fem, solve_semilinear
from .spectral import build_M_field, mollify_A_field, recover_A, sphere_rule
from .stiffness import DiscreteFunction, Mesh, gagliardo_seminorm


@dataclass(frozen=True)
class _FormFunction:
    """Uniform view of a smooth probe or a 1D P1 function for the form quadrature."""

    n: int
    value: object
    grad: object
    center: np.ndarray
    radius: float
    edges: tuple  # per dimension: panel edges covering the support

    @classmethod
    def wrap(cls, u, panel=1.0):
        if isinstance(u, DiscreteFunction):
            mesh = u.mesh
            nodes = mesh.nodes

            def value(x):
                return u(x[..., 0])

            def grad(x):
                xs = x[..., 0]
                e = np.clip(np.searchsorted(nodes, xs, side="right") - 1, 0, mesh.N - 1)
                v = u.full_values
                slope = (v[e + 1] - v[e]) / mesh.h
                inside = (xs > mesh.a) & (xs < mesh.b)
                return np.where(inside, slope, 0.0)[..., None]

            c = np.array([0.5 * (mesh.a + mesh.b)])
            return cls(1, value, grad, c, 0.5 * mesh.diameter, (nodes,))
        if isinstance(u, SmoothProbe):
            c = np.zeros(u.n) if u.center is None else np.asarray(u.center, dtype=float)
            R = u.support
            if not math.isfinite(R):
                raise DomainError("fractional_form needs probes with bounded support")
            m = max(1, int(math.ceil(2.0 * R / panel)))
            edges = tuple(np.linspace(c[k] - R, c[k] + R, m + 1) for k in range(u.n))
            return cls(u.n, u, u.gradient, c, R, edges)
        raise TypeError("expected a SmoothProbe or a DiscreteFunction")


def _box_rule(edge_sets, order):
    """Tensor Gauss-Legendre rule with ``order`` nodes per panel in each dimension."""
    tg, wg = gauss_legendre(order)
    axes = []
    for edges in edge_sets:
        edges = np.asarray(edges, dtype=float)
        half = 0.5 * np.diff(edges)
        x = (edges[:-1, None] + half[:, None] * (tg + 1.0)).ravel()
        w = (half[:, None] * wg).ravel()
        axes.append((x, w))
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return pts, w


def _extend(edges, pad, width):
    """Add uniform panels of at most ``width`` on both sides of ``edges``."""
    edges = np.asarray(edges, dtype=float)
    if pad <= 0:
        return edges
    m = max(1, int(math.ceil(pad / width)))
    left = np.linspace(edges[0] - pad, edges[0], m + 1)[:-1]
    right = np.linspace(edges[-1], edges[-1] + pad, m + 1)[1:]
    return np.concatenate([left, edges, right])


def _chunks(total, size):
    for i in range(0, total, size):
        yield slice(i, min(total, i + size))


def fractional_form(u, phi, K, x_order=None, radial_order=None, levels=3, sphere_level=1,
                    chunk=2048):
    """B_s(u, phi) for smooth probes or P1 functions with bounded support.

    Defaults: 8 x-nodes per unit panel and 16 radial nodes per shell in 1D,
    6 and 12 in higher dimension.
    """
    n, s = K.n, K.s
    if x_order is None:
        x_order = 8 if n == 1 else 6
    if radial_order is None:
        radial_order = 16 if n == 1 else 12
    U = _FormFunction.wrap(u)
    P = _FormFunction.wrap(phi)
    if U.n != n or P.n != n:
        raise DomainError("probe and kernel dimensions differ")
    rule = sphere_rule(n, sphere_level)
    psi, wpsi = rule.nodes, rule.weights
    R1 = min(1.0, K.rho)

    # union of the two supports, as panel edges per dimension
    edge_sets = []
    for k in range(n):
        e = np.union1d(U.edges[k], P.edges[k])
        edge_sets.append(e)

    # near field: x over supports padded by R1, y = r psi with r < R1
    near_edges = [_extend(e, R1, 1.0) for e in edge_sets]
    xq, wx = _box_rule(near_edges, x_order)
    r, wr = graded_radial_rule(R1, 1.0 - 2.0 * s, radial_order, levels)
    y = (r[:, None, None] * psi[None, :, :]).reshape(-1, n)
    wy = (wr[:, None] * wpsi[None, :]).ravel()
    ry = np.repeat(r, len(psi))
    k_const = None
    if K.M.constant is not None:
        k_const = K.profile(np.zeros_like(y), y)
    total = 0.0
    for sl in _chunks(len(xq), max(1, chunk * 64 // max(1, len(y)))):
        x = xq[sl][:, None, :]
        z = x - y[None, :, :]
        du = U.value(x) - U.value(z)
        dp = P.value(x) - P.value(z)
        # K(x, x - y) r^{n+2s} = profile(z, y)
        if k_const is None:
            k = K.profile(z, np.broadcast_to(y, z.shape))
        else:
            k = k_const[None, :]
        total += float(np.einsum("x,y,xy->", wx[sl], wy, k * du * dp / (ry * ry)))
    near = 0.5 * total

    far = 0.0
    if K.rho > R1:
        far = 0.5 * (_far_diagonal(U, P, K, R1, psi, wpsi, edge_sets, x_order, radial_order, chunk)
                     + _far_cross(U, P, K, R1, psi, wpsi, x_order, chunk))
    return near + far


def _significant(x, w, vals, tol=1e-17):
    keep = np.abs(vals) > tol * max(np.max(np.abs(vals)), 1e-300)
    return x[keep], w[keep], vals[keep]


def _far_diagonal(U, P, K, R1, psi, wpsi, edge_sets, x_order, radial_order, chunk):
    """int u phi(x) int_{|y| > R1} (K(x, x-y) + K(x+y, x)) dy dx."""
    n, s = K.n, K.s
    xd, wd = _box_rule(edge_sets, x_order)
    xd, wd, uphi = _significant(xd, wd, U.value(xd) * P.value(xd))
    if len(xd) == 0:
        return 0.0
    if K.M.constant is not None:
        # the profile does not depend on r: the radial integral is explicit
        tail = R1 ** (-2.0 * s) / (2.0 * s)
        if not math.isinf(K.rho):
            tail -= K.rho ** (-2.0 * s) / (2.0 * s)
        ang = float(wpsi @ K.profile(np.zeros_like(psi), psi))
        return float(2.0 * tail * ang * np.sum(wd * uphi))
    rt, wt, (r_rem, w_rem) = tail_rule(R1, K.rho, s, max(4, radial_order // 2), 1e-12)
    rt = np.append(rt, r_rem)
    wt = np.append(wt, w_rem)
    yt = (rt[:, None, None] * psi[None, :, :]).reshape(-1, n)
    wyt = (wt[:, None] * wpsi[None, :]).ravel()
    total = 0.0
    for sl in _chunks(len(xd), max(1, chunk * 64 // max(1, len(yt)))):
        x = xd[sl][:, None, :]
        shape = (len(x),) + yt.shape
        # kernel profile of K(x, x - y) and of K(x + y, x)
        k1 = K.profile(np.broadcast_to(x - yt, shape), np.broadcast_to(yt, shape))
        k2 = K.profile(np.broadcast_to(x, shape), np.broadcast_to(yt, shape))
        total += float(np.einsum("x,y,xy->", wd[sl] * uphi[sl], wyt, k1 + k2))
    return total


def _far_cross(U, P, K, R1, psi, wpsi, x_order, chunk):
    """- int int_{|y| > R1} (u(x) phi(x-y) K(x, x-y) + u(x) phi(x+y) K(x+y, x)) dy dx.

    Only |y| up to the distance between the supports contributes, so plain
    Gauss-Legendre panels suffice.
    """
    n, s = K.n, K.s
    reach = min(K.rho, U.radius + P.radius + float(np.linalg.norm(U.center - P.center)))
    if reach <= R1:
        return 0.0
    rc, wc = panel_rule(R1, reach, x_order, 1.0)
    yc = (rc[:, None, None] * psi[None, :, :]).reshape(-1, n)
    wyc = ((wc * rc ** (-1.0 - 2.0 * s))[:, None] * wpsi[None, :]).ravel()
    xu, wu = _box_rule(U.edges, x_order)
    xu, wu, uv = _significant(xu, wu, U.value(xu))
    total = 0.0
    k_const = None
    if K.M.constant is not None:
        k_const = K.profile(np.zeros_like(yc), yc)[None, :]
    for sl in _chunks(len(xu), max(1, chunk * 64 // max(1, len(yc)))):
        x = xu[sl][:, None, :]
        zm = x - yc
        zp = x + yc
        shape = (len(x),) + yc.shape
        if k_const is None:
            k1 = K.profile(np.broadcast_to(zm, shape), np.broadcast_to(yc, shape))
            k2 = K.profile(np.broadcast_to(x, shape), np.broadcast_to(yc, shape))
        else:
            k1 = k2 = k_const
        val = P.value(zm) * k1 + P.value(zp) * k2
        total -= float(np.einsum("x,y,xy->", wu[sl] * uv[sl], wyc, val))
    return total


def local_form(u, phi, A, x_order=8):
    """sum_ij int A_ij(x) d_i u d_j phi dx by Gauss-Legendre on the supports."""
    U = _FormFunction.wrap(u)
    P = _FormFunction.wrap(phi)
    edge_sets = [np.union1d(U.edges[k], P.edges[k]) for k in range(U.n)]
    x, w = _box_rule(edge_sets, x_order)
    gu = np.asarray(U.grad(x), dtype=float)
    gp = np.asarray(P.grad(x), dtype=float)
    Ax = np.asarray(A(x), dtype=float)
    return float(np.einsum("q,qi,qij,qj->", w, gu, Ax, gp))


class LimitMatrixField:
    """x -> (n/omega) int psi psi^T / |M(x, 0) psi|^{n+2}: the local limit of M."""

    def __init__(self, M, sphere_level=3):
        self.M = M
        self.n = M.n
        self.rule = sphere_rule(M.n, sphere_level)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return recover_A(self.M.at_origin(x), self.rule)


@dataclass(frozen=True)
class FormLimitReport:
    s: np.ndarray
    values: np.ndarray
    target: float
    abs_err: np.ndarray
    rel_err: np.ndarray
    experiment: str = "form-limit"
    flagged: bool = False
    reference_scale: float = math.nan

    def rows(self):
        return [{"experiment": self.experiment, "s": float(s), "ell": "", "value": float(v),
                 "target": float(self.target), "abs_err": float(a), "rel_err": float(r)}
                for s, v, a, r in zip(self.s, self.values, self.abs_err, self.rel_err)]


def form_limit_s1(u, phi, M, s_grid=(0.7, 0.8, 0.9, 0.95, 0.99), rho=math.inf, **kw):
    """B_s(u, phi) along s -> 1 against sum_ij int A_ij d_i u d_j phi."""
    s_vals = np.array(sorted(s_grid), dtype=float)
    target = local_form(u, phi, LimitMatrixField(M))
    vals = np.array([fractional_form(u, phi, KernelSpec(M, s, rho), **kw) for s in s_vals])
    err = np.abs(vals - target)
    rel = err / abs(target) if target != 0 else err
    flagged = bool(np.any(np.diff(err) > 0))
    return FormLimitReport(s_vals, vals, target, err, rel, "form-limit-s1", flagged)


def mass_limit_target(u, phi, M, sphere_level=3, x_order=8):
    """(1/omega) int u phi(x) int_S |M_inf(x, psi) psi|^{-n} dpsi dx."""
    if M.at_infinity is None:
        raise PreconditionError("the s -> 0 limit with rho = inf needs M.at_infinity")
    n = M.n
    U = _FormFunction.wrap(u)
    P = _FormFunction.wrap(phi)
    edge_sets = [np.union1d(U.edges[k], P.edges[k]) for k in range(n)]
    x, w = _box_rule(edge_sets, x_order)
    rule = sphere_rule(n, sphere_level)
    Minf = M.at_infinity(x[:, None, :], rule.nodes[None, :, :])
    Mpsi = np.einsum("xqij,qj->xqi", Minf, rule.nodes)
    ang = np.sum(Mpsi * Mpsi, axis=-1) ** (-n / 2.0) @ rule.weights
    return float(np.sum(w * U.value(x) * P.value(x) * ang) / sphere_area(n))


def form_limit_s0(u, phi, M, rho=math.inf, s_grid=(0.2, 0.1, 0.05, 0.01), **kw):
    """B_s(u, phi) along s -> 0.

    For rho = inf the target is the mass term of ``mass_limit_target``; for
    finite rho the target is 0 and ``rel_err`` is |B_s| relative to the
    magnitude at the largest s of the grid.
    """
    s_vals = np.array(sorted(s_grid), dtype=float)
    vals = np.array([fractional_form(u, phi, KernelSpec(M, s, rho), **kw) for s in s_vals])
    if math.isinf(rho):
        target = mass_limit_target(u, phi, M)
        err = np.abs(vals - target)
        rel = err / abs(target) if target != 0 else err
        scale = abs(target)
    else:
        target = 0.0
        err = np.abs(vals)
        scale = abs(vals[-1])
        rel = err / scale if scale > 0 else err
    flagged = bool(np.any(np.diff(err[::-1]) > 0))
    return FormLimitReport(s_vals, vals, target, err, rel, "form-limit-s0", flagged, scale)


# ------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepReport:
    s: np.ndarray
    distances: np.ndarray
    max_diffs: np.ndarray
    norms_inf: np.ndarray
    bounds_inf: np.ndarray
    bounds_ok: np.ndarray
    local_max: float
    local_bounds_ok: bool
    reports: list = field(default_factory=list, compare=False)
    ell: float = math.nan

    @property
    def strictly_decreasing(self):
        return bool(np.all(np.diff(self.distances) < 0))

    @property
    def flagged(self):
        """True when one adjacent pair is inverted by less than 1e-6 (quadrature noise)."""
        inc = np.diff(self.distances)
        bad = inc >= 0
        return bool(np.any(bad) and np.all(inc[bad] < 1e-6))

    def rows(self, experiment="sweep-s"):
        ell = "" if math.isnan(self.ell) else self.ell
        return [{"experiment": experiment, "s": float(s), "ell": ell, "value": float(d),
                 "target": 0.0, "abs_err": float(d), "rel_err": float(d / self.local_max) if self.local_max else float(d)}
                for s, d in zip(self.s, self.distances)]


def sweep_s(M, mesh, data, s_grid, A, rho=math.inf, opts=None, u_local=None):
    """Solve at every s of the grid and compare with the local solution for A.

    ``u_local`` may be supplied to measure distances to another reference
    (the mollified sweep compares against the rough-coefficient solution).
    """
    opts = opts or SolverOptions()
    s_vals = np.array(sorted(s_grid), dtype=float)
    u1, rep1 = solve_local_fem(A, mesh, data, opts)
    ref = u1 if u_local is None else u_local
    dist, mx, ninf, binf, ok, reps = [], [], [], [], [], []
    for s in s_vals:
        try:
            us, rep = solve_semilinear(KernelSpec(M, float(s), rho), mesh, data, opts)
        except Exception as exc:
            raise type(exc)(f"sweep_s failed at s={s}: {exc}") from exc
        d = us - ref
        dist.append(d.l2_norm())
        mx.append(d.max_norm())
        ninf.append(rep.norm_inf)
        binf.append(rep.bound_inf)
        ok.append(rep.bounds_ok)
        reps.append(rep)
    return SweepReport(s_vals, np.array(dist), np.array(mx), np.array(ninf), np.array(binf),
                       np.array(ok), u1.max_norm(), rep1.bounds_ok, reps + [rep1])


@dataclass(frozen=True)
class SmoothingReport:
    ell: np.ndarray
    s: np.ndarray
    distances: np.ndarray  # [ell, s] distance of u_{s, ell} to the rough local solution
    local_distances: np.ndarray  # distance of u_{1, ell} to the rough local solution
    bounds_ok: bool
    sweeps: list = field(default_factory=list, compare=False)

    @property
    def outer_decreasing(self):
        return bool(np.all(np.diff(self.local_distances) <= 1e-12))

    def rows(self):
        out = []
        for i, ell in enumerate(self.ell):
            for j, s in enumerate(self.s):
                d = float(self.distances[i, j])
                out.append({"experiment": "smoothing", "s": float(s), "ell": float(ell), "value": d,
                            "target": 0.0, "abs_err": d, "rel_err": d})
            d = float(self.local_distances[i])
            out.append({"experiment": "smoothing-local", "s": 1.0, "ell": float(ell), "value": d,
                        "target": 0.0, "abs_err": d, "rel_err": d})
        return out


def smoothing_sweep(A_rough, ell_grid, s_grid, mesh, data, rho=math.inf, opts=None, H=None):
    """Sweep s for every mollified field A_ell and compare with the rough local solution."""
    opts = opts or SolverOptions()
    u_rough, rep_rough = solve_local_fem(A_rough, mesh, data, opts)
    ok = rep_rough.bounds_ok
    ells = np.array(sorted(ell_grid), dtype=float)
    dist, local, sweeps = [], [], []
    for ell in ells:
        A_ell = mollify_A_field(A_rough, ell)
        M_ell = build_M_field(A_ell, H)
        sw = sweep_s(M_ell, mesh, data, s_grid, A_ell, rho, opts, u_local=u_rough)
        u1_ell, rep1 = solve_local_fem(A_ell, mesh, data, opts)
        sw = SweepReport(sw.s, sw.distances, sw.max_diffs, sw.norms_inf, sw.bounds_inf,
                         sw.bounds_ok, sw.local_max, sw.local_bounds_ok, sw.reports, float(ell))
        dist.append(sw.distances)
        local.append((u1_ell - u_rough).l2_norm())
        ok = ok and bool(np.all(sw.bounds_ok)) and rep1.bounds_ok
        sweeps.append(sw)
    return SmoothingReport(ells, np.array(sorted(s_grid), dtype=float), np.array(dist),
                           np.array(local), ok, sweeps)


# ------------------------------------------------- mollified seminorm

def _bump_moment():
    # int |t| b(t) dt for the unit-mass bump b(t) = (15/16) (1 - t^2)^2 on [-1, 1]
    t, w = gauss_legendre(16)
    return float(np.sum(w * np.abs(t) * (15.0 / 16.0) * (1.0 - t * t) ** 2))


def mollify_discrete(u, eps, order=8):
    """Nodal values of u * b_eps for a P1 function, on the mesh padded by one element.

    With eps < h the convolution at a node only sees the two adjacent
    elements; it is integrated exactly by Gauss-Legendre on [-eps, 0] and
    [0, eps].  The padding keeps the spread support inside the new mesh.
    """
    mesh = u.mesh
    if not 0.0 < eps < mesh.h:
        raise DomainError("mollification radius must lie in (0, h)")
    big = Mesh(mesh.a - mesh.h, mesh.b + mesh.h, mesh.N + 2)
    ub = DiscreteFunction(big, np.concatenate([[0.0], u.coeffs, [0.0]]))
    tg, wg = gauss_legendre(order)
    x = big.interior
    vals = np.zeros_like(x)
    for lo, hi in ((-1.0, 0.0), (0.0, 1.0)):
        t = lo + 0.5 * (hi - lo) * (tg + 1.0)
        w = 0.5 * (hi - lo) * wg * (15.0 / 16.0) * (1.0 - t * t) ** 2
        vals += np.sum(w[None, :] * ub(x[:, None] - eps * t[None, :]), axis=1)
    return ub, DiscreteFunction(big, vals)


@dataclass(frozen=True)
class MollifiedSeminormReport:
    eps: np.ndarray
    seminorm: float
    mollified: np.ndarray

    @property
    def holds(self):
        return bool(np.all(self.mollified <= self.seminorm + 1e-8))


def mollified_seminorm_check(u, eps_grid, s):
    """Compare [u_eps]_s with [u]_s for every eps of the grid."""
    eps = np.array(sorted(eps_grid, reverse=True), dtype=float)
    ub, _ = mollify_discrete(u, eps[0])
    base = gagliardo_seminorm(ub, s)
    moll = np.array([gagliardo_seminorm(mollify_discrete(u, e)[1], s) for e in eps])
    return MollifiedSeminormReport(eps, base, moll)
