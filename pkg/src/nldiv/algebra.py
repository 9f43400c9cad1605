"""Special functions, the normalising constant c_{n,s} and small dense
symmetric linear algebra (n <= 3).

Everything here is a pure function of its inputs.  Matrix routines accept
stacked arrays of shape ``(..., n, n)`` so that whole fields of matrices can
be processed in one call.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import DimensionError, DomainError

SUPPORTED_DIMENSIONS = (1, 2, 3)

# Lanczos approximation, g = 7, nine terms.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _gamma_lanczos(x):
    # valid for x >= 0.5
    x = x - 1.0
    acc = np.full_like(x, _LANCZOS_COEF[0])
    for k, coef in enumerate(_LANCZOS_COEF[1:], start=1):
        acc = acc + coef / (x + k)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * np.exp(-t) * acc


def gamma(x):
    """Euler Gamma function for positive arguments.

    Lanczos rational approximation on [0.5, inf) and the reflection formula
    below 0.5.  Accepts scalars or arrays; returns the same shape.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError("gamma is only provided for finite x > 0")
    small = arr < 0.5
    out = np.empty_like(arr)
    if np.any(~small):
        out[~small] = _gamma_lanczos(arr[~small])
    if np.any(small):
        xs = arr[small]
        out[small] = math.pi / (np.sin(math.pi * xs) * _gamma_lanczos(1.0 - xs))
    if out.ndim == 0:
        return float(out)
    return out


def check_dimension(n):
    if n not in SUPPORTED_DIMENSIONS:
        raise DimensionError(f"dimension must be one of {SUPPORTED_DIMENSIONS}, got {n!r}")
    return n


def sphere_area(n):
    """Surface measure of the unit sphere in R^n.

    For n = 1 the "sphere" is {-1, +1} with counting measure, so the value
    is 2.  This keeps the limits of c_{n,s} and the A <-> M formula
    consistent in one dimension.
    """
    check_dimension(n)
    return {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}[n]


def unit_ball_volume(n):
    return sphere_area(n) / n


def c_ns(n, s):
    """Normalising constant 2^{2s} G((n+2s)/2) s (1-s) / (pi^{n/2} G(2-s))."""
    check_dimension(n)
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie in the open interval (0, 1), got {s!r}")
    num = 2.0 ** (2.0 * s) * gamma((n + 2.0 * s) / 2.0) * s * (1.0 - s)
    return num / (math.pi ** (n / 2.0) * gamma(2.0 - s))


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        lam = self.eigenvalues
        O = self.eigenvectors
        return np.einsum("...ik,...k,...jk->...ij", O, lam, O)


def as_sym(A):
    """Return a symmetric float copy of ``A`` (average with its transpose).

    The stored matrix is exactly symmetric, which the Jacobi sweep below
    relies on.
    """
    A = np.array(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {A.shape}")
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def eigh_sym(A, tol=1e-15, max_sweeps=60):
    """Cyclic Jacobi eigendecomposition of symmetric matrices.

    Parameters
    ----------
    A : array_like, shape (..., n, n)
        Symmetric matrices; a stack is processed in parallel.

    Returns
    -------
    Spectrum
        Eigenvalues sorted ascending; ties are kept in the order the sweep
        produced them.  Every eigenvector is normalised so that its first
        component that is not negligible is positive.
    """
    a = as_sym(A)
    n = a.shape[-1]
    batch = a.shape[:-2]
    a = a.reshape((-1, n, n)).copy()
    v = np.broadcast_to(np.eye(n), a.shape).copy()
    scale = np.maximum(np.sqrt(np.sum(a * a, axis=(-1, -2))), np.finfo(float).tiny)
    pairs = [(p, q) for p in range(n) for q in range(p + 1, n)]
    for _ in range(max_sweeps):
        off = np.sqrt(sum(2.0 * a[:, p, q] ** 2 for p, q in pairs)) if pairs else np.zeros(len(a))
        if np.all(off <= tol * scale):
            break
        for p, q in pairs:
            apq = a[:, p, q]
            active = np.abs(apq) > tol * scale * 1e-3
            if not np.any(active):
                continue
            safe = np.where(active, apq, 1.0)
            theta = (a[:, q, q] - a[:, p, p]) / (2.0 * safe)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            sn = t * c
            # rotate columns p, q then rows p, q
            ap = a[:, :, p].copy()
            aq = a[:, :, q].copy()
            a[:, :, p] = c[:, None] * ap - sn[:, None] * aq
            a[:, :, q] = sn[:, None] * ap + c[:, None] * aq
            ap = a[:, p, :].copy()
            aq = a[:, q, :].copy()
            a[:, p, :] = c[:, None] * ap - sn[:, None] * aq
            a[:, q, :] = sn[:, None] * ap + c[:, None] * aq
            a[:, p, q] = 0.0
            a[:, q, p] = 0.0
            vp = v[:, :, p].copy()
            vq = v[:, :, q].copy()
            v[:, :, p] = c[:, None] * vp - sn[:, None] * vq
            v[:, :, q] = sn[:, None] * vp + c[:, None] * vq
    lam = np.diagonal(a, axis1=-2, axis2=-1).copy()
    order = np.argsort(lam, axis=-1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    # sign convention: first non-negligible component positive
    lead = np.argmax(np.abs(v) > 1e-10, axis=-2)
    first = np.take_along_axis(v, lead[:, None, :], axis=-2)[:, 0, :]
    v = v * np.where(first < 0.0, -1.0, 1.0)[:, None, :]
    return Spectrum(lam.reshape(batch + (n,)), v.reshape(batch + (n, n)))


def operator_norm(A):
    """Largest singular value sup_{|xi|=1} |A xi| (stacked input allowed)."""
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {A.shape}")
    gram = np.swapaxes(A, -1, -2) @ A
    top = eigh_sym(gram).eigenvalues[..., -1]
    out = np.sqrt(np.maximum(top, 0.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LipschitzReport:
    max_eigenvalue_gap: float
    norm_gap: float

    @property
    def holds(self):
        return self.max_eigenvalue_gap <= self.norm_gap + 1e-10


def eigenvalue_lipschitz_gap(A, B):
    """Compare max_i |lambda_i(A) - lambda_i(B)| with ||A - B||."""
    A = as_sym(A)
    B = as_sym(B)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    la = eigh_sym(A).eigenvalues
    lb = eigh_sym(B).eigenvalues
    return LipschitzReport(float(np.max(np.abs(la - lb))), float(np.max(operator_norm(A - B))))
