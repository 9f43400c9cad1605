"""Normalising constant c_{n,s} and its two endpoint limits, plus the Jacobi eigensolver."""
import numpy as np

from nldiv.algebra import c_ns, eigh_sym, sphere_area

print("c_{n,s} / s near 0 tends to 2/omega, c_{n,s} / (1-s) near 1 tends to 4n/omega")
for n in (1, 2, 3):
    w = sphere_area(n)
    lo = c_ns(n, 1e-4) / 1e-4
    hi = c_ns(n, 1 - 1e-4) / 1e-4
    print(f"n={n}  c/s={lo:.6f} (2/omega={2 / w:.6f})  c/(1-s)={hi:.6f} (4n/omega={4 * n / w:.6f})")

print("\nc_{1,1/2} = 1/pi:", c_ns(1, 0.5), 1 / np.pi)

A = np.array([[2.0, 0.3, 0.1], [0.3, 1.0, -0.2], [0.1, -0.2, 0.5]])
spec = eigh_sym(A)
lam = spec.eigenvalues
print("\nJacobi eigenvalues:", lam)
print("numpy eigenvalues: ", np.linalg.eigvalsh(A))
print("reconstruction error:", np.abs(spec.reconstruct() - A).max())
