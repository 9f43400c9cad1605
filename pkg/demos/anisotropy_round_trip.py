"""From a coefficient matrix A to the kernel matrix N_A and back.

The ellipsoidal second moments of N_A reproduce A, so the nonlocal kernel
built from N_A has the local operator div(A grad u) as its s -> 1 limit.
"""
import numpy as np

from nldiv.spectral import build_N, recover_A, rotated_field, sphere_rule

A = np.array([[1.25, 0.75], [0.75, 1.25]])
N = build_N(A)
print("A =\n", A)
print("N_A =\n", np.round(N, 5))
print("recovered A =\n", np.round(recover_A(N, sphere_rule(2, 2)), 12))

rng = np.random.default_rng(0)
rule = sphere_rule(3, 2)
worst = 0.0
for _ in range(100):
    A3 = rotated_field(rng.uniform(0.5, 2.0, 3), rng.uniform(0, 2 * np.pi, 3)).constant
    worst = max(worst, np.abs(recover_A(build_N(A3), rule) - A3).max())
print(f"\n100 random 3x3 fields: worst round-trip error {worst:.2e}")
