"""Solutions u_s of the nonlocal problem converge to the local solution as s -> 1.

With a = 1, f = Q = 0.4 and h = identity the local problem -u'' + u = 0.4 has
the closed-form solution 0.4 (1 - cosh x / cosh 1).
"""
from nldiv.asymptotics import sweep_s
from nldiv.solver import NONLINEARITIES, ProblemData
from nldiv.spectral import build_M_field, identity_field
from nldiv.stiffness import Mesh

A = identity_field(1)
data = ProblemData(1.0, 0.4, 0.4, NONLINEARITIES["identity"])
rep = sweep_s(build_M_field(A), Mesh(-1.0, 1.0, 128), data, (0.6, 0.75, 0.9, 0.95), A)
for s, d, m in zip(rep.s, rep.distances, rep.norms_inf):
    print(f"s={s:.2f}  |u_s - u_1|_L2={d:.5f}  |u_s|_inf={m:.4f}")
print("strictly decreasing:", rep.strictly_decreasing)
