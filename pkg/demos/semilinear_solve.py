"""Solve the semilinear Dirichlet problem on (-1, 1) and check the a priori bounds.

The sup norm of u is bounded by h^{-1}(Q) and the energy by
2 h^{-1}(Q)(|f|_1 + Q |a|_1); the solver reports both.
"""
from nldiv.kernel import KernelSpec
from nldiv.solver import NONLINEARITIES, ProblemData, getoor_reference, solve_semilinear
from nldiv.spectral import MatrixFieldM, build_M_field, localized_field
from nldiv.stiffness import Mesh

mesh = Mesh(-1.0, 1.0, 128)
M = build_M_field(localized_field(1))
for name in ("identity", "cubic", "atan"):
    data = ProblemData(1.0, 0.4, 0.45, NONLINEARITIES[name])
    u, rep = solve_semilinear(KernelSpec(M, 0.5), mesh, data)
    print(f"h={name:8s} |u|_inf={rep.norm_inf:.4f} <= {rep.bound_inf:.4f}   "
          f"energy={rep.energy:.4f} <= {rep.bound_energy:.4f}   ok={rep.bounds_ok}")

print("\nlinear problem (-Delta)^s u = 1 against the exact solution")
for s in (0.25, 0.5, 0.75):
    data = ProblemData(0.0, 1.0, 1.0, NONLINEARITIES["identity"], linear_mode=True)
    errs = []
    for N in (32, 64, 128, 256):
        u, _ = solve_semilinear(KernelSpec(MatrixFieldM.identity(1), s), Mesh(-1.0, 1.0, N), data)
        errs.append(u.l2_error(lambda x: getoor_reference(x, s)))
    print(f"s={s}: L2 errors", " ".join(f"{e:.2e}" for e in errs))
