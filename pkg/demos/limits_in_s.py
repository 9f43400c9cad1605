"""The nonlocal form approaches the local form as s -> 1 and the L2 mass form as s -> 0."""
from nldiv.asymptotics import form_limit_s0, form_limit_s1
from nldiv.kernel import gaussian_probe
from nldiv.spectral import MatrixFieldM, anisotropic_diag_field, build_M_field

g = gaussian_probe(1)
for label, M in (("identity", MatrixFieldM.identity(1)),
                 ("A = 2", build_M_field(anisotropic_diag_field(1, [2.0])))):
    rep = form_limit_s1(g, g, M)
    print(f"s -> 1, {label}: target {rep.target:.6f}")
    for s, v, r in zip(rep.s, rep.values, rep.rel_err):
        print(f"   s={s:.2f}  B_s={v:.6f}  rel.err={r:.2%}")

rep = form_limit_s0(g, g, MatrixFieldM.identity(1))
print(f"\ns -> 0, infinite horizon: target {rep.target:.6f}")
for s, v, r in zip(rep.s, rep.values, rep.rel_err):
    print(f"   s={s:.2f}  B_s={v:.6f}  rel.err={r:.2%}")

rep = form_limit_s0(g, g, MatrixFieldM.identity(1), rho=1.0)
print("\ns -> 0, horizon 1: the form vanishes linearly in s")
for s, v in zip(rep.s, rep.values):
    print(f"   s={s:.2f}  B_s={v:.6f}  B_s/s={v / s:.4f}")
