"""Apply the nonlocal operator pointwise to a Gaussian and compare with its Fourier value.

For M = Id in 2D and u = exp(-|x|^2/2), (-Delta)^s u(0) = 4^s Gamma(1+s).
"""
import math

import numpy as np

from nldiv.kernel import KernelSpec, apply_pointwise, gaussian_probe
from nldiv.spectral import MatrixFieldM, build_M_field, localized_field

g = gaussian_probe(2)
for s in (0.2, 0.5, 0.8):
    K = KernelSpec(MatrixFieldM.identity(2), s)
    val = apply_pointwise(K, g, np.zeros(2))
    print(f"s={s}: computed {float(np.squeeze(val)):.10f}  exact {4 ** s * math.gamma(1 + s):.10f}")

# a genuinely anisotropic, space-dependent kernel in 1D
M = build_M_field(localized_field(1))
g1 = gaussian_probe(1)
K = KernelSpec(M, 0.4)
print("\nlocalized field, s=0.4")
for x in np.linspace(-1.5, 1.5, 7):
    print(f"   Lu({x:+.1f}) = {float(np.squeeze(apply_pointwise(K, g1, [x]))):.6f}")
