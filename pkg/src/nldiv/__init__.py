"""Anisotropic nonlocal operators in divergence form.

Modules:
    algebra      special functions, the constant c_{n,s}, small symmetric eigenproblems
    spectral     matrix fields A and M, the map A -> N_A and its inverse, mollification
    kernel       kernels K = c / |M(z, x-z)(x-z)|^{n+2s}, pointwise operator, probes
    stiffness    1D P1 meshes and stiffness matrices of the kernel form
    solver       convex functional, truncation loop and bound checks
    asymptotics  limits s -> 1 and s -> 0, solution sweeps, mollified coefficients
    config, cli  experiment files and the ``nldiv`` command
"""
from .algebra import c_ns, eigh_sym, gamma, sphere_area
from .errors import (AssemblyError, ConfigError, ConvergenceError, DimensionError, DomainError,
                     DominationError, LineSearchError, NldivError, PreconditionError, SingularityError)
from .kernel import KernelSpec, apply_pointwise
from .solver import ProblemData, SolverOptions, get_nonlinearity, solve_local_fem, solve_semilinear
from .spectral import MatrixFieldA, MatrixFieldM, build_M_field, build_N, recover_A
from .stiffness import DiscreteFunction, Mesh, assemble_stiffness

__version__ = "0.1.0"
