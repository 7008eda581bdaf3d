"""convexlab: numerical laboratory for spectral and rigidity inequalities
on compact domains with convex boundary.

Subpackages/modules:
  mesh       simplicial meshes of the test-domain families
  fem        P1 assembly and the Dirichlet-to-Neumann (Schur) operator
  spectral   Steklov and boundary Laplace-Beltrami spectra + ball oracle
  nonlinear  trace-quotient minimization and semilinear boundary solvers
  topology   cohomology ranks over prime fields and boundary classification
  verify     the inequality/identity verification suite
  cli        command-line front end (entry point ``convexlab``)
"""

__version__ = "0.1.0"

from .errors import ConvexLabError
from .fem import DtNOperator, harmonic_extend
from .mesh import (
    DomainSpec,
    SimplicialMesh,
    ellipsoid,
    generate_domain,
    measure,
    refine,
    solid_torus,
    spherical_cap,
    support_body,
    unit_ball,
)
from .nonlinear import minimize_quotient, solve_exp_disc, solve_semilinear
from .spectral import ball_harmonic_oracle, boundary_laplacian_spectrum, steklov_spectrum
from .topology import cohomology_ranks, consistency_audit
from .verify import run_suite

__all__ = [
    "ConvexLabError",
    "DomainSpec",
    "SimplicialMesh",
    "DtNOperator",
    "ball_harmonic_oracle",
    "boundary_laplacian_spectrum",
    "cohomology_ranks",
    "consistency_audit",
    "ellipsoid",
    "generate_domain",
    "harmonic_extend",
    "measure",
    "minimize_quotient",
    "refine",
    "run_suite",
    "solid_torus",
    "solve_exp_disc",
    "solve_semilinear",
    "spherical_cap",
    "steklov_spectrum",
    "support_body",
    "unit_ball",
]
