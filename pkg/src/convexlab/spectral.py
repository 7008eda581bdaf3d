"""Steklov and boundary Laplace-Beltrami spectra, plus the exact
spherical-harmonic oracle on the unit ball.

Eigensolves are dense generalized symmetric solves when the boundary is
small enough (the usual case at desk scale) and LOBPCG with a Jacobi
preconditioner beyond that.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from . import _kernels, harmonics
from .errors import EigenNoConvergence, QuadratureFailure
from .fem import DENSE_BOUNDARY_LIMIT, DtNOperator, _assemble
from .mesh import SimplicialMesh, dumps_17g

CLUSTER_RTOL = 1e-6


@dataclass
class SpectrumResult:
    which: str                      # "Steklov" | "BoundaryLaplacian"
    eigenvalues: np.ndarray         # ascending
    eigenvectors: np.ndarray        # columns, B-orthonormal, boundary-indexed
    residuals: np.ndarray
    boundary_index: np.ndarray = field(default=None)

    def clusters(self):
        """Group near-degenerate eigenvalues: list of (value, multiplicity)."""
        out = []
        for ev in self.eigenvalues:
            if out and abs(ev - out[-1][0]) <= CLUSTER_RTOL * (1.0 + abs(ev)):
                val, mult = out[-1]
                out[-1] = ((val * mult + ev) / (mult + 1), mult + 1)
            else:
                out.append((float(ev), 1))
        return out

    def to_json(self) -> str:
        return dumps_17g(
            {
                "which": self.which,
                "eigenvalues": list(map(float, self.eigenvalues)),
                "residuals": list(map(float, self.residuals)),
                "multiplicity_clusters": [
                    {"value": v, "multiplicity": m} for v, m in self.clusters()
                ],
            }
        )


def _generalized_eigs(A, B, k: int):
    n = A.shape[0]
    if n <= DENSE_BOUNDARY_LIMIT:
        Ad = A if isinstance(A, np.ndarray) else A.toarray()
        Bd = B if isinstance(B, np.ndarray) else B.toarray()
        w, V = la.eigh(Ad, Bd)
        return w[: k + 1], V[:, : k + 1]
    Asp = sparse.csr_matrix(A)
    Bsp = sparse.csr_matrix(B)
    rng = np.random.default_rng(0)
    X = rng.standard_normal((n, k + 1))
    X[:, 0] = 1.0
    d = Asp.diagonal() + Bsp.diagonal()
    M = sparse.diags(1.0 / np.maximum(d, 1e-300))
    w, V = spla.lobpcg(Asp, X, B=Bsp, M=M, largest=False, tol=1e-8, maxiter=500)
    order = np.argsort(w)
    return w[order], V[:, order]


def _result(which, A, B, w, V):
    Bmat = B if isinstance(B, np.ndarray) else B.toarray()
    # B-orthonormalize within clusters (dense eigh already returns this)
    res = np.empty(len(w))
    for i in range(len(w)):
        v = V[:, i]
        nrm = np.linalg.norm(v)
        res[i] = np.linalg.norm(A @ v - w[i] * (Bmat @ v)) / max(nrm, 1e-300)
    bad = res > 1e-6 * (1.0 + np.abs(w))
    if np.any(bad):
        raise EigenNoConvergence(
            f"{which}: residual {res[bad].max():.3e} above tolerance"
        )
    return which, np.array(w, dtype=float), V, res


def steklov_spectrum(mesh: SimplicialMesh, k: int, dtn: DtNOperator | None = None) -> SpectrumResult:
    """First k+1 eigenpairs of S f = sigma M_b f (DtN against boundary mass)."""
    op = dtn if dtn is not None else DtNOperator(mesh)
    nb = op.size
    if not 1 <= k <= nb - 1:
        raise ValueError(f"need 1 <= k <= {nb - 1}")
    local, _ = _kernels.mass_entries(mesh.vertices, mesh.boundary_facets)
    Mb_full = _assemble(local, mesh.boundary_facets, len(mesh.vertices))
    Mb = Mb_full[op.boundary_index][:, op.boundary_index]
    S = op.dense()
    w, V = _generalized_eigs(S, Mb, k)
    w[(w < 0) & (w > -1e-10)] = 0.0  # zero mode rounded below zero
    which, w, V, res = _result("Steklov", S, Mb, w, V)
    return SpectrumResult(which, w, V, res, boundary_index=op.boundary_index)


def boundary_laplacian_spectrum(mesh: SimplicialMesh, k: int) -> SpectrumResult:
    """Laplace-Beltrami spectrum of the boundary (n-1)-complex.

    For n = 3 the P1 stiffness of the boundary triangle mesh is exactly the
    cotangent-weight Laplacian; the mass is the barycentric (lumped) vertex
    measure, the standard pairing for cotangent weights.
    """
    bidx = mesh.boundary_vertices
    nb = len(bidx)
    if not 1 <= k <= nb - 1:
        raise ValueError(f"need 1 <= k <= {nb - 1}")
    renum = -np.ones(len(mesh.vertices), dtype=np.int64)
    renum[bidx] = np.arange(nb)
    facets = renum[mesh.boundary_facets]
    verts = np.ascontiguousarray(mesh.vertices[bidx])
    loc_k, _ = _kernels.stiffness_entries(verts, facets)
    loc_m, _ = _kernels.mass_entries(verts, facets)
    K = _assemble(loc_k, facets, nb)
    M = sparse.diags(np.asarray(_assemble(loc_m, facets, nb).sum(axis=1)).ravel())
    w, V = _generalized_eigs(K, M, k)
    which, w, V, res = _result("BoundaryLaplacian", K, M, w, V)
    return SpectrumResult(which, w, V, res, boundary_index=bidx)


def ball_harmonic_oracle(n: int, coefficients: dict, p: float | None = None, rtol: float = 1e-9) -> dict:
    """Exact functionals of F = sum c_lm Y_lm and its harmonic extension.

    Returns dirichlet_energy, boundary_l2, steklov_image, and (if p given)
    boundary_lp = integral of |F|^p over S^(n-1).
    """
    coeffs = {k: float(v) for k, v in coefficients.items()}
    energy = sum(l * c * c for (l, _), c in coeffs.items())
    l2 = sum(c * c for c in coeffs.values())
    out = {
        "dirichlet_energy": energy,
        "boundary_l2": l2,
        "steklov_image": {k: l * c for (l, m), c in coeffs.items() for k in [(l, m)]},
    }
    if p is not None:
        val, achieved = harmonics.integrate_abs_power(n, coeffs, p, rtol=rtol)
        if achieved > rtol:
            raise QuadratureFailure(achieved, rtol)
        out["boundary_lp"] = val
    return out
