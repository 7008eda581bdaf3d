"""P1 finite elements on simplicial meshes: stiffness/mass assembly, harmonic
extension, and the Dirichlet-to-Neumann (DtN) operator.

The DtN map is the Schur complement of the stiffness matrix onto boundary
unknowns, applied matrix-free (one preconditioned CG interior solve per
apply).  ``DtNOperator.dense()`` materializes it for boundary sizes small
enough to feed dense eigensolves.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import DegenerateCell, SolverDivergence
from .mesh import SimplicialMesh, lumped_boundary_weights

CG_RTOL = 1e-10
DENSE_BOUNDARY_LIMIT = 2000


def _assemble(local: np.ndarray, simplices: np.ndarray, nv: int) -> sparse.csr_matrix:
    k = simplices.shape[1]
    rows = np.repeat(simplices, k, axis=1).ravel()
    cols = np.tile(simplices, (1, k)).ravel()
    A = sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(nv, nv)).tocsr()
    return (A + A.T) * 0.5


def assemble_stiffness(mesh: SimplicialMesh) -> sparse.csr_matrix:
    """Dirichlet-energy matrix: u^T K u = integral of |grad u|^2."""
    local, vols = _kernels.stiffness_entries(mesh.vertices, mesh.cells)
    if vols.min() <= 0.0:
        raise DegenerateCell(int(np.argmin(vols)))
    return _assemble(local, mesh.cells, len(mesh.vertices))


def assemble_interior_mass(mesh: SimplicialMesh) -> sparse.csr_matrix:
    local, _ = _kernels.mass_entries(mesh.vertices, mesh.cells)
    return _assemble(local, mesh.cells, len(mesh.vertices))


def assemble_boundary_mass(mesh: SimplicialMesh) -> sparse.csr_matrix:
    """Consistent mass of the boundary complex, indexed over all vertices."""
    local, _ = _kernels.mass_entries(mesh.vertices, mesh.boundary_facets)
    return _assemble(local, mesh.boundary_facets, len(mesh.vertices))


def _cg(A, b, rtol=CG_RTOL, x0=None):
    n = A.shape[0]
    d = A.diagonal()
    d[d == 0.0] = 1.0
    M = sparse.diags(1.0 / d)
    maxiter = int(50 * math.sqrt(n)) + 10
    x, info = spla.cg(A, b, x0=x0, rtol=rtol, atol=0.0, maxiter=maxiter, M=M)
    if info > 0:
        res = float(np.linalg.norm(A @ x - b) / max(np.linalg.norm(b), 1e-300))
        raise SolverDivergence(maxiter, res)
    return x


class DtNOperator:
    """f on the boundary -> weak Neumann data of its harmonic extension.

    The returned data is integrated against boundary hat functions (rows of
    the stiffness residual); divide by the lumped boundary mass for a
    pointwise normal derivative.
    """

    def __init__(self, mesh: SimplicialMesh, stiffness=None):
        self.mesh = mesh
        K = assemble_stiffness(mesh) if stiffness is None else stiffness
        self.K = K
        self.boundary_index = mesh.boundary_vertices
        nv = K.shape[0]
        mask = np.zeros(nv, dtype=bool)
        mask[self.boundary_index] = True
        self.interior_index = np.nonzero(~mask)[0]
        self.K_ii = K[self.interior_index][:, self.interior_index].tocsr()
        self.K_ib = K[self.interior_index][:, self.boundary_index].tocsr()
        self.K_bi = self.K_ib.T.tocsr()
        self.K_bb = K[self.boundary_index][:, self.boundary_index].tocsr()
        self._dense = None
        self.lumped_mass = lumped_boundary_weights(mesh)[self.boundary_index]

    @property
    def size(self) -> int:
        return len(self.boundary_index)

    def extend(self, f: np.ndarray) -> np.ndarray:
        """Full-mesh harmonic extension of boundary values f."""
        u = np.zeros(self.K.shape[0])
        u[self.boundary_index] = f
        if len(self.interior_index):
            u[self.interior_index] = _cg(self.K_ii, -self.K_ib @ f)
        return u

    def apply(self, f: np.ndarray) -> np.ndarray:
        if self._dense is not None:
            return self._dense @ f
        u = self.extend(f)
        return (self.K @ u)[self.boundary_index]

    def energy(self, f: np.ndarray) -> float:
        """Dirichlet energy of the harmonic extension of f."""
        if self._dense is not None:
            return float(f @ (self._dense @ f))
        u = self.extend(f)
        return float(u @ (self.K @ u))

    def dense(self) -> np.ndarray:
        """Materialize the Schur complement K_bb - K_bi K_ii^-1 K_ib."""
        if self._dense is None:
            nb = self.size
            if nb > DENSE_BOUNDARY_LIMIT:
                raise ValueError(f"boundary size {nb} exceeds dense limit {DENSE_BOUNDARY_LIMIT}")
            S = self.K_bb.toarray()
            if len(self.interior_index):
                X = np.empty((len(self.interior_index), nb))
                B = self.K_ib.toarray()
                for j in range(nb):
                    X[:, j] = _cg(self.K_ii, B[:, j], rtol=1e-12)
                S -= self.K_bi @ X
            S = 0.5 * (S + S.T)
            self._dense = S
        return self._dense


def harmonic_extend(mesh: SimplicialMesh, boundary_values: np.ndarray, dtn: DtNOperator | None = None) -> np.ndarray:
    """Solve the discrete Laplace problem with Dirichlet data on the boundary.

    `boundary_values` may be indexed over boundary vertices (ascending order)
    or over all vertices (values off the boundary are ignored).
    """
    op = dtn if dtn is not None else DtNOperator(mesh)
    f = np.asarray(boundary_values, dtype=float)
    if f.shape[0] == op.K.shape[0]:
        f = f[op.boundary_index]
    if not np.all(np.isfinite(f)):
        raise ValueError("boundary values must be finite")
    return op.extend(f)


def dtn_apply(op: DtNOperator, f: np.ndarray) -> np.ndarray:
    return op.apply(np.asarray(f, dtype=float))
