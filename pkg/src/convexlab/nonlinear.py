"""Semilinear boundary problems and quotient minimizations.

The optimization variable is always the boundary trace; the interior is
eliminated through the DtN operator, since the quotients depend on the
interior only through the Dirichlet energy of the harmonic extension.
Boundary power nonlinearities are lumped (vertex quadrature), which makes
them diagonal and keeps the descent monotone.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from . import harmonics
from .errors import (
    DomainViolation,
    NewtonStall,
    NonPositiveIterate,
    UnsupportedDimension,
    UnsupportedExponentForm,
)
from .fem import DtNOperator, assemble_boundary_mass, assemble_stiffness
from .mesh import SimplicialMesh, boundary_geometry, dumps_17g, lumped_boundary_weights

CONSTANCY_TOL = 1e-4
CONSTANT_VALUE_RTOL = 5e-3
PGD_MAX_ITER = 5000
ARMIJO_SLOPE = 1e-4
NEWTON_RTOL = 1e-9


@dataclass
class NonlinearRun:
    exponent: Optional[float]
    lam: Optional[float]
    start_descriptor: str
    iterations: int
    final_boundary_values: np.ndarray
    quotient_value: Optional[float]
    residual: float
    classification: str              # Constant | NonConstant | NoConverge
    constancy_ratio: float
    seed: Optional[int] = None
    history: list = field(default_factory=list)   # quotient every 10 iterations
    flat_direction_eigenvalue: Optional[float] = None

    def to_json(self) -> str:
        return dumps_17g(
            {
                "exponent": self.exponent,
                "lambda": self.lam,
                "start": self.start_descriptor,
                "iterations": self.iterations,
                "quotient_value": self.quotient_value,
                "residual": self.residual,
                "classification": self.classification,
                "constancy_ratio": self.constancy_ratio,
                "seed": self.seed,
                "history": [float(h) for h in self.history],
                "flat_direction_eigenvalue": self.flat_direction_eigenvalue,
                "final_boundary_values": [float(v) for v in self.final_boundary_values],
            }
        )


def _constancy_ratio(f: np.ndarray, w: np.ndarray) -> float:
    mean = float(w @ f) / float(w.sum())
    if mean == 0.0:
        return np.inf
    dev = math_sqrt(float(w @ (f - mean) ** 2))
    return dev / (abs(mean) * math_sqrt(float(w.sum())))


def math_sqrt(x: float) -> float:
    return float(np.sqrt(max(x, 0.0)))


# ---------------------------------------------------------------------------
# quotients and projected gradient descent
# ---------------------------------------------------------------------------


def _facet_quadrature(mesh: SimplicialMesh, boundary_index: np.ndarray):
    """Gauss quadrature of the boundary complex for non-polynomial densities.

    Returns (B, W): sparse evaluation matrix from boundary vertex values to
    quadrature nodes and the weight vector, so integral of g(f) over the
    boundary = W . g(B f).  Lumped vertex quadrature badly over-integrates
    powers of one-vertex spikes, which near the critical exponent manufactures
    spurious sub-constant minimizers; an accurate rule removes them.
    """
    facets = mesh.boundary_facets
    renum = -np.ones(len(mesh.vertices), dtype=np.int64)
    renum[boundary_index] = np.arange(len(boundary_index))
    loc = renum[facets]
    from . import _kernels

    meas = _kernels.simplex_measures(mesh.vertices, facets)
    if facets.shape[1] == 2:
        gp, gw = np.polynomial.legendre.leggauss(8)
        s = 0.5 * (gp + 1.0)
        lam = np.column_stack([1.0 - s, s])           # (nq, 2)
        wts = 0.5 * gw
    else:
        gp, gw = np.polynomial.legendre.leggauss(6)
        s = 0.5 * (gp + 1.0)
        ws = 0.5 * gw
        S, T = np.meshgrid(s, s, indexing="ij")
        WS, WT = np.meshgrid(ws, ws, indexing="ij")
        lam = np.column_stack(
            [((1.0 - S) * (1.0 - T)).ravel(), S.ravel(), ((1.0 - S) * T).ravel()]
        )
        wts = (WS * WT * (1.0 - S)).ravel() * 2.0     # (nq,), integrates to 1
    nq, kk = lam.shape
    nf = len(facets)
    rows = np.repeat(np.arange(nf * nq), kk)
    cols = np.repeat(loc, nq, axis=0).ravel()
    vals = np.tile(lam, (nf, 1)).ravel()
    B = sparse.csr_matrix((vals, (rows, cols)), shape=(nf * nq, len(boundary_index)))
    W = np.repeat(meas, nq) * np.tile(wts, nf)
    return B, W


def boundary_quotient(mesh: SimplicialMesh, f: np.ndarray, q: float, dtn: DtNOperator | None = None) -> float:
    """[(q-1) f'Sf + f'Mf] / (integral of |f|^(q+1) over the boundary)^(2/(q+1))."""
    op = dtn if dtn is not None else DtNOperator(mesh)
    f = np.asarray(f, dtype=float)
    if f.shape[0] == op.K.shape[0]:
        f = f[op.boundary_index]
    if np.all(f == 0.0):
        raise ValueError("f must not vanish identically")
    Mb = assemble_boundary_mass(mesh)[op.boundary_index][:, op.boundary_index]
    B, W = _facet_quadrature(mesh, op.boundary_index)
    num = (q - 1.0) * op.energy(f) + float(f @ (Mb @ f))
    den = float(W @ np.abs(B @ f) ** (q + 1)) ** (2.0 / (q + 1.0))
    return num / den


def _pgd_minimize(A, B, W, p, f0, max_iter=PGD_MAX_ITER, gtol=1e-9):
    """Minimize f'Af / (integral |f|^p)^(2/p) by normalized projected descent.

    The denominator is evaluated by the facet Gauss rule (B, W).  Returns
    (f, value, iterations, history, converged); the per-iteration value
    sequence is non-increasing by construction (Armijo backtracking).
    """

    def normalize(f):
        return f / float(W @ np.abs(B @ f) ** p) ** (1.0 / p)

    def dgrad(f):
        g = B @ f
        return B.T @ (W * np.abs(g) ** (p - 2.0) * g)

    f = normalize(np.asarray(f0, dtype=float))
    Af = A @ f
    val = float(f @ Af)
    step = 1.0 / max(np.abs(np.diag(A)).max(), 1e-300)
    history = [val]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = 2.0 * Af - val * 2.0 * dgrad(f)
        gnorm2 = float(grad @ grad)
        if math_sqrt(gnorm2) <= gtol * max(1.0, abs(val)):
            converged = True
            break
        accepted = False
        for _ in range(60):
            cand = normalize(f - step * grad)
            Ac = A @ cand
            cval = float(cand @ Ac)
            if cval <= val - ARMIJO_SLOPE * step * gnorm2:
                f, Af, val = cand, Ac, cval
                step *= 1.5
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True  # step collapsed to rounding: stationary
            break
        if it % 10 == 0:
            history.append(val)
    history.append(val)
    return f, val, it, history, converged


def _random_start(nb: int, seed: int, start_index: int) -> np.ndarray:
    rng = np.random.default_rng([seed, start_index])
    return np.exp(rng.normal(0.0, 1.0, nb))


def minimize_quotient(
    mesh: SimplicialMesh,
    q: float,
    starts: int = 8,
    seed: int = 0,
    dtn: DtNOperator | None = None,
    max_iter: int = PGD_MAX_ITER,
) -> NonlinearRun:
    """Multi-start minimization of the boundary trace quotient.

    Start 0 is the constant; the rest are seeded positive random fields.
    The best run (lowest quotient, ties by start index) is returned.
    """
    n = mesh.intrinsic_dim
    if n > 2 and not q <= n / (n - 2.0) + 1e-12:
        raise ValueError(f"need 1 < q <= {n / (n - 2.0)}")
    op = dtn if dtn is not None else DtNOperator(mesh)
    S = op.dense()
    Mb = assemble_boundary_mass(mesh)[op.boundary_index][:, op.boundary_index].toarray()
    w = op.lumped_mass
    B, W = _facet_quadrature(mesh, op.boundary_index)
    A = (q - 1.0) * S + Mb
    nb = op.size
    p = q + 1.0

    best = None
    for s in range(starts + 1):
        f0 = np.ones(nb) if s == 0 else _random_start(nb, seed, s)
        f, val, iters, history, converged = _pgd_minimize(A, B, W, p, f0, max_iter=max_iter)
        if best is None or val < best[1]:
            tag = "Constant" if s == 0 else f"RandomSeeded({seed},{s})"
            best = (f, val, iters, history, converged, tag)
    f, val, iters, history, converged, tag = best

    area = float(np.ones(nb) @ (Mb @ np.ones(nb)))
    const_val = area ** ((q - 1.0) / (q + 1.0))
    ratio = _constancy_ratio(f * np.sign(w @ f), w)
    g = B @ f
    grad = 2.0 * (A @ f) - 2.0 * val * (B.T @ (W * np.abs(g) ** (p - 2.0) * g))
    res = float(np.linalg.norm(grad))
    if not converged:
        classification = "NoConverge"
    elif ratio < CONSTANCY_TOL and abs(val - const_val) <= CONSTANT_VALUE_RTOL * const_val:
        classification = "Constant"
    else:
        classification = "NonConstant"
    return NonlinearRun(
        exponent=q,
        lam=1.0 / (q - 1.0),
        start_descriptor=tag,
        iterations=iters,
        final_boundary_values=f,
        quotient_value=val,
        residual=res,
        classification=classification,
        constancy_ratio=ratio,
        seed=seed,
        history=history,
    )


def escobar_quotient_minimize(
    mesh: SimplicialMesh,
    starts: int = 8,
    seed: int = 0,
    dtn: DtNOperator | None = None,
) -> float:
    """Minimize the zero-scalar-curvature boundary quotient on a flat 3-domain.

    Q(f) = [c f'Sf + 2 f'(H.W)f] / (lumped integral of |f|^4)^(1/2) with
    c = 4(n-1)/(n-2) = 8 for n = 3 and H the analytic mean curvature.
    """
    if mesh.intrinsic_dim != 3 or mesh.ambient_dim != 3:
        raise UnsupportedDimension("Escobar quotient implemented for flat 3-domains")
    op = dtn if dtn is not None else DtNOperator(mesh)
    S = op.dense()
    geom = boundary_geometry(mesh)
    w = op.lumped_mass
    A = 8.0 * S + 2.0 * np.diag(geom.mean_curvature * w)
    A = 0.5 * (A + A.T)
    B, W = _facet_quadrature(mesh, op.boundary_index)
    nb = op.size
    best = np.inf
    for s in range(starts + 1):
        f0 = np.ones(nb) if s == 0 else _random_start(nb, seed, s)
        _, val, _, _, _ = _pgd_minimize(A, B, W, 4.0, f0)
        best = min(best, val)
    return best


# ---------------------------------------------------------------------------
# Newton solvers for the boundary problems
# ---------------------------------------------------------------------------


def _lumped_boundary_diag(mesh: SimplicialMesh) -> np.ndarray:
    return lumped_boundary_weights(mesh)


def _newton(mesh, residual_fn, jacobian_fn, u0, positivity_index=None, max_iter=500, step_cap=None):
    """Damped Newton with residual backtracking; optional positive cone.

    step_cap limits the sup-norm of a single update, which keeps exponential
    nonlinearities from overflowing on wild starts.
    """
    u = np.asarray(u0, dtype=float).copy()
    r = residual_fn(u)
    rnorm = np.linalg.norm(r)
    mu = None  # persistent Levenberg-Marquardt damping
    for it in range(max_iter):
        scale = max(1.0, np.linalg.norm(u))
        if rnorm <= NEWTON_RTOL * scale:
            return u, rnorm, it
        J = jacobian_fn(u).tocsc()

        def admissible(cand):
            return positivity_index is None or cand[positivity_index].min() > 0.0

        # Newton step with backtracking; micro-steps are treated as failure
        # so the iteration never crawls on a near-singular Jacobian.
        du = spla.spsolve(J, -r)
        t = 1.0
        if step_cap is not None and np.abs(du).max() > step_cap:
            t = step_cap / np.abs(du).max()
        hit = None
        while t > 0.02:
            cand = u + t * du
            if admissible(cand):
                rc = residual_fn(cand)
                rcn = np.linalg.norm(rc)
                if rcn <= (1.0 - 0.1 * t) * rnorm or rcn <= NEWTON_RTOL * scale:
                    hit = (cand, rc, rcn)
                    break
            t *= 0.5
        if hit is None:
            # regularized Gauss-Newton on |F|^2: descent whenever J^T F != 0
            g = J.T @ r
            JtJ = (J.T @ J).tocsc()
            mu = 1e-3 * rnorm if mu is None else mu
            for _ in range(20):
                du = spla.spsolve((JtJ + mu * mu * sparse.identity(len(u))).tocsc(), -g)
                cand = u + du
                if admissible(cand):
                    rc = residual_fn(cand)
                    rcn = np.linalg.norm(rc)
                    if rcn < rnorm:
                        hit = (cand, rc, rcn)
                        mu = max(mu * 0.3, 1e-12)
                        break
                mu *= 10.0
        if hit is None:
            raise NewtonStall(f"line search stalled at residual {rnorm:.3e}")
        u, r, rnorm = hit
    raise NewtonStall(f"no convergence in {max_iter} iterations (residual {rnorm:.3e})")


def solve_semilinear(
    mesh: SimplicialMesh,
    q: float,
    lam: float,
    start,
    dtn: DtNOperator | None = None,
) -> NonlinearRun:
    """Newton solve of: harmonic in M, du/dnu + lam*u = u^q on the boundary.

    `start` is "constant", or a full-vertex / boundary-vertex array of
    positive values.  The power form is for n >= 3; 2D meshes use
    solve_exp_disc.
    """
    if mesh.intrinsic_dim == 2:
        raise UnsupportedExponentForm("use solve_exp_disc for 2D meshes")
    if lam <= 0 or q <= 1:
        raise ValueError("need lam > 0 and q > 1")
    op = dtn if dtn is not None else DtNOperator(mesh)
    K = op.K
    wfull = _lumped_boundary_diag(mesh)
    bidx = op.boundary_index
    nv = K.shape[0]

    if isinstance(start, str) and start == "constant":
        u0 = np.full(nv, lam ** (1.0 / (q - 1.0)))
        tag = "Constant"
    else:
        arr = np.asarray(start, dtype=float)
        if arr.shape[0] == len(bidx):
            u0 = op.extend(arr)
        else:
            u0 = arr.copy()
        tag = "Custom"
    if u0[bidx].min() <= 0.0:
        raise NonPositiveIterate("start must be positive on the boundary")

    W = sparse.diags(wfull)

    def residual(u):
        return K @ u + lam * (wfull * u) - wfull * np.abs(u) ** (q - 1.0) * u

    def jacobian(u):
        return (K + lam * W - sparse.diags(q * wfull * np.abs(u) ** (q - 1.0))).tocsr()

    try:
        u, rnorm, iters = _newton(mesh, residual, jacobian, u0, positivity_index=bidx)
    except NewtonStall:
        f = u0[bidx]
        return NonlinearRun(q, lam, tag, 0, f, None, np.inf, "NoConverge",
                            _constancy_ratio(f, op.lumped_mass))
    if u.min() <= 0.0:
        raise NonPositiveIterate("converged iterate is not positive")
    f = u[bidx]
    ratio = _constancy_ratio(f, op.lumped_mass)
    cls = "Constant" if ratio < CONSTANCY_TOL else "NonConstant"
    return NonlinearRun(q, lam, tag, iters, f, None, float(rnorm), cls, ratio)


def solve_exp_disc(
    mesh: SimplicialMesh,
    lam: float,
    start,
    dtn: DtNOperator | None = None,
    report_flat_direction: bool = False,
) -> NonlinearRun:
    """Newton solve of: harmonic on the surface, du/dnu + lam = e^u on its boundary."""
    if mesh.intrinsic_dim != 2:
        raise UnsupportedDimension("exponential form is the 2D problem")
    if lam <= 0:
        raise ValueError("need lam > 0")
    op = dtn if dtn is not None else DtNOperator(mesh)
    K = op.K
    wfull = _lumped_boundary_diag(mesh)
    bidx = op.boundary_index
    nv = K.shape[0]
    bmask = wfull > 0.0

    if isinstance(start, str) and start == "constant":
        u0 = np.full(nv, np.log(lam))
        tag = "Constant"
    else:
        arr = np.asarray(start, dtype=float)
        u0 = op.extend(arr) if arr.shape[0] == len(bidx) else arr.copy()
        tag = "Custom"

    def residual(u):
        e = np.where(bmask, np.exp(np.minimum(u, 500.0)), 0.0)
        return K @ u - wfull * e + lam * wfull

    def jacobian(u):
        e = np.where(bmask, np.exp(np.minimum(u, 500.0)), 0.0)
        return (K - sparse.diags(wfull * e)).tocsr()

    presmooth = 0
    if lam < 1.0:
        # damped simplified Newton with the Jacobian frozen at the constant
        # solution: globally attracted to F = 0 from wild starts (plain
        # least-squares globalization has spurious stationary points here)
        J0 = spla.factorized((K - lam * sparse.diags(wfull)).tocsc())
        for presmooth in range(60):
            r0 = residual(u0)
            if np.linalg.norm(r0) < 1e-6:
                break
            du = -J0(r0)
            step = min(0.5, 1.0 / max(np.abs(du).max(), 1.0))
            u0 = u0 + step * du

    try:
        u, rnorm, iters = _newton(mesh, residual, jacobian, u0, step_cap=2.0)
        iters += presmooth
    except NewtonStall:
        f = u0[bidx]
        return NonlinearRun(None, lam, tag, 0, f, None, np.inf, "NoConverge",
                            _constancy_ratio(np.exp(f), op.lumped_mass))
    f = u[bidx]
    # constancy measured on e^u, the natural positive density
    ratio = _constancy_ratio(np.exp(f), op.lumped_mass)
    cls = "Constant" if ratio < CONSTANCY_TOL else "NonConstant"
    flat = None
    if report_flat_direction:
        J = jacobian(u)
        flat = float(abs(spla.eigsh(J, k=1, sigma=0.0, return_eigenvectors=False)[0]))
    return NonlinearRun(None, lam, tag, iters, f, None, float(rnorm), cls, ratio,
                        flat_direction_eigenvalue=flat)


# ---------------------------------------------------------------------------
# closed forms and analytic checks
# ---------------------------------------------------------------------------


def extremal_ua(n: int, a, x) -> float:
    """The conjectured critical-exponent extremal family, formula as stated.

    Note: the positive solution of the boundary problem with lam = (n-2)/2 is
    this formula divided by ((n-2)^2/4)^((n-2)/2) (verified against the
    harmonic closed form); use phi_a for scale-invariant work.
    """
    if n < 3:
        raise UnsupportedDimension("extremal family defined for n >= 3")
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    na2 = float(a @ a)
    if na2 >= 1.0:
        raise DomainViolation(f"|a| = {np.sqrt(na2):.4f} must be < 1")
    denom = 1.0 + na2 * float(x @ x) - 2.0 * float(x @ a)
    return (2.0 / (n - 2.0) * (1.0 - na2) / denom) ** ((n - 2.0) / 2.0)


def phi_a(n: int, a, x) -> np.ndarray:
    """Normalization-free shape (1 + |a|^2|x|^2 - 2 x.a)^(-(n-2)/2); harmonic in x."""
    if n < 3:
        raise UnsupportedDimension("defined for n >= 3")
    a = np.asarray(a, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    na2 = float(a @ a)
    if na2 >= 1.0:
        raise DomainViolation(f"|a| = {np.sqrt(na2):.4f} must be < 1")
    denom = 1.0 + na2 * np.einsum("ij,ij->i", x, x) - 2.0 * (x @ a)
    out = denom ** (-(n - 2.0) / 2.0)
    return out if out.shape[0] > 1 else float(out[0])


def beckner_slack(n: int, coefficients: dict, q: float) -> float:
    """RHS - LHS of the sharp trace inequality on the ball, via the oracle.

    Nonnegative for every coefficient vector and 1 <= q <= n/(n-2);
    zero exactly at constants.
    """
    if n == 3 and not 1.0 <= q <= 3.0 + 1e-12:
        raise ValueError("need 1 <= q <= n/(n-2)")
    from .spectral import ball_harmonic_oracle

    o = ball_harmonic_oracle(n, coefficients, p=q + 1.0)
    cn = harmonics.sphere_area(n)
    lhs = cn ** ((q - 1.0) / (q + 1.0)) * o["boundary_lp"] ** (2.0 / (q + 1.0))
    rhs = (q - 1.0) * o["dirichlet_energy"] + o["boundary_l2"]
    return rhs - lhs


def sobolev_check(mesh: SimplicialMesh, u_fn, q: float) -> float:
    """Slack of the volume-normalized Sobolev inequality on a spherical cap.

    u_fn maps vertex coordinates (N, m) to sample values (a polynomial
    restriction); both sides are evaluated by mesh quadrature.
    """
    if mesh.family_tag != "SphericalCap":
        raise UnsupportedDimension("check defined on spherical caps")
    n = mesh.intrinsic_dim
    from .fem import assemble_interior_mass

    K = assemble_stiffness(mesh)
    M = assemble_interior_mass(mesh)
    lump = np.asarray(M.sum(axis=1)).ravel()
    V = lump.sum()
    u = np.asarray(u_fn(mesh.vertices), dtype=float)
    lhs = (float(lump @ np.abs(u) ** (q + 1.0)) / V) ** (2.0 / (q + 1.0))
    rhs = (q - 1.0) / n * float(u @ (K @ u)) / V + float(u @ (M @ u)) / V
    return rhs - lhs
