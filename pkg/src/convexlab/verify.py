"""Verification suite: every integral identity and inequality evaluated on a
mesh, aggregated into a machine-readable report.

Curvature inputs (normals, H, shape operators) always come from the analytic
family formulas, never from discrete estimation, so a failing check is
attributable to quadrature alone.  Theorem checks gate the exit status;
conjecture checks are logged as evidence and never gate.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from . import harmonics, topology
from .errors import HypothesisNotMet, NonpositiveMeanCurvature, WrongGenus
from .mesh import SimplicialMesh, boundary_geometry, dumps_17g, lumped_boundary_weights, measure
from .spectral import boundary_laplacian_spectrum
from .tolerances import tolerance


@dataclass
class CheckResult:
    check_id: str
    lhs: float
    rhs: float
    slack: float                 # rhs - lhs; >= 0 means satisfied
    tolerance: float
    passed: bool
    equality_expected: bool = False
    notes: str = ""

    @property
    def gating(self) -> bool:
        return "evidence" not in self.notes

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "slack": float(self.slack),
            "tolerance": float(self.tolerance),
            "pass": bool(self.passed),
            "equality_expected": bool(self.equality_expected),
            "notes": self.notes,
        }


@dataclass
class VerificationReport:
    mesh_family: str
    refinement_level: int
    checks: list = field(default_factory=list)
    seed: int = 0
    wall_time: float = 0.0
    timestamp: str = ""

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks if c.gating)

    def to_json(self) -> str:
        return dumps_17g(
            {
                "mesh": self.mesh_family,
                "level": self.refinement_level,
                "checks": [c.to_dict() for c in self.checks],
                "seed": self.seed,
                "wall_time": self.wall_time,
                "timestamp": self.timestamp,
            }
        )

    def to_csv(self) -> str:
        lines = ["check_id,lhs,rhs,slack,tolerance,pass,equality_expected,notes"]
        for c in self.checks:
            lines.append(
                f"{c.check_id},{c.lhs:.17g},{c.rhs:.17g},{c.slack:.17g},"
                f"{c.tolerance:.17g},{c.passed},{c.equality_expected},{c.notes}"
            )
        return "\n".join(lines) + "\n"


def _result(check_id, lhs, rhs, tol, equality=False, notes=""):
    slack = rhs - lhs
    ok = slack >= -tol and (not equality or abs(slack) <= tol)
    return CheckResult(check_id, float(lhs), float(rhs), float(slack), float(tol), ok, equality, notes)


def _first_nonzero(eigs, scale=1e-8):
    for ev in eigs:
        if ev > scale:
            return float(ev)
    raise ValueError("no nonzero eigenvalue in requested window")


# ---------------------------------------------------------------------------
# Reilly's identity
# ---------------------------------------------------------------------------

_XYZ = sp.symbols("x y z")


def _shape_operator_field(mesh: SimplicialMesh):
    """(normals, H, shape operator matrices) at boundary vertices, analytic."""
    geom = boundary_geometry(mesh)
    pts = mesh.vertices[geom.vertex_indices]
    if mesh.family_tag == "Ball":
        r = float(mesh.parameters.get("radius", 1.0))
        nu = geom.vertex_normals
        S = (np.eye(3)[None] - nu[:, :, None] * nu[:, None, :]) / r
        return nu, geom.mean_curvature, S
    if mesh.family_tag == "Ellipsoid":
        ax = np.asarray(mesh.parameters["semi_axes"], dtype=float)
        grad = 2.0 * pts / ax**2
        gn = np.linalg.norm(grad, axis=1)
        nu = grad / gn[:, None]
        hess = np.diag(2.0 / ax**2)
        P = np.eye(3)[None] - nu[:, :, None] * nu[:, None, :]
        S = np.einsum("nij,jk,nkl->nil", P, hess, P) / gn[:, None, None]
        return nu, np.einsum("nii->n", S), S
    raise HypothesisNotMet(f"no analytic shape operator for family {mesh.family_tag}")


def reilly_residual(mesh: SimplicialMesh, test_function) -> CheckResult:
    """Residual of Reilly's identity for a polynomial test function (flat M).

    lhs = integral over M of (Laplacian u)^2 - |Hess u|^2; rhs = boundary
    integral of 2*chi*Lap_Sigma(f) + H*chi^2 + Pi(grad f, grad f), with
    chi = normal derivative and f the boundary trace.  Both are evaluated by
    vertex-weighted quadrature of the analytic integrands.
    """
    u = sp.sympify(test_function)
    xyz = _XYZ
    grad = [sp.diff(u, v) for v in xyz]
    hess = [[sp.diff(u, a, b) for b in xyz] for a in xyz]
    lap = sum(hess[i][i] for i in range(3))
    interior_expr = lap**2 - sum(hess[i][j] ** 2 for i in range(3) for j in range(3))
    f_int = sp.lambdify(xyz, interior_expr, "numpy")
    f_grad = sp.lambdify(xyz, sp.Matrix(grad), "numpy")
    f_hess = sp.lambdify(xyz, sp.Matrix(hess), "numpy")
    f_lap = sp.lambdify(xyz, lap, "numpy")

    from . import _kernels

    vols = _kernels.simplex_measures(mesh.vertices, mesh.cells)
    cellpts = mesh.vertices[mesh.cells]                      # (nc, k+1, 3)
    vals = np.asarray(f_int(*[cellpts[:, :, i] for i in range(3)]), dtype=float)
    vals = np.broadcast_to(vals, cellpts.shape[:2])
    lhs = float((vols * vals.mean(axis=1)).sum())

    nu, H, S = _shape_operator_field(mesh)
    geom = boundary_geometry(mesh)
    pts = mesh.vertices[geom.vertex_indices]
    G = np.array([np.asarray(f_grad(*p), dtype=float).ravel() for p in pts])
    Hs = np.array([np.asarray(f_hess(*p), dtype=float) for p in pts])
    L = np.array([float(f_lap(*p)) for p in pts])
    chi = np.einsum("ni,ni->n", nu, G)
    hess_nn = np.einsum("ni,nij,nj->n", nu, Hs, nu)
    lap_sigma = L - hess_nn - H * chi
    tgrad = G - chi[:, None] * nu
    pi_term = np.einsum("ni,nij,nj->n", tgrad, S, tgrad)
    integrand = 2.0 * chi * lap_sigma + H * chi**2 + pi_term
    rhs = float(geom.area_weights @ integrand)

    h = mesh.mesh_size()
    scale = max(abs(lhs), abs(rhs), 8.0 * math.pi)
    return _result("reilly", lhs, rhs, tolerance("reilly", h, scale), equality=True,
                   notes=f"test function {sp.sstr(u)}")


# ---------------------------------------------------------------------------
# spectral lower bounds
# ---------------------------------------------------------------------------


def check_eigen_lower_bound(mesh: SimplicialMesh) -> CheckResult:
    """lambda_1 of the boundary against the applicable curvature bound."""
    flags = mesh.curvature_flags
    if flags is None:
        raise HypothesisNotMet("mesh carries no curvature flags")
    n = mesh.intrinsic_dim
    if flags.ric_lower is not None and flags.ric_lower >= 0 and flags.pi_lower >= 1.0 - 1e-12 \
            and flags.ric_lower == 0:
        bound, which = float(n - 1), "flat, Pi >= 1"
    elif flags.ric_lower is not None and flags.ric_lower >= n - 1 and flags.pi_lower >= 0:
        bound, which = (n - 1) / 2.0, f"Ric >= {n - 1}, Pi >= 0"
    else:
        raise HypothesisNotMet("neither eigenvalue-bound hypothesis applies")
    spec = boundary_laplacian_spectrum(mesh, min(6, len(mesh.boundary_vertices) - 1))
    lam1 = _first_nonzero(spec.eigenvalues)
    h = mesh.mesh_size()
    equality = mesh.family_tag == "Ball" and abs(mesh.parameters.get("radius", 1.0) - 1.0) < 1e-12
    return _result("eigen-lower-bound", bound, lam1,
                   tolerance("eigen-lower-bound", h, max(bound, 1.0)),
                   equality=equality, notes=which)


def check_hersch(mesh: SimplicialMesh) -> CheckResult:
    """A(Sigma) <= 8 pi / lambda_1(Sigma) for genus-0 boundary surfaces."""
    if mesh.intrinsic_dim != 3 or mesh.boundary_facets.shape[1] != 3:
        raise WrongGenus("Hersch bound needs a surface boundary")
    genera = topology.classify_boundary(mesh)
    if any(g != 0 for g in genera):
        raise WrongGenus(f"boundary genus {genera}, need all zero")
    area = measure(mesh)["boundary_area"]
    spec = boundary_laplacian_spectrum(mesh, min(6, len(mesh.boundary_vertices) - 1))
    lam1 = _first_nonzero(spec.eigenvalues)
    rhs = 8.0 * math.pi / lam1
    h = mesh.mesh_size()
    equality = mesh.family_tag == "Ball"
    return _result("hersch", area, rhs, tolerance("hersch", h, max(area, rhs)),
                   equality=equality)


# ---------------------------------------------------------------------------
# integral-geometric inequalities
# ---------------------------------------------------------------------------


def check_ros(mesh: SimplicialMesh) -> CheckResult:
    """integral of 1/H over the boundary >= n/(n-1) * volume (flat M, H > 0)."""
    flags = mesh.curvature_flags
    if flags is None or flags.ric_lower is None or flags.ric_lower < 0 or flags.ric_lower > 0:
        raise HypothesisNotMet("Ros inequality stated for flat domains here")
    geom = boundary_geometry(mesh)
    if np.min(geom.mean_curvature) <= 0:
        raise NonpositiveMeanCurvature("H must be positive everywhere")
    n = mesh.intrinsic_dim
    vol = measure(mesh)["volume"]
    lhs = n / (n - 1.0) * vol
    rhs = float(geom.area_weights @ (1.0 / geom.mean_curvature))
    h = mesh.mesh_size()
    equality = mesh.family_tag == "Ball"
    return _result("ros", lhs, rhs, tolerance("ros", h, max(lhs, rhs)), equality=equality)


def check_area_volume_bounds(mesh: SimplicialMesh) -> list:
    """All applicable area/volume comparison statements, one CheckResult each."""
    flags = mesh.curvature_flags
    if flags is None:
        raise HypothesisNotMet("mesh carries no curvature flags")
    m = measure(mesh)
    area, vol = m["boundary_area"], m["volume"]
    h = mesh.mesh_size()
    n = mesh.intrinsic_dim
    sphere = harmonics.sphere_area(n)
    out = []
    flat = flags.ric_lower == 0
    convex1 = flags.pi_lower is not None and flags.pi_lower >= 1.0 - 1e-12
    unit_ball = mesh.family_tag == "Ball" and abs(mesh.parameters.get("radius", 1.0) - 1.0) < 1e-12
    hemisphere = mesh.family_tag == "SphericalCap" and \
        abs(mesh.parameters["cap_radius"] - math.pi / 2) < 1e-12

    if n == 3 and flat and convex1:
        out.append(_result("nn3-area", area, 4.0 * math.pi,
                           tolerance("nn3-area", h, 4 * math.pi), equality=unit_ball))
        out.append(_result("nn3-volume", vol, 4.0 * math.pi / 3.0,
                           tolerance("nn3-volume", h, 4 * math.pi / 3), equality=unit_ball))
    if flags.sec_lower is not None and flags.sec_lower >= 0 and convex1:
        out.append(_result("sec0-pi1-area", area, sphere,
                           tolerance("sec0-pi1-area", h, sphere), equality=unit_ball))
    if flags.sec_lower is not None and flags.sec_lower >= 1 and flags.pi_lower >= 0:
        out.append(_result("sec1-pi0-area", area, sphere,
                           tolerance("sec1-pi0-area", h, sphere), equality=hemisphere))
    if n == 3 and flags.ric_lower is not None and flags.ric_lower >= 2 and flags.pi_lower >= 0:
        out.append(_result("ric2-pi0-area-8pi", area, 8.0 * math.pi,
                           tolerance("ric2-pi0-area-8pi", h, 8 * math.pi)))
    if flags.ric_lower is not None and flags.ric_lower >= 0 and convex1:
        out.append(_result("conj2-area", area, sphere,
                           tolerance("conj2-area", h, sphere), equality=unit_ball,
                           notes="evidence: conjectured bound beyond the sec-flag theorems"))
    if not out:
        raise HypothesisNotMet("no area/volume statement applies")
    return out


def check_mean_curvature_insufficiency(L_values) -> CheckResult:
    """The product solid torus family: H = 1 but boundary area 2*pi*L unbounded.

    Documents the counterexample to replacing the second-fundamental-form
    hypothesis with a mean-curvature one.
    """
    from .mesh import solid_torus

    L_values = sorted(float(L) for L in L_values)
    if not L_values or L_values[0] <= 0:
        raise ValueError("need positive L values")
    areas = []
    ok = True
    for L in L_values:
        msh = solid_torus(L, 2)
        geom = boundary_geometry(msh)
        if not np.allclose(geom.mean_curvature, 1.0):
            ok = False
        a = measure(msh)["boundary_area"]
        areas.append(a)
        if abs(a - 2 * math.pi * L) > tolerance("mean-curvature-insufficiency",
                                                msh.mesh_size(), 2 * math.pi * L):
            ok = False
    ok = ok and all(b > a for a, b in zip(areas, areas[1:]))
    grew_past = [L for L, a in zip(L_values, areas) if a > 4 * math.pi]
    ok = ok and all(a > 4 * math.pi for L, a in zip(L_values, areas) if L > 2.1)
    lhs, rhs = areas[0], areas[-1]
    return CheckResult(
        "mean-curvature-insufficiency", lhs, rhs, rhs - lhs, 0.0, ok,
        notes=f"H = 1 throughout; areas ~ 2 pi L exceed 4 pi for L in {grew_past}",
    )


def check_shi_tam_equality(mesh: SimplicialMesh) -> CheckResult:
    """Total mean curvature vs its image-embedding value (identity: equality)."""
    flags = mesh.curvature_flags
    if flags is None or flags.ric_lower != 0 or mesh.intrinsic_dim != mesh.ambient_dim:
        raise HypothesisNotMet("stated for flat Euclidean domains (identity embedding)")
    geom = boundary_geometry(mesh)
    Hs = geom.mean_curvature
    lhs = float(geom.area_weights @ Hs)
    rhs = float(geom.area_weights @ (Hs**2 / Hs))
    h = mesh.mesh_size()
    return _result("shi-tam", lhs, rhs, tolerance("shi-tam", h, max(abs(lhs), 1.0)),
                   equality=True, notes="rigidity case: identity embedding")


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def _nonlinear_checks(mesh: SimplicialMesh) -> list:
    from .fem import DtNOperator, assemble_boundary_mass
    from .nonlinear import _facet_quadrature, boundary_quotient

    op = DtNOperator(mesh)
    q = 2.0
    nb = op.size
    ones = np.ones(nb)
    val = boundary_quotient(mesh, ones, q, dtn=op)
    area = measure(mesh)["boundary_area"]
    target = area ** ((q - 1.0) / (q + 1.0))
    h = mesh.mesh_size()
    out = [
        _result("quotient-constant-value", val, target,
                tolerance("quotient-constant-value", h, target), equality=True,
                notes="constant trace, q = 2"),
    ]
    # trace inequality at the constant: |bdry|^((q-1)/(q+1)) (int |f|^(q+1))^(2/(q+1))
    # <= (q-1) f'Sf + f'Mf
    Mb = assemble_boundary_mass(mesh)[op.boundary_index][:, op.boundary_index]
    B, W = _facet_quadrature(mesh, op.boundary_index)
    lhs = area ** ((q - 1) / (q + 1)) * float(W @ np.abs(B @ ones) ** (q + 1)) ** (2 / (q + 1))
    rhs = (q - 1) * op.energy(ones) + float(ones @ (Mb @ ones))
    out.append(_result("trace-inequality", lhs, rhs,
                       tolerance("trace-inequality", h, max(lhs, rhs)),
                       notes="at the constant trace, q = 2"))
    return out


def _topology_checks(mesh: SimplicialMesh) -> list:
    ranks = topology.cohomology_ranks(mesh)
    out = []
    for item in topology.consistency_audit(mesh, ranks):
        if not item["hypothesis_satisfied"]:
            continue
        out.append(
            CheckResult(
                f"topology/{item['statement_id']}", 0.0,
                1.0 if item["conclusion_satisfied"] else 0.0,
                1.0 if item["conclusion_satisfied"] else 0.0,
                0.0, item["verdict"] == "pass",
                notes=f"b1={ranks.b1_absolute} b1_rel={ranks.b1_relative} "
                      f"genus={ranks.boundary_genus}",
            )
        )
    return out


DEFAULT_REILLY_TESTS = ("(x**2 + y**2 + z**2)/2", "x", "1")


def run_suite(mesh: SimplicialMesh, suite: str = "all", seed: int = 0) -> VerificationReport:
    if suite not in ("all", "spectral", "inequalities", "topology", "nonlinear"):
        raise ValueError(f"unknown suite {suite!r}")
    t0 = time.time()
    checks = []

    def attempt(fn, *a):
        try:
            r = fn(*a)
            checks.extend(r if isinstance(r, list) else [r])
        except HypothesisNotMet:
            pass
        except (NonpositiveMeanCurvature, WrongGenus):
            pass

    if suite in ("all", "spectral"):
        attempt(check_eigen_lower_bound, mesh)
        if mesh.intrinsic_dim == 3 and mesh.boundary_facets.shape[1] == 3:
            attempt(check_hersch, mesh)
    if suite in ("all", "inequalities"):
        if mesh.family_tag in ("Ball", "Ellipsoid") and mesh.intrinsic_dim == 3:
            for tf in DEFAULT_REILLY_TESTS:
                attempt(reilly_residual, mesh, tf)
        attempt(check_ros, mesh)
        attempt(check_area_volume_bounds, mesh)
        attempt(check_shi_tam_equality, mesh)
    if suite in ("all", "topology"):
        checks.extend(_topology_checks(mesh))
    if suite in ("all", "nonlinear"):
        attempt(_nonlinear_checks, mesh)

    return VerificationReport(
        mesh_family=mesh.family_tag,
        refinement_level=mesh.refinement_level,
        checks=checks,
        seed=seed,
        wall_time=time.time() - t0,
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    )
