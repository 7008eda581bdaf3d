"""Acceptance suite: the fourteen headline criteria, each at its stated
tolerance and (where given) time budget.  Every test prints a one-line
pass summary with the measured numbers.
"""
import math
import time

import numpy as np
import pytest

from convexlab import mesh as meshmod
from convexlab import nonlinear, topology, verify
from convexlab.fem import DtNOperator
from convexlab.spectral import boundary_laplacian_spectrum, steklov_spectrum

PI = math.pi


@pytest.fixture(scope="module")
def dtn_ball3(ball3):
    op = DtNOperator(ball3)
    op.dense()
    return op


@pytest.fixture(scope="module")
def dtn_disc4(disc4):
    op = DtNOperator(disc4)
    op.dense()
    return op


def _report(n, text):
    print(f"criterion {n:02d}: PASS — {text}")


def test_criterion_01_disc_steklov(disc5):
    t0 = time.perf_counter()
    ev = steklov_spectrum(disc5, 4).eigenvalues
    elapsed = time.perf_counter() - t0
    assert elapsed <= 5.0
    assert abs(ev[1] - 1.0) <= 0.01 and abs(ev[2] - 1.0) <= 0.01
    assert abs(ev[3] - 2.0) <= 0.02 and abs(ev[4] - 2.0) <= 0.02
    _report(1, f"disc sigma = {ev[1]:.5f}, {ev[2]:.5f}, {ev[3]:.5f}, "
               f"{ev[4]:.5f} in {elapsed:.2f}s")


def test_criterion_02_sphere_laplacian(ball3):
    t0 = time.perf_counter()
    res = boundary_laplacian_spectrum(ball3, 4)
    elapsed = time.perf_counter() - t0
    assert elapsed <= 30.0
    ev = res.eigenvalues
    assert all(abs(v - 2.0) <= 0.02 for v in ev[1:4])
    clusters = res.clusters()
    first = [c for c in clusters if abs(c[0] - 2.0) <= 0.02]
    assert first and first[0][1] == 3
    _report(2, f"lambda_1(S^2) = {ev[1]:.5f}, multiplicity 3, {elapsed:.2f}s")


def test_criterion_03_xia_bound_ellipsoid(ell2):
    pi_min = float(ell2.curvature_flags.pi_lower)
    assert pi_min == pytest.approx(0.82 / 0.9 ** 2, rel=1e-9)
    assert pi_min >= 1.0
    lam1 = float(boundary_laplacian_spectrum(ell2, 1).eigenvalues[1])
    assert lam1 >= 2.0 - 0.05
    _report(3, f"ellipsoid pi_min = {pi_min:.4f}, lambda_1 = {lam1:.4f} >= 1.95")


def test_criterion_04_reilly_identity(ball2, ball3, ball4):
    c = verify.reilly_residual(ball4, "(x**2 + y**2 + z**2)/2")
    assert abs(c.lhs - 8 * PI) <= 0.01 * 8 * PI
    assert abs(c.rhs - 8 * PI) <= 0.01 * 8 * PI
    lin = verify.reilly_residual(ball4, "x")
    assert abs(lin.lhs) <= 0.01 * 8 * PI and abs(lin.rhs) <= 0.01 * 8 * PI
    r2 = abs(verify.reilly_residual(ball2, "(x**2 + y**2 + z**2)/2").slack)
    r3 = abs(verify.reilly_residual(ball3, "(x**2 + y**2 + z**2)/2").slack)
    order = math.log2(r2 / r3)
    assert 1.5 <= order <= 2.6
    _report(4, f"sides {c.lhs:.4f}/{c.rhs:.4f} vs 8 pi = {8 * PI:.4f}, "
               f"residual order {order:.2f}")


def test_criterion_05_ros(ball4, ell2):
    c = verify.check_ros(ball4)
    assert abs(c.rhs - 2 * PI) <= 0.01 * 2 * PI   # integral of 1/H
    assert abs(c.lhs - 2 * PI) <= 0.01 * 2 * PI   # (n/(n-1)) V
    torus = meshmod.solid_torus(5.0, 2)
    strict = []
    for m, lhs_exact, rhs_exact, tol in [
        (ell2, None, None, None),
        (torus, 1.5 * PI * 5, 2 * PI * 5, 0.03),
    ]:
        cs = verify.check_ros(m)
        assert cs.slack > 0
        if lhs_exact is not None:
            assert abs(cs.lhs - lhs_exact) <= tol * lhs_exact
            assert abs(cs.rhs - rhs_exact) <= tol * rhs_exact
        strict.append(cs.slack)
    _report(5, f"ball 2 pi equality ({c.rhs:.4f}); strict slack "
               f"ellipsoid {strict[0]:.3f}, torus {strict[1]:.3f} "
               f"(analytic 23.56 vs 31.42)")


def test_criterion_06_nn3_equality_and_support_bodies(ball4):
    mm = meshmod.measure(ball4)
    assert abs(mm["boundary_area"] - 4 * PI) <= 0.01 * 4 * PI
    assert abs(mm["volume"] - 4 * PI / 3) <= 0.01 * 4 * PI / 3
    rng = np.random.default_rng(0)
    keys = [(l, m) for l in (2, 3, 4) for m in range(-l, l + 1)]
    areas, made = [], 0
    while made < 50:
        pick = rng.choice(len(keys), size=3, replace=False)
        coeffs = {keys[i]: float(rng.normal(0, 0.004)) for i in pick}
        try:
            body = meshmod.support_body(coeffs, 1, h0=0.95)
        except Exception:
            continue
        made += 1
        areas.append(meshmod.measure(body)["boundary_area"])
    assert all(a <= 4 * PI + 1e-6 for a in areas)
    _report(6, f"ball A = {mm['boundary_area']:.4f}, V = {mm['volume']:.4f}; "
               f"50 support bodies max area {max(areas):.4f} <= 4 pi")


# shared with the determinism criterion
_RUNS = {}


def test_criterion_07_subcritical_constancy(disc4, ball3, dtn_disc4, dtn_ball3):
    t0 = time.perf_counter()
    cases = [(disc4, dtn_disc4, 2.0, (2 * PI) ** (1 / 3))]
    for q in (1.5, 2.0, 2.5):
        cases.append((ball3, dtn_ball3, q,
                      (4 * PI) ** ((q - 1) / (q + 1))))
    vals = []
    for m, op, q, target in cases:
        run = nonlinear.minimize_quotient(m, q, starts=8, seed=7, dtn=op)
        assert run.classification == "Constant"
        assert abs(run.quotient_value - target) <= 0.01 * target
        vals.append(run.quotient_value)
        if m is disc4 and q == 2.0:
            _RUNS["c7-disc"] = run.to_json()
    elapsed = time.perf_counter() - t0
    assert elapsed <= 120.0
    _report(7, "quotients " + ", ".join(f"{v:.4f}" for v in vals)
               + f" all Constant within 1%, {elapsed:.1f}s")


def test_criterion_08_critical_family_invariance(ball3, dtn_ball3):
    target = math.sqrt(4 * PI)
    bidx = ball3.boundary_vertices
    x = ball3.vertices[bidx]
    vals = []
    for amag in (0.0, 0.25, 0.5):
        a = np.array([0.0, 0.0, amag])
        f = np.asarray(nonlinear.phi_a(3, a, x), dtype=float)
        vals.append(nonlinear.boundary_quotient(ball3, f, 3.0, dtn=dtn_ball3))
    assert all(abs(v - target) <= 0.01 * target for v in vals)
    _report(8, "phi_a quotients " + ", ".join(f"{v:.4f}" for v in vals)
               + f" within 1% of {target:.4f}")


def test_criterion_09_semilinear_closed_forms(disc4, dtn_disc4):
    # lam = 1, a = 0.4: u(z) = log[(1 - |a|^2)/|1 - conj(a) z|^2]
    a = 0.4
    z = disc4.vertices
    denom = (1.0 - a * z[:, 0]) ** 2 + (a * z[:, 1]) ** 2
    u0 = np.log((1.0 - a * a) / denom)
    run = nonlinear.solve_exp_disc(disc4, 1.0, u0, dtn=dtn_disc4)
    assert run.residual <= 1e-6
    ratios = []
    for s in range(8):
        rng = np.random.default_rng([20, s])
        start = rng.normal(0.0, 2.0, len(disc4.vertices))
        r = nonlinear.solve_exp_disc(disc4, 0.5, start, dtn=dtn_disc4)
        assert r.classification == "Constant"
        assert np.allclose(r.final_boundary_values, math.log(0.5), atol=1e-4)
        assert r.constancy_ratio < 1e-4
        ratios.append(r.constancy_ratio)
        if s == 0:
            _RUNS["c9-start0"] = r.to_json()
    _report(9, f"lam=1 interpolated residual {run.residual:.2e}; lam=0.5: "
               f"8/8 constant, max ratio {max(ratios):.2e}")


def test_criterion_10_beckner_property_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    keys = [(l, m) for l in range(5) for m in range(-l, l + 1)]
    worst = np.inf
    for _ in range(100):
        coeffs = {k: float(v) for k, v in zip(keys, rng.normal(size=len(keys)))}
        for q in (2.0, 3.0):
            s = nonlinear.beckner_slack(3, coeffs, q)
            assert s >= -1e-8
            worst = min(worst, s)
    for c in (1.0, -2.5, 0.1):
        for q in (2.0, 3.0):
            assert abs(nonlinear.beckner_slack(3, {(0, 0): c}, q)) <= 1e-9
    elapsed = time.perf_counter() - t0
    assert elapsed <= 10.0
    _report(10, f"100 vectors x q in {{2,3}}: min slack {worst:.3e} >= -1e-8, "
                f"constants exact, {elapsed:.1f}s")


def test_criterion_11_escobar_quotient(ball3, dtn_ball3):
    target = 4.0 * math.sqrt(4 * PI)
    val = nonlinear.escobar_quotient_minimize(ball3, starts=4, seed=3,
                                              dtn=dtn_ball3)
    assert abs(val - target) <= 0.02 * target
    _report(11, f"Escobar quotient {val:.4f} vs {target:.4f} (within 2%)")


def test_criterion_12_topology_audits(ball2, ell2, torus1, cap2):
    expect = {
        "Ball": (0, 0, [0]),
        "Ellipsoid": (0, 0, [0]),
        "ProductSolidTorus": (1, 0, [1]),
        "SphericalCap": (0, 0, [0]),
    }
    for m in (ball2, ell2, torus1, cap2, meshmod.spherical_cap(3, 0.5, 2)):
        r = topology.cohomology_ranks(m)
        b1, b1r, genus = expect[m.family_tag]
        assert (r.b1_absolute, r.b1_relative) == (b1, b1r)
        assert r.boundary_genus == genus
        audit = topology.consistency_audit(m, r)
        assert all(a["verdict"] != "violation" for a in audit)
    # rank stability under one refinement
    for coarse in (meshmod.unit_ball(3, 1), meshmod.solid_torus(5.0, 0)):
        r0 = topology.cohomology_ranks(coarse)
        r1 = topology.cohomology_ranks(meshmod.refine(coarse))
        assert (r0.b1_absolute, r0.b1_relative, r0.boundary_genus) == (
            r1.b1_absolute, r1.b1_relative, r1.boundary_genus)
    _report(12, "ball/ellipsoid/torus/caps ranks as predicted, "
                "refinement-invariant, no audit violations")


def test_criterion_13_counterexample_documentation():
    areas = []
    for L in (1.0, 3.0, 10.0):
        m = meshmod.solid_torus(L, 2)
        H = meshmod.boundary_geometry(m).mean_curvature
        assert np.allclose(H, 1.0, atol=1e-9)
        a = meshmod.measure(m)["boundary_area"]
        assert abs(a - 2 * PI * L) <= 0.02 * 2 * PI * L
        areas.append(a)
    assert areas[1] > 4 * PI and areas[2] > 4 * PI
    assert verify.check_mean_curvature_insufficiency([1.0, 3.0, 10.0]).passed
    _report(13, "H = 1 tori, areas " + ", ".join(f"{a:.3f}" for a in areas)
                + " ~ 2 pi L, exceeding 4 pi for L >= 3")


def test_criterion_14_determinism(disc4, dtn_disc4):
    assert "c7-disc" in _RUNS and "c9-start0" in _RUNS
    again7 = nonlinear.minimize_quotient(disc4, 2.0, starts=8, seed=7,
                                         dtn=dtn_disc4).to_json()
    assert again7 == _RUNS["c7-disc"]
    rng = np.random.default_rng([20, 0])
    start = rng.normal(0.0, 2.0, len(disc4.vertices))
    again9 = nonlinear.solve_exp_disc(disc4, 0.5, start, dtn=dtn_disc4).to_json()
    assert again9 == _RUNS["c9-start0"]
    _report(14, "criteria 7 and 9 reports byte-identical across reruns")
