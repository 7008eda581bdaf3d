import json
import math

import pytest

from convexlab import mesh as meshmod
from convexlab import verify


def test_run_suite_ball_all(ball2):
    rep = verify.run_suite(ball2, "all")
    assert len(rep.checks) >= 10
    assert rep.all_pass
    ids = [c.check_id for c in rep.checks]
    assert "ros" in ids and "eigen-lower-bound" in ids


def test_run_suite_unknown(ball2):
    with pytest.raises(ValueError):
        verify.run_suite(ball2, "everything")


def test_suite_subsets(ball2):
    spec = verify.run_suite(ball2, "spectral")
    topo = verify.run_suite(ball2, "topology")
    assert all(c.check_id.startswith("topology/") for c in topo.checks)
    assert {c.check_id for c in spec.checks} <= {"eigen-lower-bound", "hersch"}


def test_reilly_exact_for_linear(ball2):
    c = verify.reilly_residual(ball2, "x")
    assert c.lhs == pytest.approx(0.0, abs=1e-12)
    assert c.rhs == pytest.approx(0.0, abs=1e-12)
    assert c.passed and c.equality_expected


def test_reilly_quadratic_converges(ball2, ball3):
    r2 = verify.reilly_residual(ball2, "(x**2 + y**2 + z**2)/2")
    r3 = verify.reilly_residual(ball3, "(x**2 + y**2 + z**2)/2")
    assert abs(r3.slack) < abs(r2.slack) / 2.5
    assert r2.passed and r3.passed


def test_reilly_needs_analytic_shape(torus1):
    from convexlab.errors import HypothesisNotMet

    with pytest.raises(HypothesisNotMet):
        verify.reilly_residual(torus1, "x")


def test_ros_strict_on_ellipsoid_and_torus(ell2, torus1):
    for m in (ell2, torus1):
        c = verify.check_ros(m)
        assert c.slack > 0 and c.passed and not c.equality_expected
    c = verify.check_ros(meshmod.unit_ball(3, 3))
    assert c.equality_expected and c.passed


def test_eigen_lower_bound_cap(cap2):
    c = verify.check_eigen_lower_bound(cap2)
    # Ric >= n-1 and convex boundary: lambda_1 >= (n-1)/2 = 1
    assert c.lhs == pytest.approx(1.0)
    assert c.passed


def test_shi_tam_identity_embedding(ball2):
    c = verify.check_shi_tam_equality(ball2)
    assert c.slack == pytest.approx(0.0, abs=1e-9)
    assert c.passed


def test_mean_curvature_insufficiency():
    c = verify.check_mean_curvature_insufficiency([1, 3, 10])
    assert c.passed
    assert c.rhs > 4 * math.pi  # largest torus boundary area exceeds 4 pi


def test_conjecture_checks_not_gating(ball2):
    rep = verify.run_suite(ball2, "inequalities")
    conj = [c for c in rep.checks if c.check_id == "conj2-area"]
    assert conj and not conj[0].gating


def test_report_serialization(ball2):
    rep = verify.run_suite(ball2, "topology")
    doc = json.loads(rep.to_json())
    assert doc["mesh"] == "Ball" and len(doc["checks"]) == len(rep.checks)
    csv_text = rep.to_csv()
    assert csv_text.splitlines()[0].startswith("check_id,")
    assert len(csv_text.strip().splitlines()) == len(rep.checks) + 1
