import math

import numpy as np
import pytest

from convexlab import mesh as meshmod
from convexlab.errors import InadmissibleSpec, RollingBallViolation, UnsupportedDimension


def ball_volume(n, r=1.0):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * r ** n


def test_seed_meshes_validate(disc4, ball2, ell2, torus1, cap2):
    for m in (disc4, ball2, ell2, torus1, cap2):
        m.validate()


def test_ball_measure_convergence():
    errs = []
    for lvl in (1, 2, 3):
        m = meshmod.unit_ball(3, lvl)
        mm = meshmod.measure(m)
        errs.append((abs(mm["volume"] - ball_volume(3)),
                     abs(mm["boundary_area"] - 3 * ball_volume(3))))
    for i in (0, 1):
        assert errs[0][i] / errs[1][i] >= 3.0
        assert errs[1][i] / errs[2][i] >= 3.0


def test_ellipsoid_volume(ell2):
    exact = ball_volume(3) * 0.9 * 0.85 * 0.82
    e2 = abs(meshmod.measure(ell2)["volume"] - exact)
    e3 = abs(meshmod.measure(meshmod.refine(ell2))["volume"] - exact)
    assert e2 / exact < 0.10
    assert e2 / e3 >= 3.0


def test_torus_measures(torus1):
    mm = meshmod.measure(torus1)
    L = 5.0
    assert abs(mm["volume"] - math.pi * L) / (math.pi * L) < 0.12
    assert abs(mm["boundary_area"] - 2 * math.pi * L) / (2 * math.pi * L) < 0.05


def test_cap_flags(cap2):
    f = cap2.curvature_flags
    assert f.ric_lower == pytest.approx(2.0)
    assert f.pi_lower is not None and f.pi_lower >= 0.0


def test_refine_preserves_family_and_flags(ball2):
    r = meshmod.refine(ball2)
    assert r.family_tag == "Ball"
    assert r.refinement_level == ball2.refinement_level + 1
    assert len(r.cells) == 8 * len(ball2.cells)
    assert r.curvature_flags.ric_lower == ball2.curvature_flags.ric_lower
    r.validate()


def test_boundary_vertices_on_sphere(ball3):
    bv = ball3.vertices[ball3.boundary_vertices]
    assert np.allclose(np.linalg.norm(bv, axis=1), 1.0, atol=1e-12)


def test_json_roundtrip_byte_identical(ell2):
    text = ell2.to_json()
    again = meshmod.SimplicialMesh.from_json(text)
    assert again.to_json() == text
    assert again.curvature_flags.pi_lower == ell2.curvature_flags.pi_lower
    np.testing.assert_array_equal(again.cells, ell2.cells)


def test_support_body_rejects_large_curvature_radius():
    with pytest.raises(RollingBallViolation):
        meshmod.support_body({(2, 0): 0.2}, 1, h0=1.0)


def test_support_body_rejects_nonconvex():
    with pytest.raises(InadmissibleSpec):
        meshmod.support_body({(2, 0): 2.0}, 1, h0=0.5)


def test_support_body_admissible_round():
    m = meshmod.support_body({(2, 0): 0.002}, 2, h0=0.95)
    m.validate()
    a = meshmod.measure(m)["boundary_area"]
    assert a < 4 * math.pi


def test_disjoint_union_disconnected(ball2):
    u = meshmod.disjoint_union(ball2, ball2)
    u.validate()
    assert len(u.vertices) == 2 * len(ball2.vertices)


def test_unsupported_dimension():
    with pytest.raises(UnsupportedDimension):
        meshmod.unit_ball(1, 1)


def test_generate_domain_dispatch():
    spec = meshmod.DomainSpec("Ball", {"dim": 2, "radius": 1.0}, 2)
    m = meshmod.generate_domain(spec)
    assert m.family_tag == "Ball" and m.intrinsic_dim == 2
