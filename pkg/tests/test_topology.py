import pytest

from convexlab import mesh as meshmod
from convexlab import topology
from convexlab.errors import NonManifoldBoundary
from convexlab.topology import PRIMES, _gf_rank, cohomology_ranks, consistency_audit


def test_gf_rank_small():
    # 3x3 matrix of rank 2 over every field
    rows = [{0: 1, 1: 2}, {0: 2, 1: 4}, {2: 1}]
    for p in PRIMES:
        assert _gf_rank([dict(r) for r in rows], p) == 2
    assert _gf_rank([], PRIMES[0]) == 0


def test_gf_rank_mod_p_degeneracy():
    # row that vanishes mod 3 but not mod 5
    assert _gf_rank([{0: 3}], 3) == 0
    assert _gf_rank([{0: 3}], 5) == 1


def test_ball_ranks(ball2):
    r = cohomology_ranks(ball2)
    assert (r.b0, r.b1_absolute, r.b1_relative) == (1, 0, 0)
    assert r.boundary_components == 1
    assert r.boundary_genus == [0]


def test_ellipsoid_ranks(ell2):
    r = cohomology_ranks(ell2)
    assert (r.b0, r.b1_absolute, r.b1_relative) == (1, 0, 0)
    assert r.boundary_genus == [0]


def test_torus_ranks(torus1):
    r = cohomology_ranks(torus1)
    assert (r.b0, r.b1_absolute, r.b1_relative) == (1, 1, 0)
    assert r.boundary_genus == [1]


def test_cap_ranks(cap2):
    r = cohomology_ranks(cap2)
    assert (r.b0, r.b1_absolute, r.b1_relative) == (1, 0, 0)


def test_disc_ranks(disc4):
    r = cohomology_ranks(disc4)
    assert (r.b0, r.b1_absolute, r.b1_relative) == (1, 0, 0)
    assert r.boundary_components == 1
    assert r.boundary_genus == []  # circles carry no genus


def test_ranks_refinement_invariant(torus1):
    r0 = cohomology_ranks(meshmod.solid_torus(5.0, 0))
    r1 = cohomology_ranks(torus1)
    assert (r0.b0, r0.b1_absolute, r0.b1_relative) == (
        r1.b0, r1.b1_absolute, r1.b1_relative)
    assert r0.boundary_genus == r1.boundary_genus


def test_two_balls_b0(ball2):
    u = meshmod.disjoint_union(ball2, ball2)
    r = cohomology_ranks(u)
    assert r.b0 == 2
    assert r.boundary_components == 2
    assert r.boundary_genus == [0, 0]


def test_audit_ball(ball2):
    audit = consistency_audit(ball2)
    assert all(a["verdict"] in ("pass", "not-applicable") for a in audit)
    ids = {a["statement_id"]: a["verdict"] for a in audit}
    assert ids["strictly-convex-absolute"] == "pass"
    assert ids["boundary-sphere"] == "pass"


def test_audit_torus(torus1):
    audit = consistency_audit(torus1)
    ids = {a["statement_id"]: a["verdict"] for a in audit}
    # flat torus: convexity hypothesis (Pi > 0) fails, H > 0 holds
    assert ids["strictly-convex-absolute"] == "not-applicable"
    assert ids["positive-H-relative"] == "pass"
    assert ids["sphere-or-flat-torus"] == "pass"


def test_classify_boundary_needs_surface(disc4):
    with pytest.raises(NonManifoldBoundary):
        topology.classify_boundary(disc4)


def test_result_json_roundtrip(ball2):
    import json

    r = cohomology_ranks(ball2)
    doc = json.loads(r.to_json())
    assert doc["b1_absolute"] == 0 and doc["boundary_genus"] == [0]
