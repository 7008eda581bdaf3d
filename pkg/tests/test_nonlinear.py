import math

import numpy as np
import pytest

from convexlab import nonlinear
from convexlab.errors import DomainViolation, UnsupportedExponentForm
from convexlab.mesh import measure, spherical_cap


def test_quotient_at_constant_is_area_power(disc4, ball2):
    for m, q in [(disc4, 2.0), (ball2, 2.5)]:
        area = measure(m)["boundary_area"]
        nb = len(m.boundary_vertices)
        val = nonlinear.boundary_quotient(m, np.full(nb, 3.7), q)
        assert val == pytest.approx(area ** ((q - 1) / (q + 1)), rel=1e-12)


def test_quotient_scale_invariant(disc4):
    rng = np.random.default_rng(0)
    f = np.exp(rng.normal(size=len(disc4.boundary_vertices)))
    a = nonlinear.boundary_quotient(disc4, f, 2.0)
    b = nonlinear.boundary_quotient(disc4, 10.0 * f, 2.0)
    assert a == pytest.approx(b, rel=1e-12)


def test_minimize_quotient_disc_constant(disc4):
    run = nonlinear.minimize_quotient(disc4, 2.0, starts=3, seed=11)
    assert run.classification == "Constant"
    assert run.constancy_ratio < 1e-4
    target = measure(disc4)["boundary_area"] ** (1.0 / 3.0)
    assert run.quotient_value == pytest.approx(target, rel=5e-3)


def test_minimize_quotient_rejects_supercritical(ball2):
    with pytest.raises(ValueError):
        nonlinear.minimize_quotient(ball2, 3.5)


def test_exp_disc_lambda1_constant_start(disc4):
    run = nonlinear.solve_exp_disc(disc4, 1.0, "constant")
    assert run.classification == "Constant"
    assert run.residual < 1e-9
    assert np.allclose(run.final_boundary_values, 0.0, atol=1e-9)


def test_exp_disc_subcritical_random_start(disc4):
    rng = np.random.default_rng(5)
    start = rng.normal(0.0, 2.0, len(disc4.vertices))
    run = nonlinear.solve_exp_disc(disc4, 0.5, start)
    assert run.classification == "Constant"
    assert np.allclose(run.final_boundary_values, math.log(0.5), atol=1e-6)


def test_semilinear_rejects_2d(disc4):
    with pytest.raises(UnsupportedExponentForm):
        nonlinear.solve_semilinear(disc4, 2.0, 1.0, "constant")


def test_semilinear_constant_solution(ball2):
    # du/dnu + lam*u = u^q with u = c constant harmonic: lam*c = c^q
    lam, q = 0.5, 2.0
    run = nonlinear.solve_semilinear(ball2, q, lam, "constant")
    assert run.classification == "Constant"
    assert np.allclose(run.final_boundary_values, lam ** (1.0 / (q - 1.0)), atol=1e-8)
    assert run.residual < 1e-8


def test_extremal_ua_domain():
    with pytest.raises(DomainViolation):
        nonlinear.extremal_ua(3, [0.0, 0.0, 1.0], [0.1, 0.0, 0.0])
    v = nonlinear.extremal_ua(3, [0.0, 0.0, 0.0], [0.3, 0.1, 0.0])
    assert v == pytest.approx(math.sqrt(2.0))  # (2/(n-2))^((n-2)/2), n = 3


def test_phi_a_harmonic_mean_value():
    # phi_a is harmonic in the ball: its spherical mean equals its center value
    a = np.array([0.2, 0.1, -0.3])
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(20000, 3))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    r = 0.5
    mean = np.mean(nonlinear.phi_a(3, a, r * pts))
    center = nonlinear.phi_a(3, a, np.zeros((1, 3)))
    assert mean == pytest.approx(center, rel=5e-3)


def test_beckner_zero_at_constants():
    assert abs(nonlinear.beckner_slack(3, {(0, 0): 1.3}, 3.0)) < 1e-12


def test_beckner_nonnegative_sample():
    rng = np.random.default_rng(7)
    keys = [(l, m) for l in range(5) for m in range(-l, l + 1)]
    for _ in range(10):
        coeffs = {k: rng.normal() for k in keys}
        for q in (2.0, 3.0):
            assert nonlinear.beckner_slack(3, coeffs, q) >= -1e-8




def test_sobolev_cap_nonnegative(cap2):
    for fn in (lambda x: np.ones(len(x)), lambda x: 1.0 + 0.3 * x[:, 0]):
        assert nonlinear.sobolev_check(cap2, fn, 2.0) >= -1e-8


def test_sobolev_wrong_family(ball2):
    with pytest.raises(Exception):
        nonlinear.sobolev_check(ball2, lambda x: np.ones(len(x)), 2.0)
