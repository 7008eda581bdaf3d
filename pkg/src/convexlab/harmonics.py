"""Real spherical harmonics as Cartesian polynomials, plus sphere quadrature.

Basis convention: keys are (l, m) with the basis L2-orthonormal on the unit
sphere S^(n-1).  For n = 3, m > 0 is the cos branch, m < 0 the sin branch,
m = 0 zonal.  For n = 2 the circle basis is (0, 0) -> 1/sqrt(2*pi) and
(l, +-1) -> cos/sin(l*theta)/sqrt(pi).

The polynomials are homogeneous harmonic of degree l, so the harmonic
extension of Y_lm to the unit ball is exactly the polynomial itself and the
Steklov image is l * Y_lm.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import sympy as sp

from .errors import UnsupportedDimension

_X, _Y, _Z = sp.symbols("x y z", real=True)


@lru_cache(maxsize=None)
def real_harmonic_poly(n: int, l: int, m: int) -> sp.Expr:
    """Homogeneous harmonic polynomial equal to r^l * Y_lm on the sphere."""
    if n == 2:
        if l == 0:
            return sp.Integer(1) / sp.sqrt(2 * sp.pi)
        w = (_X + sp.I * _Y) ** l
        if m == 1:
            return sp.expand(sp.re(w)) / sp.sqrt(sp.pi)
        if m == -1:
            return sp.expand(sp.im(w)) / sp.sqrt(sp.pi)
        raise ValueError(f"invalid circle harmonic index ({l},{m})")
    if n != 3:
        raise UnsupportedDimension(f"harmonics implemented for n in {{2,3}}, got {n}")
    if abs(m) > l:
        raise ValueError(f"invalid index ({l},{m})")
    am = abs(m)
    u = sp.Symbol("u")
    q = sp.diff(sp.legendre(l, u), u, am)  # degree l-am polynomial
    r2 = _X**2 + _Y**2 + _Z**2
    # r^(l-am) * q(z/r) is polynomial because q has parity l-am
    poly = sp.Integer(0)
    qpoly = sp.Poly(q, u)
    for (k,), coef in qpoly.terms():
        poly += coef * _Z**k * r2 ** sp.Rational(l - am - k, 2)
    w = (_X + sp.I * _Y) ** am
    ang = sp.expand(sp.re(w)) if m >= 0 else sp.expand(sp.im(w))
    norm = sp.sqrt(
        sp.Rational(2 * l + 1, 4) / sp.pi * sp.factorial(l - am) / sp.factorial(l + am)
    )
    if m != 0:
        norm *= sp.sqrt(2)
    return sp.expand(norm * poly * ang)


@lru_cache(maxsize=None)
def _lambdified(n: int, l: int, m: int):
    expr = real_harmonic_poly(n, l, m)
    syms = (_X, _Y) if n == 2 else (_X, _Y, _Z)
    return sp.lambdify(syms, expr, "numpy")


def evaluate(n: int, l: int, m: int, points: np.ndarray) -> np.ndarray:
    """Evaluate the harmonic polynomial at points of shape (N, n)."""
    f = _lambdified(n, l, m)
    vals = f(*(points[:, i] for i in range(n)))
    return np.broadcast_to(np.asarray(vals, dtype=float), (len(points),)).copy()


def sphere_area(n: int) -> float:
    """|S^(n-1)| = 2 pi^(n/2) / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@lru_cache(maxsize=None)
def sphere_quadrature(n: int, level: int):
    """Product quadrature on S^(n-1): points (N, n) and weights summing to |S^(n-1)|.

    For n = 3 this is Gauss-Legendre in cos(theta) x trapezoid in phi with
    `level` nodes per direction (2*level in phi); exact for spherical
    polynomials of degree <= min(2*level - 1, 2*level - 1).
    """
    if n == 2:
        m = max(4, 2 * level)
        theta = 2.0 * np.pi * np.arange(m) / m
        pts = np.column_stack([np.cos(theta), np.sin(theta)])
        wts = np.full(m, 2.0 * np.pi / m)
        return pts, wts
    if n != 3:
        raise UnsupportedDimension(f"quadrature implemented for n in {{2,3}}, got {n}")
    u, wu = np.polynomial.legendre.leggauss(level)
    m = 2 * level
    phi = 2.0 * np.pi * np.arange(m) / m
    su = np.sqrt(1.0 - u**2)
    x = np.outer(su, np.cos(phi)).ravel()
    y = np.outer(su, np.sin(phi)).ravel()
    z = np.repeat(u, m)
    pts = np.column_stack([x, y, z])
    wts = np.repeat(wu, m) * (2.0 * np.pi / m)
    return pts, wts


@lru_cache(maxsize=None)
def _basis_on_grid(n: int, keys: tuple, level: int) -> np.ndarray:
    pts, _ = sphere_quadrature(n, level)
    return np.column_stack([evaluate(n, l, m, pts) for (l, m) in keys])


def integrate_abs_power(n: int, coeffs: dict, p: float, rtol: float = 1e-9):
    """integral over S^(n-1) of |F|^p for F = sum c_lm Y_lm.

    Returns (value, achieved_rtol).  Even integer powers are integrated
    exactly; otherwise the product grid is doubled until two consecutive
    values agree to rtol.
    """
    keys = tuple(sorted(coeffs))
    c = np.array([coeffs[k] for k in keys])
    lmax = max((l for (l, _) in keys), default=0)
    if p == round(p) and int(round(p)) % 2 == 0:
        deg = lmax * int(round(p))
        level = max(4, deg // 2 + 2)
        B = _basis_on_grid(n, keys, level)
        _, w = sphere_quadrature(n, level)
        return float(w @ (B @ c) ** p), 0.0
    prev = None
    achieved = np.inf
    level = max(16, 2 * lmax + 2)
    for _ in range(8):
        B = _basis_on_grid(n, keys, level)
        _, w = sphere_quadrature(n, level)
        val = float(w @ np.abs(B @ c) ** p)
        if prev is not None:
            achieved = abs(val - prev) / max(abs(val), 1e-300)
            if achieved <= rtol:
                return val, achieved
        prev = val
        level *= 2
    return prev, achieved
