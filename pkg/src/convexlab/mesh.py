"""Simplicial meshes of the test domains, with exact boundary-geometry metadata.

The Riemannian metric is always the induced metric of an ambient embedding:
flat domains sit in R^n, spherical caps in R^(n+1), the flat solid torus
B^2 x S^1(L) in R^4 via (x, y, R cos t, R sin t) with R = L / (2 pi).
Curvature data (normals, principal curvatures, mean curvature) come from the
analytic formulas of each family; a local quadric fit is only a fallback for
Custom meshes.

Convention: H is the trace of the second fundamental form, so the unit
sphere in R^3 has H = 2.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
import sympy as sp

from . import _kernels, harmonics
from .errors import (
    DegenerateCell,
    InadmissibleSpec,
    QuadricFitFailure,
    RollingBallViolation,
    UnsupportedDimension,
)

FAMILIES = ("Ball", "Ellipsoid", "SupportBody", "SphericalCap", "ProductSolidTorus", "Custom")

SURFACE_TOL = 1e-12


@dataclass
class CurvatureFlags:
    ric_lower: float
    pi_lower: float
    sec_lower: Optional[float] = None

    def to_dict(self):
        d = {"ric_lower": self.ric_lower, "pi_lower": self.pi_lower}
        if self.sec_lower is not None:
            d["sec_lower"] = self.sec_lower
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["ric_lower"], d["pi_lower"], d.get("sec_lower"))


@dataclass
class DomainSpec:
    family: str
    parameters: dict = field(default_factory=dict)
    refinement_level: int = 0


@dataclass
class SimplicialMesh:
    intrinsic_dim: int
    ambient_dim: int
    vertices: np.ndarray       # (V, m) float64
    cells: np.ndarray          # (C, n+1) int64
    boundary_facets: np.ndarray  # (B, n) int64, outward-oriented
    family_tag: str = "Custom"
    parameters: dict = field(default_factory=dict)
    refinement_level: int = 0
    curvature_flags: Optional[CurvatureFlags] = None
    # unit normal direction on the support sphere, per boundary vertex
    # (SupportBody only; needed for exact re-projection under refinement)
    boundary_dirs: Optional[dict] = None

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.cells = np.ascontiguousarray(self.cells, dtype=np.int64)
        self.boundary_facets = np.ascontiguousarray(self.boundary_facets, dtype=np.int64)

    @property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_facets)

    def edge_lengths(self) -> np.ndarray:
        k = self.cells.shape[1]
        pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
        v = self.vertices
        return np.concatenate(
            [np.linalg.norm(v[self.cells[:, i]] - v[self.cells[:, j]], axis=1) for i, j in pairs]
        )

    def mesh_size(self) -> float:
        return float(self.edge_lengths().max())

    # -- validation ------------------------------------------------------

    def validate(self):
        n = self.intrinsic_dim
        if self.cells.shape[1] != n + 1 or self.boundary_facets.shape[1] != n:
            raise InadmissibleSpec("cell/facet arity inconsistent with intrinsic_dim")
        vols = _kernels.simplex_measures(self.vertices, self.cells)
        if vols.min() <= 0.0:
            raise DegenerateCell(int(np.argmin(vols)))
        # facet incidence: boundary facets once, interior facets twice
        counts = {}
        for cell in self.cells:
            for i in range(n + 1):
                f = tuple(sorted(np.delete(cell, i)))
                counts[f] = counts.get(f, 0) + 1
        for f in self.boundary_facets:
            key = tuple(sorted(f))
            if counts.get(key) != 1:
                raise InadmissibleSpec(f"boundary facet {key} not a face of exactly one cell")
        n_boundary = sum(1 for c in counts.values() if c == 1)
        if n_boundary != len(self.boundary_facets):
            raise InadmissibleSpec("stored boundary facets do not exhaust the topological boundary")
        if any(c > 2 for c in counts.values()):
            raise InadmissibleSpec("facet shared by more than two cells")
        # boundary is a closed (n-1)-manifold
        if n >= 2:
            ridge = {}
            for f in self.boundary_facets:
                for i in range(n):
                    r = tuple(sorted(np.delete(f, i)))
                    ridge[r] = ridge.get(r, 0) + 1
            if any(c != 2 for c in ridge.values()):
                raise InadmissibleSpec("boundary facets do not close up into a manifold")
        self._check_surface_equation()
        return True

    def _check_surface_equation(self):
        v = self.vertices
        b = self.boundary_vertices
        tag = self.family_tag
        p = self.parameters
        if tag == "Ball":
            r = p.get("radius", 1.0)
            err = np.abs(np.linalg.norm(v[b], axis=1) - r)
        elif tag == "Ellipsoid":
            ax = np.asarray(p["semi_axes"])
            err = np.abs(np.sum((v[b] / ax) ** 2, axis=1) - 1.0)
        elif tag == "SphericalCap":
            err = np.abs(np.linalg.norm(v, axis=1) - 1.0)  # all vertices on S^n
            cr = p["cap_radius"]
            err = np.concatenate([err, np.abs(v[b][:, -1] - math.cos(cr))])
        elif tag == "ProductSolidTorus":
            R = p["circumference"] / (2.0 * math.pi)
            err = np.abs(np.linalg.norm(v[:, 2:4], axis=1) - R)
            err = np.concatenate([err, np.abs(np.linalg.norm(v[b][:, :2], axis=1) - 1.0)])
        elif tag == "SupportBody":
            return  # boundary positions are exact images of stored directions
        else:
            return
        if err.size and err.max() > SURFACE_TOL:
            raise InadmissibleSpec(
                f"{tag} vertices off the analytic surface by {err.max():.3e}"
            )

    # -- serialization ---------------------------------------------------

    def to_json(self) -> str:
        family = {
            "tag": self.family_tag,
            "parameters": _encode_params(self.parameters),
            "refinement_level": self.refinement_level,
        }
        if self.boundary_dirs is not None:
            family["boundary_dirs"] = {
                str(k): list(map(float, d)) for k, d in sorted(self.boundary_dirs.items())
            }
        doc = {
            "intrinsic_dim": self.intrinsic_dim,
            "ambient_dim": self.ambient_dim,
            "vertices": [list(map(float, row)) for row in self.vertices],
            "cells": [list(map(int, row)) for row in self.cells],
            "boundary_facets": [list(map(int, row)) for row in self.boundary_facets],
            "family": family,
            "curvature_flags": self.curvature_flags.to_dict() if self.curvature_flags else None,
        }
        return dumps_17g(doc)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "SimplicialMesh":
        doc = json.loads(text)
        fam = doc.get("family", {}) or {}
        dirs = fam.get("boundary_dirs")
        return cls(
            intrinsic_dim=doc["intrinsic_dim"],
            ambient_dim=doc["ambient_dim"],
            vertices=np.array(doc["vertices"], dtype=float),
            cells=np.array(doc["cells"], dtype=np.int64),
            boundary_facets=np.array(doc["boundary_facets"], dtype=np.int64),
            family_tag=fam.get("tag", "Custom"),
            parameters=_decode_params(fam.get("parameters", {})),
            refinement_level=fam.get("refinement_level", 0),
            curvature_flags=(
                CurvatureFlags.from_dict(doc["curvature_flags"]) if doc.get("curvature_flags") else None
            ),
            boundary_dirs=(
                {int(k): np.array(d) for k, d in dirs.items()} if dirs else None
            ),
        )

    @classmethod
    def load(cls, path) -> "SimplicialMesh":
        with open(path) as fh:
            return cls.from_json(fh.read())


@dataclass
class BoundaryGeometry:
    vertex_indices: np.ndarray   # boundary vertex indices, ascending
    vertex_normals: np.ndarray   # (B, m) outward unit vectors
    pi_min: np.ndarray
    pi_max: np.ndarray
    mean_curvature: np.ndarray
    area_weights: np.ndarray


def _encode_params(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        if k == "coefficients":
            out[k] = [[int(l), int(m), float(e)] for (l, m), e in sorted(v.items())]
        elif isinstance(v, np.ndarray):
            out[k] = list(map(float, v))
        else:
            out[k] = v
    return out


def _decode_params(params: dict) -> dict:
    out = dict(params)
    if "coefficients" in out:
        out["coefficients"] = {(int(l), int(m)): float(e) for l, m, e in out["coefficients"]}
    return out


def dumps_17g(obj) -> str:
    """JSON with floats printed to 17 significant digits (exact round-trip)."""
    buf = io.StringIO()
    _dump(obj, buf)
    return buf.getvalue()


def _dump(obj, buf):
    if isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            raise ValueError("non-finite float in JSON document")
        if obj == 0.0:
            obj = 0.0  # normalize -0.0: "-0" would re-parse as the integer 0
        buf.write(format(obj, ".17g"))
    elif isinstance(obj, bool):
        buf.write("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        buf.write(str(int(obj)))
    elif obj is None:
        buf.write("null")
    elif isinstance(obj, str):
        buf.write(json.dumps(obj))
    elif isinstance(obj, (list, tuple)):
        buf.write("[")
        for i, item in enumerate(obj):
            if i:
                buf.write(", ")
            _dump(item, buf)
        buf.write("]")
    elif isinstance(obj, dict):
        buf.write("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                buf.write(", ")
            buf.write(json.dumps(str(k)))
            buf.write(": ")
            _dump(v, buf)
        buf.write("}")
    else:
        raise TypeError(f"cannot serialize {type(obj)}")


# ---------------------------------------------------------------------------
# seeds and refinement
# ---------------------------------------------------------------------------


def _ball_seed(n: int):
    """Cross-polytope coned to the origin (square for n=2, octahedron for n=3)."""
    if n == 2:
        verts = np.array([[0.0, 0.0], [1, 0], [0, 1], [-1, 0], [0, -1]])
        cells = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]])
        facets = np.array([[1, 2], [2, 3], [3, 4], [4, 1]])
        return verts, cells, facets
    if n == 3:
        verts = np.zeros((7, 3))
        verts[1:4] = np.eye(3)
        verts[4:7] = -np.eye(3)
        cells, facets = [], []
        for sx in (1, -1):
            for sy in (1, -1):
                for sz in (1, -1):
                    a = 1 if sx > 0 else 4
                    b = 2 if sy > 0 else 5
                    c = 3 if sz > 0 else 6
                    cells.append([0, a, b, c])
                    facets.append([a, b, c])
        return verts, np.array(cells), np.array(facets)
    raise UnsupportedDimension(f"ball seed for n in {{2,3}}, got {n}")


def _boundary_edges(mesh: SimplicialMesh) -> set:
    edges = set()
    for f in mesh.boundary_facets:
        k = len(f)
        if k == 2:
            edges.add(tuple(sorted(f)))
        else:
            for i in range(k):
                for j in range(i + 1, k):
                    edges.add(tuple(sorted((f[i], f[j]))))
    return edges


def _split_tet_cells(cells, mid, vertices):
    new_cells = []
    for a, b, c, d in cells:
        mab, mac, mad = mid[(min(a, b), max(a, b))], mid[(min(a, c), max(a, c))], mid[(min(a, d), max(a, d))]
        mbc, mbd, mcd = mid[(min(b, c), max(b, c))], mid[(min(b, d), max(b, d))], mid[(min(c, d), max(c, d))]
        new_cells += [[a, mab, mac, mad], [b, mab, mbc, mbd], [c, mac, mbc, mcd], [d, mad, mbd, mcd]]
        # interior octahedron: shortest diagonal, ties broken by index pair
        diags = [
            ((mab, mcd), (mac, mbc, mbd, mad)),
            ((mac, mbd), (mab, mbc, mcd, mad)),
            ((mad, mbc), (mab, mbd, mcd, mac)),
        ]
        lengths = [
            (float(np.linalg.norm(vertices[p] - vertices[q])), tuple(sorted((p, q))))
            for (p, q), _ in diags
        ]
        pick = min(range(3), key=lambda i: lengths[i])
        (p, q), ring = diags[pick]
        for i in range(4):
            new_cells.append([p, q, ring[i], ring[(i + 1) % 4]])
    return new_cells


def refine(mesh: SimplicialMesh) -> SimplicialMesh:
    """Midpoint refinement; new boundary vertices are projected to the exact surface."""
    n = mesh.intrinsic_dim
    verts = list(mesh.vertices)
    mid = {}

    def midpoint(a, b):
        key = (min(a, b), max(a, b))
        if key not in mid:
            verts.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
            mid[key] = len(verts) - 1
        return mid[key]

    if n == 2:
        new_cells = []
        for a, b, c in mesh.cells:
            mab, mbc, mca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_cells += [[a, mab, mca], [mab, b, mbc], [mca, mbc, c], [mab, mbc, mca]]
        new_facets = []
        for a, b in mesh.boundary_facets:
            m = midpoint(a, b)
            new_facets += [[a, m], [m, b]]
    elif n == 3:
        for a, b, c, d in mesh.cells:
            for u, w in ((a, b), (a, c), (a, d), (b, c), (b, d), (c, d)):
                midpoint(u, w)
        new_cells = _split_tet_cells(mesh.cells, mid, np.array(verts))
        new_facets = []
        for a, b, c in mesh.boundary_facets:
            mab, mbc, mca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_facets += [[a, mab, mca], [mab, b, mbc], [mca, mbc, c], [mab, mbc, mca]]
    else:
        raise UnsupportedDimension(f"refine for n in {{2,3}}, got {n}")

    vertices = np.array(verts)
    bedges = _boundary_edges(mesh)
    new_boundary = {mid[e] for e in mid if e in bedges}
    new_dirs = dict(mesh.boundary_dirs) if mesh.boundary_dirs is not None else None

    vertices = _project_new_vertices(mesh, vertices, mid, new_boundary, new_dirs)

    out = SimplicialMesh(
        intrinsic_dim=n,
        ambient_dim=mesh.ambient_dim,
        vertices=vertices,
        cells=np.array(new_cells, dtype=np.int64),
        boundary_facets=np.array(new_facets, dtype=np.int64),
        family_tag=mesh.family_tag,
        parameters=dict(mesh.parameters),
        refinement_level=mesh.refinement_level + 1,
        curvature_flags=mesh.curvature_flags,
        boundary_dirs=new_dirs,
    )
    if out.intrinsic_dim == out.ambient_dim:
        _orient_boundary_flat(out)
    return out


def _project_new_vertices(mesh, vertices, mid, new_boundary, new_dirs):
    tag = mesh.family_tag
    p = mesh.parameters
    old_n = len(mesh.vertices)
    new_idx = np.arange(old_n, len(vertices))
    is_b = np.array([i in new_boundary for i in new_idx])

    if tag == "Ball":
        r = p.get("radius", 1.0)
        bi = new_idx[is_b]
        vertices[bi] = r * vertices[bi] / np.linalg.norm(vertices[bi], axis=1, keepdims=True)
    elif tag == "Ellipsoid":
        ax = np.asarray(p["semi_axes"])
        bi = new_idx[is_b]
        scale = 1.0 / np.sqrt(np.sum((vertices[bi] / ax) ** 2, axis=1))
        vertices[bi] = vertices[bi] * scale[:, None]
    elif tag == "SphericalCap":
        cr = p["cap_radius"]
        vertices[new_idx] /= np.linalg.norm(vertices[new_idx], axis=1, keepdims=True)
        bi = new_idx[is_b]
        if len(bi):
            eq = vertices[bi][:, :-1]
            eq = eq / np.linalg.norm(eq, axis=1, keepdims=True) * math.sin(cr)
            vertices[bi] = np.column_stack([eq, np.full(len(bi), math.cos(cr))])
    elif tag == "ProductSolidTorus":
        R = p["circumference"] / (2.0 * math.pi)
        zw = vertices[new_idx][:, 2:4]
        vertices[new_idx, 2:4] = zw / np.linalg.norm(zw, axis=1, keepdims=True) * R
        bi = new_idx[is_b]
        if len(bi):
            xy = vertices[bi][:, :2]
            vertices[bi, 0:2] = xy / np.linalg.norm(xy, axis=1, keepdims=True)
    elif tag == "SupportBody":
        grad_h = _support_gradient(p)
        inv = {v: k for k, v in mid.items()}
        for i in new_idx[is_b]:
            a, b = inv[i]
            d = new_dirs[a] + new_dirs[b]
            d = d / np.linalg.norm(d)
            vertices[i] = grad_h(d)
            new_dirs[int(i)] = d
    return vertices


def _orient_boundary_flat(mesh: SimplicialMesh):
    """Reorder flat-family facet vertices so the facet normal points outward."""
    n = mesh.intrinsic_dim
    cell_of = {}
    for ci, cell in enumerate(mesh.cells):
        for i in range(n + 1):
            cell_of[tuple(sorted(np.delete(cell, i)))] = ci
    cents = mesh.vertices[mesh.cells].mean(axis=1)
    for fi, f in enumerate(mesh.boundary_facets):
        ci = cell_of[tuple(sorted(f))]
        d = mesh.vertices[f].mean(axis=0) - cents[ci]
        v = mesh.vertices
        if n == 2:
            e = v[f[1]] - v[f[0]]
            normal = np.array([e[1], -e[0]])
        else:
            normal = np.cross(v[f[1]] - v[f[0]], v[f[2]] - v[f[0]])
        if normal @ d < 0:
            mesh.boundary_facets[fi, [0, 1]] = mesh.boundary_facets[fi, [1, 0]]


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def generate_domain(spec: DomainSpec) -> SimplicialMesh:
    """Deterministic mesh generation for the analytic families."""
    fam = spec.family
    p = spec.parameters
    r = spec.refinement_level
    if r < 0:
        raise InadmissibleSpec("refinement_level must be >= 0")
    if fam == "Ball":
        return unit_ball(p.get("dim", 3), r, radius=p.get("radius", 1.0))
    if fam == "Ellipsoid":
        return ellipsoid(p["semi_axes"], r)
    if fam == "SphericalCap":
        return spherical_cap(p.get("dim", 2), p["cap_radius"], r)
    if fam == "ProductSolidTorus":
        return solid_torus(p["circumference"], r)
    if fam == "SupportBody":
        return support_body(p.get("coefficients", {}), r, h0=p.get("h0", 1.0))
    raise InadmissibleSpec(f"unknown family {fam!r}")


def unit_ball(n: int, refinement: int, radius: float = 1.0) -> SimplicialMesh:
    if radius <= 0:
        raise InadmissibleSpec("radius must be positive")
    verts, cells, facets = _ball_seed(n)
    mesh = SimplicialMesh(
        intrinsic_dim=n,
        ambient_dim=n,
        vertices=verts * radius,
        cells=cells,
        boundary_facets=facets,
        family_tag="Ball",
        parameters={"dim": n, "radius": radius},
        refinement_level=0,
        curvature_flags=CurvatureFlags(ric_lower=0.0, pi_lower=1.0 / radius, sec_lower=0.0),
    )
    _orient_boundary_flat(mesh)
    for _ in range(refinement):
        mesh = refine(mesh)
    return mesh


def ellipsoid(semi_axes, refinement: int) -> SimplicialMesh:
    ax = np.asarray(semi_axes, dtype=float)
    if ax.shape != (3,) or np.any(ax <= 0):
        raise InadmissibleSpec("ellipsoid needs three positive semi-axes")
    verts, cells, facets = _ball_seed(3)
    mesh = SimplicialMesh(
        intrinsic_dim=3,
        ambient_dim=3,
        vertices=verts * ax,
        cells=cells,
        boundary_facets=facets,
        family_tag="Ellipsoid",
        parameters={"semi_axes": list(ax)},
        refinement_level=0,
        curvature_flags=CurvatureFlags(
            ric_lower=0.0, pi_lower=float(ax.min() / ax.max() ** 2), sec_lower=0.0
        ),
    )
    _orient_boundary_flat(mesh)
    for _ in range(refinement):
        mesh = refine(mesh)
    return mesh


def spherical_cap(n: int, cap_radius: float, refinement: int) -> SimplicialMesh:
    """Geodesic ball of radius `cap_radius` about the pole of S^n in R^(n+1)."""
    if not 0 < cap_radius <= math.pi / 2:
        raise InadmissibleSpec("cap_radius must be in (0, pi/2] (convex boundary)")
    flat = unit_ball(n, refinement)
    v = flat.vertices
    rho = np.linalg.norm(v, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        dirs = np.where(rho[:, None] > 0, v / np.maximum(rho, 1e-300)[:, None], 0.0)
    ang = rho * cap_radius
    mapped = np.column_stack([np.sin(ang)[:, None] * dirs, np.cos(ang)])
    pi_lower = 1.0 / math.tan(cap_radius) if cap_radius < math.pi / 2 else 0.0
    return SimplicialMesh(
        intrinsic_dim=n,
        ambient_dim=n + 1,
        vertices=mapped,
        cells=flat.cells,
        boundary_facets=flat.boundary_facets,
        family_tag="SphericalCap",
        parameters={"dim": n, "cap_radius": cap_radius},
        refinement_level=refinement,
        curvature_flags=CurvatureFlags(ric_lower=float(n - 1), pi_lower=pi_lower, sec_lower=1.0),
    )


def _torus_sections(L: float, refinement: int) -> int:
    return max(12, int(math.ceil(2.0 * L)) * 2**refinement)


def solid_torus(L: float, refinement: int) -> SimplicialMesh:
    """Flat B^2 x S^1(L) in R^4; prism layers split into tetrahedra."""
    if L <= 0:
        raise InadmissibleSpec("circumference must be positive")
    disc = unit_ball(2, refinement)
    R = L / (2.0 * math.pi)
    nd = len(disc.vertices)
    nt = _torus_sections(L, refinement)
    theta = 2.0 * math.pi * np.arange(nt) / nt
    verts = np.empty((nd * nt, 4))
    for j in range(nt):
        verts[j * nd:(j + 1) * nd, 0:2] = disc.vertices
        verts[j * nd:(j + 1) * nd, 2] = R * math.cos(theta[j])
        verts[j * nd:(j + 1) * nd, 3] = R * math.sin(theta[j])

    def quad_diag(b0, b1, t1, t0):
        # diagonal through the smallest global index: (b0,t1) or (b1,t0)
        m = min(b0, b1, t0, t1)
        return (b0, t1) if m in (b0, t1) else (b1, t0)

    cells = []
    for j in range(nt):
        jn = (j + 1) % nt
        for tri in disc.cells:
            bot = [int(t) + j * nd for t in tri]
            top = [int(t) + jn * nd for t in tri]
            cells += _split_prism(bot, top, quad_diag)
    facets = []
    for a, b in disc.boundary_facets:
        for j in range(nt):
            jn = (j + 1) % nt
            b0, b1 = int(a) + j * nd, int(b) + j * nd
            t0, t1 = int(a) + jn * nd, int(b) + jn * nd
            d = quad_diag(b0, b1, t1, t0)
            if d == (b0, t1):
                facets += [[b0, b1, t1], [b0, t1, t0]]
            else:
                facets += [[b0, b1, t0], [b1, t1, t0]]
    return SimplicialMesh(
        intrinsic_dim=3,
        ambient_dim=4,
        vertices=verts,
        cells=np.array(cells, dtype=np.int64),
        boundary_facets=np.array(facets, dtype=np.int64),
        family_tag="ProductSolidTorus",
        parameters={"circumference": L},
        refinement_level=refinement,
        curvature_flags=CurvatureFlags(ric_lower=0.0, pi_lower=0.0, sec_lower=0.0),
    )


def _split_prism(bot, top, quad_diag):
    """Split prism bot=(b0,b1,b2), top=(t0,t1,t2) into 3 tets.

    Quad diagonals all follow the per-quad minimum-index rule, so adjacent
    prisms and the boundary triangulation agree.
    """
    six = bot + top
    m = six.index(min(six))
    if m >= 3:  # smallest vertex on top: flip the prism
        bot, top = top, bot
        m -= 3
    # rotate so the smallest vertex is bot[0]
    order = [(m + i) % 3 for i in range(3)]
    b = [bot[i] for i in order]
    t = [top[i] for i in order]
    # quads at b0 use diagonals from b0 (it is the minimum of both)
    d = quad_diag(b[1], b[2], t[2], t[1])
    if d == (b[1], t[2]):
        return [[b[0], b[1], b[2], t[2]], [b[0], b[1], t[2], t[1]], [b[0], t[1], t[2], t[0]]]
    return [[b[0], b[1], b[2], t[1]], [b[0], b[2], t[2], t[1]], [b[0], t[1], t[2], t[0]]]


# -- support bodies ---------------------------------------------------------

_SX, _SY, _SZ = sp.symbols("x y z", real=True)


@lru_cache(maxsize=None)
def _support_callables(h0: float, coeff_items: tuple):
    """Lambdified gradient and Hessian of the 1-homogeneous support function."""
    rho = sp.sqrt(_SX**2 + _SY**2 + _SZ**2)
    H = h0 * rho
    for (l, m), eps in coeff_items:
        poly = harmonics.real_harmonic_poly(3, l, m).subs(
            {harmonics._X: _SX, harmonics._Y: _SY, harmonics._Z: _SZ}
        )
        H += eps * rho ** (1 - l) * poly
    syms = (_SX, _SY, _SZ)
    grad = [sp.diff(H, s) for s in syms]
    hess = [[sp.diff(g, s) for s in syms] for g in grad]
    grad_f = sp.lambdify(syms, grad, "numpy")
    hess_f = sp.lambdify(syms, hess, "numpy")
    return grad_f, hess_f


def _support_items(params):
    return tuple(sorted((tuple(k), float(v)) for k, v in params.get("coefficients", {}).items()))


def _support_gradient(params):
    grad_f, _ = _support_callables(params.get("h0", 1.0), _support_items(params))

    def grad(d):
        return np.array(grad_f(*d), dtype=float)

    return grad


def _support_radii(params, dirs: np.ndarray) -> np.ndarray:
    """Principal radii of curvature at each direction (rows of `dirs`)."""
    _, hess_f = _support_callables(params.get("h0", 1.0), _support_items(params))
    radii = np.empty((len(dirs), 2))
    for i, d in enumerate(dirs):
        Hm = np.array(hess_f(*d), dtype=float)
        P = np.eye(3) - np.outer(d, d)
        ev = np.linalg.eigvalsh(P @ Hm @ P)
        # the radial direction contributes an exact zero eigenvalue
        ev = np.delete(ev, np.argmin(np.abs(ev)))
        radii[i] = np.sort(ev)
    return radii


def support_body(coefficients: dict, refinement: int, h0: float = 1.0) -> SimplicialMesh:
    """Convex body from support function h = h0 + sum eps_lm Y_lm on S^2.

    Admissibility (rolling-ball constraint): all principal radii of curvature
    in (0, 1], checked on a dense direction grid, so the second fundamental
    form satisfies Pi >= 1.
    """
    params = {"h0": float(h0), "coefficients": dict(coefficients)}
    grid = _direction_grid()
    radii = _support_radii(params, grid)
    if radii.min() <= 1e-10:
        raise InadmissibleSpec(
            f"support function not convex: min radius of curvature {radii.min():.3e}"
        )
    if radii.max() > 1.0 + 1e-9:
        raise RollingBallViolation(radii.max())

    ball = unit_ball(3, refinement)
    grad = _support_gradient(params)
    bset = set(map(int, ball.boundary_vertices))
    verts = ball.vertices.copy()
    dirs = {}
    for i in range(len(verts)):
        v = ball.vertices[i]
        rho = np.linalg.norm(v)
        if rho == 0.0:
            continue
        d = v / rho
        verts[i] = rho * grad(d)
        if i in bset:
            dirs[i] = d
    return SimplicialMesh(
        intrinsic_dim=3,
        ambient_dim=3,
        vertices=verts,
        cells=ball.cells,
        boundary_facets=ball.boundary_facets,
        family_tag="SupportBody",
        parameters=params,
        refinement_level=refinement,
        curvature_flags=CurvatureFlags(ric_lower=0.0, pi_lower=1.0, sec_lower=0.0),
        boundary_dirs=dirs,
    )


@lru_cache(maxsize=1)
def _direction_grid() -> np.ndarray:
    ball = unit_ball(3, 4)
    return np.asarray(ball.vertices[ball.boundary_vertices])


def disjoint_union(a: SimplicialMesh, b: SimplicialMesh) -> SimplicialMesh:
    if a.intrinsic_dim != b.intrinsic_dim or a.ambient_dim != b.ambient_dim:
        raise InadmissibleSpec("disjoint union needs matching dimensions")
    off = len(a.vertices)
    shift = np.zeros(a.ambient_dim)
    shift[0] = 3.0 * max(np.abs(a.vertices).max(), np.abs(b.vertices).max(), 1.0)
    return SimplicialMesh(
        intrinsic_dim=a.intrinsic_dim,
        ambient_dim=a.ambient_dim,
        vertices=np.vstack([a.vertices, b.vertices + shift]),
        cells=np.vstack([a.cells, b.cells + off]),
        boundary_facets=np.vstack([a.boundary_facets, b.boundary_facets + off]),
        family_tag="Custom",
        parameters={},
        refinement_level=0,
        curvature_flags=None,
    )


# ---------------------------------------------------------------------------
# measures and boundary geometry
# ---------------------------------------------------------------------------


def measure(mesh: SimplicialMesh) -> dict:
    vols = _kernels.simplex_measures(mesh.vertices, mesh.cells)
    areas = _kernels.simplex_measures(mesh.vertices, mesh.boundary_facets)
    return {"volume": float(vols.sum()), "boundary_area": float(areas.sum())}


def lumped_boundary_weights(mesh: SimplicialMesh) -> np.ndarray:
    """Lumped (n-1)-measure per boundary vertex (full vertex indexing)."""
    areas = _kernels.simplex_measures(mesh.vertices, mesh.boundary_facets)
    w = np.zeros(len(mesh.vertices))
    k = mesh.boundary_facets.shape[1]
    np.add.at(w, mesh.boundary_facets.ravel(), np.repeat(areas / k, k))
    return w


def boundary_geometry(mesh: SimplicialMesh) -> BoundaryGeometry:
    bidx = mesh.boundary_vertices
    v = mesh.vertices[bidx]
    n = mesh.intrinsic_dim
    tag = mesh.family_tag
    p = mesh.parameters
    nb = len(bidx)
    weights = lumped_boundary_weights(mesh)[bidx]

    if tag == "Ball":
        r = p.get("radius", 1.0)
        normals = v / r
        pi = np.full(nb, 1.0 / r)
        return BoundaryGeometry(bidx, normals, pi, pi.copy(), (n - 1) * pi, weights)
    if tag == "Ellipsoid":
        ax = np.asarray(p["semi_axes"])
        grad = 2.0 * v / ax**2
        gn = np.linalg.norm(grad, axis=1)
        normals = grad / gn[:, None]
        hess = np.diag(2.0 / ax**2)
        pi_min = np.empty(nb)
        pi_max = np.empty(nb)
        Hm = np.empty(nb)
        for i in range(nb):
            P = np.eye(3) - np.outer(normals[i], normals[i])
            S = P @ hess @ P / gn[i]
            ev = np.linalg.eigvalsh(S)
            ev = np.delete(ev, np.argmin(np.abs(ev)))
            pi_min[i], pi_max[i] = ev.min(), ev.max()
            Hm[i] = ev.sum()
        return BoundaryGeometry(bidx, normals, pi_min, pi_max, Hm, weights)
    if tag == "SphericalCap":
        cr = p["cap_radius"]
        omega = v[:, :-1] / math.sin(cr)
        normals = np.column_stack([math.cos(cr) * omega, np.full(nb, -math.sin(cr))])
        k = 1.0 / math.tan(cr) if cr < math.pi / 2 else 0.0
        pi = np.full(nb, k)
        return BoundaryGeometry(bidx, normals, pi, pi.copy(), (n - 1) * pi, weights)
    if tag == "ProductSolidTorus":
        normals = np.zeros((nb, 4))
        normals[:, 0:2] = v[:, 0:2]
        return BoundaryGeometry(
            bidx, normals, np.zeros(nb), np.ones(nb), np.ones(nb), weights
        )
    if tag == "SupportBody":
        normals = np.array([mesh.boundary_dirs[int(i)] for i in bidx])
        radii = _support_radii(p, normals)
        pi_min = 1.0 / radii[:, 1]
        pi_max = 1.0 / radii[:, 0]
        return BoundaryGeometry(bidx, normals, pi_min, pi_max, pi_min + pi_max, weights)
    return _quadric_fit_geometry(mesh, bidx, weights)


def _quadric_fit_geometry(mesh, bidx, weights):
    """2-ring least-squares quadric fit, fallback for Custom surface meshes."""
    if mesh.intrinsic_dim != 3 or mesh.ambient_dim != 3:
        raise UnsupportedDimension("quadric fit implemented for surfaces in R^3 only")
    v = mesh.vertices
    # facet normals (facets are outward-oriented for flat families)
    fnorm = np.cross(
        v[mesh.boundary_facets[:, 1]] - v[mesh.boundary_facets[:, 0]],
        v[mesh.boundary_facets[:, 2]] - v[mesh.boundary_facets[:, 0]],
    )
    adj = {int(i): set() for i in bidx}
    vnorm = {int(i): np.zeros(3) for i in bidx}
    for fi, f in enumerate(mesh.boundary_facets):
        for a in f:
            vnorm[int(a)] += fnorm[fi]
        for a in f:
            for b in f:
                if a != b:
                    adj[int(a)].add(int(b))
    nb = len(bidx)
    out = np.zeros((nb, 3)), np.zeros(nb), np.zeros(nb), np.zeros(nb)
    normals, pi_min, pi_max, Hm = out
    for row, i in enumerate(map(int, bidx)):
        ring = set(adj[i])
        for j in list(ring):
            ring |= adj[j]
        ring.discard(i)
        nrm = vnorm[i]
        nn = np.linalg.norm(nrm)
        if nn == 0 or len(ring) < 5:
            raise QuadricFitFailure(i)
        nrm = nrm / nn
        t1 = np.cross(nrm, [1.0, 0.0, 0.0])
        if np.linalg.norm(t1) < 1e-8:
            t1 = np.cross(nrm, [0.0, 1.0, 0.0])
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(nrm, t1)
        pts = v[sorted(ring)] - v[i]
        xs, ys, zs = pts @ t1, pts @ t2, pts @ nrm
        A = np.column_stack([0.5 * xs**2, xs * ys, 0.5 * ys**2, xs, ys])
        sol, _, rank, _ = np.linalg.lstsq(A, zs, rcond=None)
        if rank < 5:
            raise QuadricFitFailure(i)
        a, b, c, d, e = sol
        E = np.array([[1 + d * d, d * e], [d * e, 1 + e * e]])
        II = np.array([[a, b], [b, c]]) / math.sqrt(1 + d * d + e * e)
        ev = np.linalg.eigvals(np.linalg.solve(E, II))
        ev = np.sort(ev.real)
        # quadric height axis may point inward; flip to the outward normal sign
        normals[row] = nrm
        pi_min[row], pi_max[row] = ev
        Hm[row] = ev.sum()
    return BoundaryGeometry(bidx, normals, pi_min, pi_max, Hm, weights)
