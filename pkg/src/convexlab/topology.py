"""Simplicial cohomology ranks over prime fields and boundary-surface
classification, plus the audit that compares computed ranks against what the
curvature flags predict.

Field coefficients (31-bit primes) stand in for real cohomology; every rank
is computed twice with different primes to guard against an unlucky
characteristic.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonManifoldBoundary, PrimeCollision
from .mesh import SimplicialMesh, boundary_geometry, dumps_17g

PRIMES = (2147483647, 2147483629, 2147483587)


@dataclass
class CohomologyResult:
    b0: int
    b1_absolute: int
    b1_relative: int
    boundary_components: int
    boundary_euler_characteristics: list = field(default_factory=list)
    boundary_genus: list = field(default_factory=list)

    def to_json(self) -> str:
        return dumps_17g(
            {
                "b0": self.b0,
                "b1_absolute": self.b1_absolute,
                "b1_relative": self.b1_relative,
                "boundary_components": self.boundary_components,
                "boundary_euler_characteristics": self.boundary_euler_characteristics,
                "boundary_genus": self.boundary_genus,
            }
        )


def _gf_rank(rows, p: int) -> int:
    """Rank of a sparse matrix over GF(p).

    `rows` is a list of {column: value} dicts.  Markowitz-flavoured pivoting
    (sparsest column, then sparsest row in it) keeps fill-in small on mesh
    incidence matrices.
    """
    rows = [{c: v % p for c, v in r.items() if v % p} for r in rows]
    col_rows: dict = {}
    for i, r in enumerate(rows):
        for c in r:
            col_rows.setdefault(c, set()).add(i)
    rank = 0
    while col_rows:
        c = min(col_rows, key=lambda k: len(col_rows[k]))
        members = col_rows[c]
        r = min(members, key=lambda i: len(rows[i]))
        piv_row = rows[r]
        inv = pow(piv_row[c], p - 2, p)
        piv = {cc: (vv * inv) % p for cc, vv in piv_row.items()}
        # retire the pivot row
        for cc in piv_row:
            s = col_rows.get(cc)
            if s is not None:
                s.discard(r)
                if not s:
                    del col_rows[cc]
        rows[r] = {}
        for r2 in list(col_rows.get(c, ())):
            row2 = rows[r2]
            f = row2[c]
            for cc, vv in piv.items():
                new = (row2.get(cc, 0) - f * vv) % p
                present = cc in row2
                if new:
                    if not present:
                        col_rows.setdefault(cc, set()).add(r2)
                    row2[cc] = new
                elif present:
                    del row2[cc]
                    s = col_rows.get(cc)
                    s.discard(r2)
                    if not s:
                        del col_rows[cc]
        rank += 1
    return rank


def _edges_of(simplices: np.ndarray):
    k = simplices.shape[1]
    out = set()
    for s in simplices:
        for i in range(k):
            for j in range(i + 1, k):
                a, b = int(s[i]), int(s[j])
                out.add((a, b) if a < b else (b, a))
    return out


def _triangles_of(cells: np.ndarray):
    out = set()
    for s in cells:
        k = len(s)
        for i in range(k):
            for j in range(i + 1, k):
                for l in range(j + 1, k):
                    out.add(tuple(sorted((int(s[i]), int(s[j]), int(s[l])))))
    return out


def _components(n_vertices: int, simplices) -> int:
    parent = list(range(n_vertices))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s in simplices:
        r0 = find(int(s[0]))
        for v in s[1:]:
            r = find(int(v))
            if r != r0:
                parent[r] = r0
    return len({find(v) for v in range(n_vertices)})


def _complex_rows(mesh: SimplicialMesh):
    """Edge and 2-cell lists with the d0/d1 coboundary rows."""
    edges = sorted(_edges_of(mesh.cells))
    eidx = {e: i for i, e in enumerate(edges)}
    if mesh.cells.shape[1] == 3:
        tris = sorted(tuple(sorted(map(int, c))) for c in mesh.cells)
    else:
        tris = sorted(_triangles_of(mesh.cells))
    d0 = [{a: -1, b: 1} for (a, b) in edges]
    d1 = []
    for (a, b, c) in tris:
        d1.append({eidx[(b, c)]: 1, eidx[(a, c)]: -1, eidx[(a, b)]: 1})
    return edges, tris, d0, d1


def _ranks_one_prime(mesh: SimplicialMesh, p: int):
    nv = len(mesh.vertices)
    edges, tris, d0, d1 = _complex_rows(mesh)
    rank_d0 = nv - _components(nv, mesh.cells)
    rank_d1 = _gf_rank(d1, p)
    b0 = nv - rank_d0
    b1 = len(edges) - rank_d1 - rank_d0

    # relative complex: cochains vanishing on the boundary subcomplex
    bset = set(map(int, mesh.boundary_vertices))
    bedges = _edges_of(mesh.boundary_facets)
    if mesh.boundary_facets.shape[1] == 3:
        btris = {tuple(sorted(map(int, f))) for f in mesh.boundary_facets}
    else:
        btris = set()
    int_vert = [v for v in range(nv) if v not in bset]
    int_edge = [i for i, e in enumerate(edges) if e not in bedges]
    int_tri = [i for i, t in enumerate(tris) if t not in btris]
    vmap = {v: j for j, v in enumerate(int_vert)}
    emap = {i: j for j, i in enumerate(int_edge)}
    d0_rel = [
        {vmap[c]: v for c, v in d0[i].items() if c in vmap} for i in int_edge
    ]
    d1_rel = [
        {emap[c]: v for c, v in d1[i].items() if c in emap} for i in int_tri
    ]
    rank_d0_rel = _gf_rank(d0_rel, p)
    rank_d1_rel = _gf_rank(d1_rel, p)
    b1_rel = len(int_edge) - rank_d1_rel - rank_d0_rel
    return b0, b1, b1_rel


def cohomology_ranks(mesh: SimplicialMesh) -> CohomologyResult:
    """Ranks of H^0(M), H^1(M) and H^1(M, boundary) over prime fields.

    Computed with two primes; on disagreement a third breaks the tie, and a
    three-way disagreement is a hard error.
    """
    r1 = _ranks_one_prime(mesh, PRIMES[0])
    r2 = _ranks_one_prime(mesh, PRIMES[1])
    if r1 != r2:
        r3 = _ranks_one_prime(mesh, PRIMES[2])
        if r3 == r1 or r3 == r2:
            r1 = r3
        else:
            raise PrimeCollision(f"ranks disagree across three primes: {r1} {r2} {r3}")
    b0, b1, b1_rel = r1
    comps, chis, genera = _boundary_surfaces(mesh)
    return CohomologyResult(b0, b1, b1_rel, comps, chis, genera)


def _boundary_surfaces(mesh: SimplicialMesh):
    facets = mesh.boundary_facets
    if len(facets) == 0:
        return 0, [], []
    if facets.shape[1] != 3:
        # boundary is a union of circles: chi = 0 each, genus undefined
        verts = sorted({int(v) for f in facets for v in f})
        vpos = {v: i for i, v in enumerate(verts)}
        renum = [[vpos[int(v)] for v in f] for f in facets]
        comps = _components(len(verts), renum)
        return comps, [0] * comps, []
    edge_count: dict = {}
    for f in facets:
        for i in range(3):
            a, b = int(f[i]), int(f[(i + 1) % 3])
            e = (a, b) if a < b else (b, a)
            edge_count[e] = edge_count.get(e, 0) + 1
    if any(c != 2 for c in edge_count.values()):
        raise NonManifoldBoundary("boundary edge not shared by exactly two facets")
    # per-component counts via union-find over facet vertices
    verts = sorted({int(v) for f in facets for v in f})
    vpos = {v: i for i, v in enumerate(verts)}
    parent = list(range(len(verts)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for f in facets:
        r0 = find(vpos[int(f[0])])
        for v in f[1:]:
            r = find(vpos[int(v)])
            if r != r0:
                parent[r] = r0
    comp_of = {v: find(vpos[v]) for v in verts}
    comps = sorted({comp_of[v] for v in verts})
    chis, genera = [], []
    for c in comps:
        V = sum(1 for v in verts if comp_of[v] == c)
        E = sum(1 for (a, b) in edge_count if comp_of[a] == c)
        F = sum(1 for f in facets if comp_of[int(f[0])] == c)
        chi = V - E + F
        if (2 - chi) % 2 != 0 or chi > 2:
            raise NonManifoldBoundary(f"component Euler characteristic {chi}")
        chis.append(chi)
        genera.append((2 - chi) // 2)
    return len(comps), chis, genera


def classify_boundary(mesh: SimplicialMesh) -> list:
    """Genus of each closed boundary surface component (n = 3 meshes)."""
    if mesh.boundary_facets.shape[1] != 3:
        raise NonManifoldBoundary("genus classification needs a surface boundary")
    _, _, genera = _boundary_surfaces(mesh)
    return genera


def consistency_audit(mesh: SimplicialMesh, ranks: CohomologyResult | None = None) -> list:
    """Check each topological statement whose curvature hypotheses the mesh
    satisfies.  A met hypothesis with a failed conclusion is a 'violation'
    (necessarily an artifact bug, the statements being theorems).
    """
    if ranks is None:
        ranks = cohomology_ranks(mesh)
    flags = mesh.curvature_flags
    ric = flags.ric_lower
    pi = flags.pi_lower
    try:
        h_min = float(np.min(boundary_geometry(mesh).mean_curvature))
    except Exception:
        h_min = None
    surface = mesh.boundary_facets.shape[1] == 3

    out = []

    def record(sid, hyp, concl):
        verdict = "not-applicable" if not hyp else ("pass" if concl else "violation")
        out.append(
            {
                "statement_id": sid,
                "hypothesis_satisfied": bool(hyp),
                "conclusion_satisfied": bool(concl) if hyp else None,
                "verdict": verdict,
            }
        )

    record(
        "strictly-convex-absolute",      # Ric >= 0, strictly convex => H1(M) = 0
        ric is not None and ric >= 0 and pi is not None and pi > 0,
        ranks.b1_absolute == 0,
    )
    record(
        "positive-H-relative",           # Ric >= 0, H > 0 => H1(M, boundary) = 0
        ric is not None and ric >= 0 and h_min is not None and h_min > 0,
        ranks.b1_relative == 0,
    )
    record(
        "positive-ricci-both",           # Ric > 0, convex => both vanish
        ric is not None and ric > 0 and pi is not None and pi >= 0,
        ranks.b1_absolute == 0 and ranks.b1_relative == 0,
    )
    record(
        "boundary-sphere",               # Ric >= 0, strictly convex => genus 0
        surface and ric is not None and ric >= 0 and pi is not None and pi > 0,
        all(g == 0 for g in ranks.boundary_genus),
    )
    record(
        "sphere-or-flat-torus",          # Ric >= 0, H > 0 => genus 0 or 1
        surface and ric is not None and ric >= 0 and h_min is not None and h_min > 0,
        all(g in (0, 1) for g in ranks.boundary_genus),
    )
    return out
