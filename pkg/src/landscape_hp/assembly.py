"""SIPG assembly over the DG space: stiffness, mass, and source vectors.

The discrete space couples per-element modal blocks; with the orthonormal
reference basis the mass matrix is |K|/4 times identity per element.
Dirichlet data is enforced weakly through the boundary edge terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import basis as bas
from .mesh import Mesh, enumerate_edges

DEFAULT_GAMMA = 10.0


@dataclass(frozen=True)
class Subdomain:
    A: tuple          # ((a11, a12), (a12, a22)), SPD
    V: float = 0.0

    def amat(self) -> np.ndarray:
        return np.asarray(self.A, dtype=float)

    def eig_bounds(self) -> tuple[float, float]:
        a = self.amat()
        tr, det = a[0, 0] + a[1, 1], a[0, 0] * a[1, 1] - a[0, 1] ** 2
        disc = np.sqrt(max(tr * tr / 4.0 - det, 0.0))
        return tr / 2.0 - disc, tr / 2.0 + disc


def isotropic(a: float, v: float = 0.0) -> Subdomain:
    return Subdomain(((a, 0.0), (0.0, a)), v)


@dataclass(frozen=True)
class SourcePoly:
    """Low-degree polynomial source, sum of coef * x^ex * y^ey terms."""

    terms: tuple = ((1.0, 0, 0),)

    def __call__(self, x, y):
        out = np.zeros_like(np.asarray(x, dtype=float))
        for c, ex, ey in self.terms:
            out = out + c * np.asarray(x) ** ex * np.asarray(y) ** ey
        return out

    @property
    def degree(self):
        return max((ex + ey for _, ex, ey in self.terms), default=0)


UNIT_SOURCE = SourcePoly()


@dataclass
class ProblemSpec:
    subdomains: dict              # id -> Subdomain
    gamma: float = DEFAULT_GAMMA
    source: SourcePoly = UNIT_SOURCE
    name: str = ""
    seed: int = 0

    def __post_init__(self):
        for sid, sub in self.subdomains.items():
            lo, _ = sub.eig_bounds()
            if lo <= 0:
                raise ValueError(f"A not SPD on subdomain {sid}")
            if sub.V < 0:
                raise ValueError(f"V < 0 on subdomain {sid}")
        if self.gamma <= 0:
            raise ValueError("penalty parameter gamma must be > 0")

    def sub(self, subdomain_id: int) -> Subdomain:
        return self.subdomains[subdomain_id]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "gamma": self.gamma,
            "source": list(self.source.terms),
            "subdomains": {str(k): {"A": list(map(list, v.A)), "V": v.V}
                           for k, v in self.subdomains.items()},
        }


class DGSpace:
    """Dof layout for a mesh with per-element orders.

    Leaf blocks are laid out in ascending element-id order; the block of
    leaf K starts at offset[K] and has (p_K+1)^2 entries.
    """

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.leaf_ids = [e.id for e in mesh.leaves()]
        self.offset = {}
        n = 0
        for eid in self.leaf_ids:
            self.offset[eid] = n
            n += (mesh.elements[eid].p + 1) ** 2
        self.ndof = n

    def block(self, u: np.ndarray, eid: int) -> np.ndarray:
        p = self.mesh.elements[eid].p
        o = self.offset[eid]
        return u[o:o + (p + 1) ** 2]

    def orders(self) -> dict:
        return {eid: self.mesh.elements[eid].p for eid in self.leaf_ids}


def average_weights(A1: np.ndarray, A2: np.ndarray, n: np.ndarray):
    """Diffusion-weighted averaging weights (w1, w2) and penalty weight c."""
    n = np.asarray(n, dtype=float)
    d1 = float(n @ np.asarray(A1) @ n)
    d2 = float(n @ np.asarray(A2) @ n)
    w1 = d2 / (d1 + d2)
    w2 = d1 / (d1 + d2)
    c = 2.0 * d1 * d2 / (d1 + d2)
    return w1, w2, c


def _grad_trace(mesh, el, spec, side, part, nq, axis, sign):
    """(value table, normal-flux table) for one side of one element."""
    val, tdx, tdy = bas.trace_tables(el.p, nq, side, part)
    hx, hy = mesh.cell_size(el.level)
    a = spec.sub(el.subdomain).amat()
    gx = (2.0 / hx) * tdx
    gy = (2.0 / hy) * tdy
    if axis == 0:
        flux = sign * (a[0, 0] * gx + a[0, 1] * gy)
    else:
        flux = sign * (a[1, 0] * gx + a[1, 1] * gy)
    return val, flux


def _edge_blocks(mesh, spec, edge, cache):
    """Dense SIPG edge blocks [(rows_el, cols_el, block), ...]."""
    e1 = mesh.elements[edge.k1]
    n1 = np.zeros(2)
    n1[edge.axis] = edge.normal1
    A1 = spec.sub(e1.subdomain).amat()
    if edge.kind == "boundary":
        p_e = e1.p
        c = float(n1 @ A1 @ n1)
        key = ("b", e1.p, edge.side1, round(edge.h_e, 14), e1.subdomain,
               edge.axis, edge.normal1,
               round(mesh.cell_size(e1.level)[0], 14),
               round(mesh.cell_size(e1.level)[1], 14))
        blk = cache.get(key)
        if blk is None:
            nq = p_e + 2
            _, wq = bas.gauss_1d(nq)
            wq = wq * (edge.h_e / 2.0)
            t1, g1 = _grad_trace(mesh, e1, spec, edge.side1, edge.part1, nq,
                                 edge.axis, edge.normal1)
            tau = spec.gamma * c * p_e ** 2 / edge.h_e
            tw = t1 * wq[:, None]
            blk = -(tw.T @ g1) - (g1 * wq[:, None]).T @ t1 + tau * (tw.T @ t1)
            cache[key] = blk
        return [(e1.id, e1.id, blk)]

    e2 = mesh.elements[edge.k2]
    A2 = spec.sub(e2.subdomain).amat()
    p_e = max(e1.p, e2.p)
    key = ("i", e1.p, e2.p, edge.side1, edge.side2, edge.part2,
           round(edge.h_e, 14), e1.subdomain, e2.subdomain, edge.axis,
           edge.normal1, e1.level, e2.level)
    blks = cache.get(key)
    if blks is None:
        w1, w2, c = average_weights(A1, A2, n1)
        nq = p_e + 2
        _, wq = bas.gauss_1d(nq)
        wq = wq * (edge.h_e / 2.0)
        t1, g1 = _grad_trace(mesh, e1, spec, edge.side1, edge.part1, nq,
                             edge.axis, edge.normal1)
        t2, g2 = _grad_trace(mesh, e2, spec, edge.side2, edge.part2, nq,
                             edge.axis, edge.normal1)
        tau = spec.gamma * c * p_e ** 2 / edge.h_e
        # jump sign of side i relative to n1: s1=+1, s2=-1
        traces = [(t1, g1, w1, 1.0), (t2, g2, w2, -1.0)]
        blks = []
        for i, (ti, gi, wi, si) in enumerate(traces):
            for j, (tj, gj, wj, sj) in enumerate(traces):
                b = (-(si * wj) * (ti * wq[:, None]).T @ gj
                     - (sj * wi) * (gi * wq[:, None]).T @ tj
                     + tau * si * sj * (ti * wq[:, None]).T @ tj)
                blks.append((i, j, b))
        cache[key] = blks
    ids = (e1.id, e2.id)
    return [(ids[i], ids[j], b) for i, j, b in blks]


def assemble_stiffness(mesh: Mesh, spec: ProblemSpec,
                       space: DGSpace | None = None) -> sp.csr_matrix:
    """SIPG stiffness matrix (volume + consistency + penalty terms)."""
    space = space or DGSpace(mesh)
    rows, cols, vals = [], [], []

    def add(rid, cid, blk):
        o_r, o_c = space.offset[rid], space.offset[cid]
        nr, nc = blk.shape
        r = np.repeat(np.arange(o_r, o_r + nr), nc)
        c = np.tile(np.arange(o_c, o_c + nc), nr)
        rows.append(r)
        cols.append(c)
        vals.append(blk.ravel())

    vol_cache = {}
    for eid in space.leaf_ids:
        el = mesh.elements[eid]
        hx, hy = mesh.cell_size(el.level)
        key = (el.p, el.subdomain, round(hx, 14), round(hy, 14))
        blk = vol_cache.get(key)
        if blk is None:
            sub = spec.sub(el.subdomain)
            a = sub.amat()
            ref = bas.reference_matrices(el.p)
            blk = (a[0, 0] * (hy / hx) * ref["sxx"]
                   + a[1, 1] * (hx / hy) * ref["syy"]
                   + a[0, 1] * (ref["sxy"] + ref["sxy"].T))
            if sub.V != 0.0:
                blk = blk + sub.V * (hx * hy / 4.0) * np.eye((el.p + 1) ** 2)
            vol_cache[key] = blk
        add(eid, eid, blk)

    edge_cache = {}
    for edge in enumerate_edges(mesh):
        for rid, cid, blk in _edge_blocks(mesh, spec, edge, edge_cache):
            add(rid, cid, blk)

    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(space.ndof, space.ndof)).tocsr()
    return K


def assemble_mass(mesh: Mesh, space: DGSpace | None = None) -> sp.csr_matrix:
    """Block-diagonal mass matrix: |K|/4 times identity per leaf block."""
    space = space or DGSpace(mesh)
    d = np.empty(space.ndof)
    for eid in space.leaf_ids:
        el = mesh.elements[eid]
        hx, hy = mesh.cell_size(el.level)
        o, dim = space.offset[eid], (el.p + 1) ** 2
        d[o:o + dim] = hx * hy / 4.0
    return sp.diags(d).tocsr()


def assemble_source(mesh: Mesh, f: SourcePoly = UNIT_SOURCE,
                    space: DGSpace | None = None) -> np.ndarray:
    """Load vector b_i = int_K f phi_i over each leaf."""
    space = space or DGSpace(mesh)
    b = np.zeros(space.ndof)
    for eid in space.leaf_ids:
        el = mesh.elements[eid]
        lb = bas.local_basis(el.p)
        hx, hy = mesh.cell_size(el.level)
        x0, y0, _, _ = mesh.rect(el)
        xq = x0 + (lb.rule.nodes[:, 0] + 1.0) * hx / 2.0
        yq = y0 + (lb.rule.nodes[:, 1] + 1.0) * hy / 2.0
        fv = f(xq, yq) * lb.rule.weights
        o = space.offset[eid]
        b[o:o + lb.dim] = (hx * hy / 4.0) * (lb.val.T @ fv)
    return b


def prolong(u: np.ndarray, space_from: DGSpace, space_to: DGSpace) -> np.ndarray:
    """Exactly represent a field of `space_from` in the refining `space_to`.

    Every leaf of the target must be (a descendant of) a source leaf with
    order at least the source order; otherwise the spaces are not nested.
    """
    mf, mt = space_from.mesh, space_to.mesh
    u = np.asarray(u)
    multi = u.ndim == 2
    out = np.zeros((space_to.ndof,) + u.shape[1:])
    for eid in space_to.leaf_ids:
        el = mt.elements[eid]
        # ancestor-or-self leaf in the source mesh
        l, ix, iy = el.level, el.ix, el.iy
        src = None
        while l >= 0:
            sid = mf._index.get((l, ix, iy))
            if sid is not None and mf.elements[sid].is_leaf:
                src = mf.elements[sid]
                break
            l, ix, iy = l - 1, ix >> 1, iy >> 1
        if src is None:
            raise ValueError("target space does not refine the source space")
        if src.p > el.p:
            raise ValueError("target order below source order: spaces not nested")
        c_src = space_from.block(u, src.id)
        if src.level == el.level and src.p == el.p:
            out[space_to.offset[eid]:space_to.offset[eid] + len(c_src)] = c_src
            continue
        # evaluate source polynomial at target quadrature points (mapped
        # into the source reference square) and L2-project; exact since
        # the rule is exact for degree 2*p+3 >= p_src + p_tgt
        lb = bas.local_basis(el.p)
        scale = 1 << (el.level - src.level)
        ox = el.ix - src.ix * scale
        oy = el.iy - src.iy * scale
        xs = (2.0 * ox + (lb.rule.nodes[:, 0] + 1.0)) / scale - 1.0
        ys = (2.0 * oy + (lb.rule.nodes[:, 1] + 1.0)) / scale - 1.0
        vals = bas.eval_basis(src.p, np.column_stack([xs, ys]), 0) @ c_src
        # orthonormal target basis in reference coords: coef_i = int phi_i f
        w = lb.rule.weights[:, None] if multi else lb.rule.weights
        coef = lb.val.T @ (w * vals)
        o = space_to.offset[eid]
        out[o:o + lb.dim] = coef
    return out
