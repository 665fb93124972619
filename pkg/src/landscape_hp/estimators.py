"""Residual a posteriori error indicators for the landscape solve and for
eigenpairs, plus the DG-norm error evaluator used in effectivity studies.

Per element K the squared indicator is the sum of a volume residual term,
a normal-flux jump term and a solution jump term; interior edge integrals
are split half/half between the two side elements so that the global
squared estimator equals the sum of the local ones exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import basis as bas
from .assembly import DGSpace, ProblemSpec, SourcePoly, prolong
from .mesh import enumerate_edges


@dataclass
class IndicatorField:
    """Per-leaf squared indicators, keyed like the space's leaf order."""

    eta2: dict                    # leaf id -> squared indicator
    tag: str                      # "landscape" | "eigenpair(j)"

    @property
    def total(self) -> float:
        return sum(self.eta2.values())

    def as_array(self, space: DGSpace) -> np.ndarray:
        return np.array([self.eta2[eid] for eid in space.leaf_ids])

    def dump(self, space: DGSpace, regularity: dict | None = None) -> str:
        lines = [f"indicators v1 {self.tag} {len(space.leaf_ids)}"]
        for eid in space.leaf_ids:
            row = f"{eid} {self.eta2[eid]:.17g}"
            if regularity is not None:
                row += f" {regularity[eid]:.17g}"
            lines.append(row)
        return "\n".join(lines) + "\n"


def _edge_coeff_bounds(spec, el1, el2):
    lo1, hi1 = spec.sub(el1.subdomain).eig_bounds()
    if el2 is None:
        return lo1, hi1
    lo2, hi2 = spec.sub(el2.subdomain).eig_bounds()
    return min(lo1, lo2), max(hi1, hi2)


def _interior_residual(space, spec, fields, source_vals):
    """Per-leaf squared volume residual for one or more coefficient columns.

    fields: (ndof, m); source_vals(eid, xq, yq) -> (nq, m) data term.
    Returns (n_leaves, m).
    """
    mesh = space.mesh
    out = {}
    for eid in space.leaf_ids:
        el = mesh.elements[eid]
        lb = bas.local_basis(el.p)
        hx, hy = mesh.cell_size(el.level)
        sub = spec.sub(el.subdomain)
        a = sub.amat()
        o = space.offset[eid]
        C = fields[o:o + lb.dim]
        val = lb.val @ C
        div_flux = ((2.0 / hx) ** 2 * a[0, 0] * (lb.dxx @ C)
                    + 2.0 * (2.0 / hx) * (2.0 / hy) * a[0, 1] * (lb.dxy @ C)
                    + (2.0 / hy) ** 2 * a[1, 1] * (lb.dyy @ C))
        x0, y0, _, _ = mesh.rect(el)
        xq = x0 + (lb.rule.nodes[:, 0] + 1.0) * hx / 2.0
        yq = y0 + (lb.rule.nodes[:, 1] + 1.0) * hy / 2.0
        r = source_vals(eid, xq, yq, val) + div_flux - sub.V * val
        nrm2 = (hx * hy / 4.0) * (lb.rule.weights @ r ** 2)
        h_k2 = hx * hx + hy * hy
        a_min, _ = sub.eig_bounds()
        out[eid] = (h_k2 / (a_min * el.p ** 2)) * nrm2
    return out


def _edge_terms(space, spec, fields):
    """Per-leaf squared flux and jump edge terms; returns dicts of arrays."""
    mesh = space.mesh
    m = fields.shape[1]
    flux = {eid: np.zeros(m) for eid in space.leaf_ids}
    jump = {eid: np.zeros(m) for eid in space.leaf_ids}
    gamma = spec.gamma
    for edge in enumerate_edges(mesh):
        e1 = mesh.elements[edge.k1]
        nq = e1.p + 2
        c1 = fields[space.offset[edge.k1]:space.offset[edge.k1] + (e1.p + 1) ** 2]
        if edge.kind == "interior":
            e2 = mesh.elements[edge.k2]
            nq = max(e1.p, e2.p) + 2
            p_e = max(e1.p, e2.p)
        else:
            e2 = None
            p_e = e1.p
        _, wq = bas.gauss_1d(nq)
        wq = wq * (edge.h_e / 2.0)
        t1, g1x, g1y = bas.trace_tables(e1.p, nq, edge.side1, edge.part1)
        hx1, hy1 = mesh.cell_size(e1.level)
        a1 = spec.sub(e1.subdomain).amat()
        n_comp = edge.normal1
        if edge.axis == 0:
            f1 = n_comp * (a1[0, 0] * (2 / hx1) * (g1x @ c1)
                           + a1[0, 1] * (2 / hy1) * (g1y @ c1))
        else:
            f1 = n_comp * (a1[1, 0] * (2 / hx1) * (g1x @ c1)
                           + a1[1, 1] * (2 / hy1) * (g1y @ c1))
        v1 = t1 @ c1
        a_min_e, a_max_e = _edge_coeff_bounds(spec, e1, e2)
        w_j = edge.h_e / (a_min_e * p_e) + gamma ** 2 * a_max_e * p_e ** 3 / edge.h_e
        if edge.kind == "boundary":
            jump[edge.k1] += w_j * (wq @ v1 ** 2)
            continue
        c2 = fields[space.offset[edge.k2]:space.offset[edge.k2] + (e2.p + 1) ** 2]
        t2, g2x, g2y = bas.trace_tables(e2.p, nq, edge.side2, edge.part2)
        hx2, hy2 = mesh.cell_size(e2.level)
        a2 = spec.sub(e2.subdomain).amat()
        if edge.axis == 0:
            f2 = n_comp * (a2[0, 0] * (2 / hx2) * (g2x @ c2)
                           + a2[0, 1] * (2 / hy2) * (g2y @ c2))
        else:
            f2 = n_comp * (a2[1, 0] * (2 / hx2) * (g2x @ c2)
                           + a2[1, 1] * (2 / hy2) * (g2y @ c2))
        v2 = t2 @ c2
        flux_e = (edge.h_e / (a_min_e * p_e)) * (wq @ (f1 - f2) ** 2)
        jump_e = w_j * (wq @ (v1 - v2) ** 2)
        flux[edge.k1] += 0.5 * flux_e
        flux[edge.k2] += 0.5 * flux_e
        jump[edge.k1] += 0.5 * jump_e
        jump[edge.k2] += 0.5 * jump_e
    return flux, jump


def _assemble_indicator(space, spec, fields, source_vals, tags):
    fields = np.atleast_2d(np.asarray(fields).T).T
    resid = _interior_residual(space, spec, fields, source_vals)
    flux, jump = _edge_terms(space, spec, fields)
    out = []
    for j, tag in enumerate(tags):
        eta2 = {eid: float(resid[eid][j] + flux[eid][j] + jump[eid][j])
                for eid in space.leaf_ids}
        out.append(IndicatorField(eta2, tag))
    return out


def eta_landscape(space: DGSpace, spec: ProblemSpec, u_h: np.ndarray,
                  f: SourcePoly | None = None) -> IndicatorField:
    """Residual indicator for the landscape (source) solve."""
    f = f or spec.source

    def src(eid, xq, yq, val):
        return f(xq, yq)[:, None]

    return _assemble_indicator(space, spec, u_h, src, ["landscape"])[0]


def eta_eigenpairs(space: DGSpace, spec: ProblemSpec, lambdas, phis) -> list:
    """Residual indicators for several eigenpairs at once (columns)."""
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    phis = np.atleast_2d(np.asarray(phis).T).T

    def src(eid, xq, yq, val):
        return lambdas[None, :] * val

    tags = [f"eigenpair({j + 1})" for j in range(len(lambdas))]
    return _assemble_indicator(space, spec, phis, src, tags)


def eta_eigenpair(space: DGSpace, spec: ProblemSpec, lam: float,
                  phi: np.ndarray) -> IndicatorField:
    return eta_eigenpairs(space, spec, [lam], phi[:, None])[0]


def dg_norm(space: DGSpace, spec: ProblemSpec, u: np.ndarray) -> float:
    """Energy DG norm: ||A^1/2 grad u||^2 + ||V^1/2 u||^2 + penalty jumps."""
    from .assembly import average_weights
    mesh = space.mesh
    total = 0.0
    for eid in space.leaf_ids:
        el = mesh.elements[eid]
        lb = bas.local_basis(el.p)
        hx, hy = mesh.cell_size(el.level)
        sub = spec.sub(el.subdomain)
        a = sub.amat()
        c = space.block(u, eid)
        ux = (2.0 / hx) * (lb.dx @ c)
        uy = (2.0 / hy) * (lb.dy @ c)
        en = (a[0, 0] * ux ** 2 + 2 * a[0, 1] * ux * uy + a[1, 1] * uy ** 2)
        if sub.V != 0.0:
            en = en + sub.V * (lb.val @ c) ** 2
        total += (hx * hy / 4.0) * (lb.rule.weights @ en)
    for edge in enumerate_edges(mesh):
        e1 = mesh.elements[edge.k1]
        a1 = spec.sub(e1.subdomain).amat()
        n1 = np.zeros(2)
        n1[edge.axis] = edge.normal1
        if edge.kind == "interior":
            e2 = mesh.elements[edge.k2]
            a2 = spec.sub(e2.subdomain).amat()
            _, _, c_w = average_weights(a1, a2, n1)
            p_e = max(e1.p, e2.p)
        else:
            e2, c_w, p_e = None, float(n1 @ a1 @ n1), e1.p
        nq = p_e + 2
        _, wq = bas.gauss_1d(nq)
        wq = wq * (edge.h_e / 2.0)
        t1, _, _ = bas.trace_tables(e1.p, nq, edge.side1, edge.part1)
        v = t1 @ space.block(u, edge.k1)
        if e2 is not None:
            t2, _, _ = bas.trace_tables(e2.p, nq, edge.side2, edge.part2)
            v = v - t2 @ space.block(u, edge.k2)
        total += (spec.gamma * c_w * p_e ** 2 / edge.h_e) * (wq @ v ** 2)
    return float(np.sqrt(total))


def dg_error(space: DGSpace, spec: ProblemSpec, u_h: np.ndarray,
             space_ref: DGSpace, u_ref: np.ndarray) -> float:
    """DG norm of (u_ref - P u_h) evaluated on the finer reference space."""
    diff = u_ref - prolong(u_h, space, space_ref)
    return dg_norm(space_ref, spec, diff)
