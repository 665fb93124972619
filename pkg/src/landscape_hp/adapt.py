"""Marking and hp-refinement planning.

Four planners share the same skeleton: sort elements by (aggregated)
squared indicator, mark the top r percent, then send each marked element
to h- or p-refinement according to a regularity measure of the driving
field on that element.  `enforce_local_properties` applies a plan with
1-irregular closure and bounded order variation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import DGSpace
from .estimators import IndicatorField
from .mesh import Mesh, enumerate_edges, refine_elements
from .smoothness import regularity_all

DEFAULT_R = 10.0
DEFAULT_TOL_ANA = 0.25
DEFAULT_P_MAX = 10
MAX_ORDER_GAP = 2


@dataclass
class RefinementPlan:
    h_set: set = field(default_factory=set)
    p_set: set = field(default_factory=set)


def mark_top_fraction(indicators: IndicatorField, r: float, space: DGSpace) -> list:
    """Ids of the ceil(r% * N) elements with the largest squared indicator.

    Ties break by ascending element id, so plans are deterministic.
    """
    if not 0 < r <= 100:
        raise ValueError("marking fraction r must be in (0, 100]")
    ids = space.leaf_ids
    n_mark = math.ceil(r / 100.0 * len(ids))
    ranked = sorted(ids, key=lambda eid: (-indicators.eta2[eid], eid))
    return ranked[:n_mark]


def _split_marked(marked, measures, tol_ana) -> RefinementPlan:
    plan = RefinementPlan()
    for eid in marked:
        m = measures[eid]
        if not math.isnan(m) and m < tol_ana:
            plan.p_set.add(eid)
        else:
            plan.h_set.add(eid)
    return plan


def plan_single_eig(space, eta_j: IndicatorField, phi_j, r=DEFAULT_R,
                    tol_ana=DEFAULT_TOL_ANA) -> RefinementPlan:
    marked = mark_top_fraction(eta_j, r, space)
    return _split_marked(marked, regularity_all(space, phi_j), tol_ana)


def plan_cluster_sum(space, eta_list, phi_list, r=DEFAULT_R,
                     tol_ana=DEFAULT_TOL_ANA) -> RefinementPlan:
    """Mark by the elementwise sum of squared indicators; the h/p call is
    made on the sum of the computed eigenvectors."""
    eta_sum = IndicatorField(
        {eid: sum(ind.eta2[eid] for ind in eta_list) for eid in space.leaf_ids},
        "cluster-sum")
    marked = mark_top_fraction(eta_sum, r, space)
    phi_sum = np.sum(np.column_stack(phi_list), axis=1)
    return _split_marked(marked, regularity_all(space, phi_sum), tol_ana)


def plan_cluster_max(space, eta_list, phi_list, r=DEFAULT_R,
                     tol_ana=DEFAULT_TOL_ANA) -> RefinementPlan:
    """Mark by the elementwise max; smoothness uses the argmax pair
    (ties resolved to the smallest index)."""
    eta_max = IndicatorField(
        {eid: max(ind.eta2[eid] for ind in eta_list) for eid in space.leaf_ids},
        "cluster-max")
    marked = mark_top_fraction(eta_max, r, space)
    measures_per_pair = [regularity_all(space, phi) for phi in phi_list]
    measures = {}
    for eid in marked:
        vals = [ind.eta2[eid] for ind in eta_list]
        i = int(np.argmax(vals))   # argmax returns the first maximum
        measures[eid] = measures_per_pair[i][eid]
    return _split_marked(marked, measures, tol_ana)


def plan_landscape(space, eta_land: IndicatorField, u_h, r=DEFAULT_R,
                   tol_ana=DEFAULT_TOL_ANA) -> RefinementPlan:
    marked = mark_top_fraction(eta_land, r, space)
    return _split_marked(marked, regularity_all(space, u_h), tol_ana)


def enforce_local_properties(plan: RefinementPlan, mesh: Mesh,
                             p_max: int = DEFAULT_P_MAX) -> Mesh:
    """Apply a plan: p increments, h splits with 1-irregular closure, then
    order-variation smoothing so neighboring orders differ by at most
    MAX_ORDER_GAP.  Elements marked for p-refinement that already sit at
    p_max are split in h instead, so a marked element always changes."""
    if plan.h_set & plan.p_set:
        raise ValueError("h_set and p_set overlap")
    new = mesh.clone()
    h_all = set(plan.h_set)
    for eid in sorted(plan.p_set):
        el = new.elements[eid]
        if el.p < p_max:
            el.p += 1
        else:
            h_all.add(eid)
    new = refine_elements(new, h_all) if h_all else new
    # bounded local variation: raise the smaller side until gap <= 2
    edges = [e for e in enumerate_edges(new) if e.kind == "interior"]
    changed = True
    while changed:
        changed = False
        for edge in edges:
            a = new.elements[edge.k1]
            b = new.elements[edge.k2]
            lo, hi = (a, b) if a.p < b.p else (b, a)
            if hi.p - lo.p > MAX_ORDER_GAP:
                lo.p = hi.p - MAX_ORDER_GAP
                changed = True
    return new


def plan_dump(plan: RefinementPlan) -> str:
    lines = ["plan v1"]
    for eid in sorted(plan.h_set | plan.p_set):
        lines.append(f"{eid} {'h' if eid in plan.h_set else 'p'}")
    return "\n".join(lines) + "\n"
