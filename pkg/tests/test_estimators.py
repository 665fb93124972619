import numpy as np
import pytest

from landscape_hp.assembly import (DGSpace, ProblemSpec, UNIT_SOURCE,
                                   assemble_mass, assemble_source,
                                   assemble_stiffness, isotropic)
from landscape_hp.eigensolve import dense_eigenpairs, factorize, \
    solve_landscape
from landscape_hp.estimators import dg_norm, eta_eigenpair, eta_landscape
from landscape_hp.mesh import build_tensor_mesh, refine_elements


def _setup(n, p=2):
    mesh = build_tensor_mesh(n, n, p=p)
    spec = ProblemSpec(subdomains={0: isotropic(1.0)})
    space = DGSpace(mesh)
    return mesh, spec, space


def _landscape(mesh, spec, space):
    K = assemble_stiffness(mesh, spec, space)
    b = assemble_source(mesh, UNIT_SOURCE, space)
    return solve_landscape(factorize(K), b)


def test_indicators_nonnegative_and_total_is_sum():
    mesh, spec, space = _setup(4)
    u = _landscape(mesh, spec, space)
    ind = eta_landscape(space, spec, u)
    vals = np.array([ind.eta2[eid] for eid in space.leaf_ids])
    assert (vals >= 0).all()
    assert ind.total == pytest.approx(vals.sum())


def test_landscape_estimator_decays_under_uniform_refinement():
    # for fixed p=2 the squared estimator behaves like h^(2p) = h^4, so a
    # uniform h-halving should shrink it by roughly 16
    totals = []
    for n in (4, 8, 16):
        mesh, spec, space = _setup(n)
        u = _landscape(mesh, spec, space)
        totals.append(eta_landscape(space, spec, u).total)
    ratios = [totals[i + 1] / totals[i] for i in range(2)]
    for q in ratios:
        assert 0.02 < q < 0.25


def test_eigenpair_estimator_decays_under_uniform_refinement():
    totals = []
    for n in (4, 8, 16):
        mesh, spec, space = _setup(n)
        K = assemble_stiffness(mesh, spec, space)
        M = assemble_mass(mesh, space)
        pairs = dense_eigenpairs(K, M, 1)
        ind = eta_eigenpair(space, spec, pairs.values[0],
                            pairs.vectors[:, 0])
        totals.append(ind.total)
    for i in range(2):
        assert 0.02 < totals[i + 1] / totals[i] < 0.25


def test_eigenvalue_error_bounded_by_estimator():
    # reliability: lambda_h - lambda <= C * eta^2 with a moderate constant;
    # check the effectivity ratio is stable across two levels
    exact = 2 * np.pi ** 2
    ratios = []
    for n in (4, 8, 16):
        mesh, spec, space = _setup(n)
        K = assemble_stiffness(mesh, spec, space)
        M = assemble_mass(mesh, space)
        pairs = dense_eigenpairs(K, M, 1)
        err = abs(pairs.values[0] - exact)
        eta2 = eta_eigenpair(space, spec, pairs.values[0],
                             pairs.vectors[:, 0]).total
        ratios.append(eta2 / err)
    for q in ratios:
        assert ratios[0] / 5 <= q <= ratios[0] * 5


def test_dg_norm_positive_and_scales():
    mesh, spec, space = _setup(4)
    u = _landscape(mesh, spec, space)
    nrm = dg_norm(space, spec, u)
    assert nrm > 0
    assert dg_norm(space, spec, 3.0 * u) == pytest.approx(3.0 * nrm)


def test_local_refinement_reduces_local_indicator():
    mesh, spec, space = _setup(4)
    u = _landscape(mesh, spec, space)
    ind = eta_landscape(space, spec, u)
    worst = max(space.leaf_ids, key=lambda eid: ind.eta2[eid])
    fine = refine_elements(mesh, [worst])
    space_f = DGSpace(fine)
    u_f = _landscape(fine, spec, space_f)
    ind_f = eta_landscape(space_f, spec, u_f)
    kids = fine.elements[worst].children
    assert sum(ind_f.eta2[c] for c in kids) < ind.eta2[worst]
