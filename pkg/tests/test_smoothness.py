import numpy as np
import pytest

from landscape_hp.assembly import DGSpace, ProblemSpec, UNIT_SOURCE, \
    assemble_mass, assemble_source, assemble_stiffness, isotropic
from landscape_hp.basis import element_rule, eval_basis
from landscape_hp.eigensolve import dense_eigenpairs, factorize, \
    solve_landscape
from landscape_hp.mesh import build_tensor_mesh
from landscape_hp.smoothness import regularity, regularity_all


def _project(mesh, space, f):
    """L2 projection of f(x, y) onto the DG space (diagonal mass)."""
    u = np.zeros(space.ndof)
    for eid in space.leaf_ids:
        el = mesh.elements[eid]
        x0, y0, x1, y1 = mesh.rect(el)
        rule = element_rule(el.p)
        xs = x0 + (rule.nodes[:, 0] + 1) / 2 * (x1 - x0)
        ys = y0 + (rule.nodes[:, 1] + 1) / 2 * (y1 - y0)
        V = eval_basis(el.p, rule.nodes)
        u[space.offset[eid]:space.offset[eid] + (el.p + 1) ** 2] = \
            V.T @ (rule.weights * f(xs, ys))
    return u


def _setup(n=4, p=4):
    mesh = build_tensor_mesh(n, n, p=p)
    return mesh, DGSpace(mesh)


def test_analytic_field_has_small_measure():
    # smooth fields have rapidly decaying modal tails: small measure,
    # which routes marking to p-refinement
    mesh, space = _setup()
    u = _project(mesh, space, lambda x, y: np.sin(np.pi * x)
                 * np.sin(np.pi * y))
    for eid in space.leaf_ids:
        assert regularity(space, u, eid) < 0.25


def test_kinked_field_has_larger_measure_near_kink():
    mesh, space = _setup()
    u = _project(mesh, space, lambda x, y: np.abs(x - 0.5) + 0 * y)
    vals = regularity_all(space, u)
    kink = [eid for eid in space.leaf_ids
            if abs(mesh.center(mesh.elements[eid])[0] - 0.5) < 0.2]
    away = [eid for eid in space.leaf_ids
            if abs(mesh.center(mesh.elements[eid])[0] - 0.5) > 0.3]
    assert max(vals[e] for e in kink) > max(vals[e] for e in away)


def test_first_eigenvector_smoother_than_kink():
    mesh, space = _setup(4, 4)
    spec = ProblemSpec(subdomains={0: isotropic(1.0)})
    K = assemble_stiffness(mesh, spec, space)
    M = assemble_mass(mesh, space)
    pairs = dense_eigenpairs(K, M, 1)
    smooth_max = max(regularity_all(space, pairs.vectors[:, 0]).values())
    u = _project(mesh, space, lambda x, y: np.abs(x - 0.5) + 0 * y)
    kink_max = max(regularity_all(space, u).values())
    assert smooth_max < kink_max


def test_regularity_scale_invariant():
    mesh, space = _setup()
    u = _project(mesh, space, lambda x, y: np.sin(np.pi * x)
                 * np.sin(np.pi * y))
    a = regularity_all(space, u)
    b = regularity_all(space, 7.5 * u)
    for eid in space.leaf_ids:
        assert a[eid] == pytest.approx(b[eid], rel=1e-10) or (
            np.isnan(a[eid]) and np.isnan(b[eid]))
