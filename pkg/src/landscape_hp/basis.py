"""Tensor-product orthonormal Legendre basis on the reference square and
Gauss quadrature rules.

The reference element is [-1,1]^2 (measure 4).  Basis functions are
phi_{ij}(x, y) = Lhat_i(x) * Lhat_j(y) with Lhat_n the L2-normalized
Legendre polynomial on [-1,1], so that the basis is exactly orthonormal
on the reference square.  Linear index k = i*(p+1) + j.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights on the reference square or segment."""

    nodes: np.ndarray   # (n, 2) on the square, (n,) on a segment
    weights: np.ndarray
    exactness: int      # exact per-direction polynomial degree


@lru_cache(maxsize=None)
def gauss_1d(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [-1,1], exact for degree 2n-1."""
    x, w = npleg.leggauss(n)
    return x, w


def element_rule(p_max: int) -> QuadratureRule:
    """Tensor Gauss rule with (p_max+2)^2 points on the reference square."""
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    n = p_max + 2
    x, w = gauss_1d(n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    weights = np.outer(w, w).ravel()
    return QuadratureRule(nodes, weights, exactness=2 * n - 1)


def edge_rule(p_e: int) -> QuadratureRule:
    """(p_e+2)-point Gauss rule on the reference segment [-1,1]."""
    x, w = gauss_1d(p_e + 2)
    return QuadratureRule(x, w, exactness=2 * (p_e + 2) - 1)


def _normalized_legendre_coefs(n: int) -> np.ndarray:
    c = np.zeros(n + 1)
    c[n] = np.sqrt((2 * n + 1) / 2.0)
    return c


@lru_cache(maxsize=None)
def _leg_tables_key(p: int, deriv: int):
    # coefficient vectors for Lhat_n and derivatives up to `deriv`
    out = []
    for n in range(p + 1):
        c = _normalized_legendre_coefs(n)
        ds = [c]
        for _ in range(deriv):
            ds.append(npleg.legder(ds[-1]))
        out.append(ds)
    return out


def _eval_1d(p: int, x: np.ndarray, deriv: int) -> np.ndarray:
    """Values of d^deriv/dx^deriv Lhat_n at points x; shape (len(x), p+1)."""
    tabs = _leg_tables_key(p, deriv)
    x = np.asarray(x, dtype=float)
    return np.column_stack([npleg.legval(x, tabs[n][deriv]) for n in range(p + 1)])


def eval_basis(p: int, points: np.ndarray, deriv: int = 0) -> np.ndarray:
    """Evaluate the modal basis (or its derivatives) at reference points.

    Returns shape (npts, dim) for deriv=0, (npts, dim, 2) for the gradient
    (d/dx, d/dy) and (npts, dim, 3) for second derivatives (xx, xy, yy),
    where dim = (p+1)^2.
    """
    if deriv not in (0, 1, 2):
        raise ValueError("derivative order %r unsupported (max 2)" % (deriv,))
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    dim = (p + 1) ** 2
    v0x, v0y = _eval_1d(p, x, 0), _eval_1d(p, y, 0)
    if deriv == 0:
        return np.einsum("ni,nj->nij", v0x, v0y).reshape(-1, dim)
    v1x, v1y = _eval_1d(p, x, 1), _eval_1d(p, y, 1)
    if deriv == 1:
        gx = np.einsum("ni,nj->nij", v1x, v0y).reshape(-1, dim)
        gy = np.einsum("ni,nj->nij", v0x, v1y).reshape(-1, dim)
        return np.stack([gx, gy], axis=-1)
    v2x, v2y = _eval_1d(p, x, 2), _eval_1d(p, y, 2)
    hxx = np.einsum("ni,nj->nij", v2x, v0y).reshape(-1, dim)
    hxy = np.einsum("ni,nj->nij", v1x, v1y).reshape(-1, dim)
    hyy = np.einsum("ni,nj->nij", v0x, v2y).reshape(-1, dim)
    return np.stack([hxx, hxy, hyy], axis=-1)


class LocalBasis:
    """Evaluation tables for order p at the element quadrature nodes."""

    def __init__(self, p: int):
        self.p = p
        self.dim = (p + 1) ** 2
        self.rule = element_rule(p)
        self.val = eval_basis(p, self.rule.nodes, 0)
        g = eval_basis(p, self.rule.nodes, 1)
        self.dx, self.dy = g[:, :, 0], g[:, :, 1]
        h = eval_basis(p, self.rule.nodes, 2)
        self.dxx, self.dxy, self.dyy = h[:, :, 0], h[:, :, 1], h[:, :, 2]


@lru_cache(maxsize=None)
def local_basis(p: int) -> LocalBasis:
    return LocalBasis(p)


# Reference volume matrices: Sxx[i,j] = int phi_i_x phi_j_x, etc.
@lru_cache(maxsize=None)
def reference_matrices(p: int) -> dict:
    b = local_basis(p)
    w = b.rule.weights
    return {
        "sxx": (b.dx * w[:, None]).T @ b.dx,
        "syy": (b.dy * w[:, None]).T @ b.dy,
        "sxy": (b.dx * w[:, None]).T @ b.dy,
    }


# Edge traces.  Sides of the reference square: 0=left(x=-1), 1=right(x=+1),
# 2=bottom(y=-1), 3=top(y=+1).  Parts: 0 = whole side, 1 = lower half of the
# side coordinate, 2 = upper half (used when this element is the coarse side
# of a hanging edge).
PART_FULL, PART_LO, PART_HI = 0, 1, 2


def _side_points(side: int, part: int, t: np.ndarray) -> np.ndarray:
    if part == PART_LO:
        s = (t - 1.0) / 2.0
    elif part == PART_HI:
        s = (t + 1.0) / 2.0
    else:
        s = t
    if side == 0:
        return np.column_stack([np.full_like(s, -1.0), s])
    if side == 1:
        return np.column_stack([np.full_like(s, 1.0), s])
    if side == 2:
        return np.column_stack([s, np.full_like(s, -1.0)])
    return np.column_stack([s, np.full_like(s, 1.0)])


@lru_cache(maxsize=None)
def trace_tables(p: int, nq: int, side: int, part: int):
    """(val, d/dx, d/dy) tables of shape (nq, (p+1)^2) on a side segment."""
    t, _ = gauss_1d(nq)
    pts = _side_points(side, part, t)
    val = eval_basis(p, pts, 0)
    g = eval_basis(p, pts, 1)
    return val, g[:, :, 0], g[:, :, 1]
