"""1D validation lab: -u'' + V u on (0,1), homogeneous Dirichlet data.

Conforming piecewise-linear FEM on a uniform grid. Used to check the
pointwise-control properties of the landscape function (the solution of
L u = 1): eigenvector envelopes, the eigenpair expansion of u, and
ground-state/peak matching in localized regimes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .eigensolve import EigenpairSet


@dataclass(frozen=True)
class Potential1D:
    """Piecewise-constant potential on a uniform partition of (0,1)."""

    values: tuple  # one value per subinterval, all >= 0

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError("need at least one subinterval")
        if any(v < 0 for v in self.values):
            raise ValueError("potential values must be nonnegative")

    @property
    def n_sub(self) -> int:
        return len(self.values)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_sub + 1)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        idx = np.clip((np.asarray(x) * self.n_sub).astype(int), 0,
                      self.n_sub - 1)
        return np.asarray(self.values)[idx]


ZERO_POTENTIAL = Potential1D((0.0,))


def random_potential(n_sub: int, lo: float, hi: float,
                     seed: int) -> Potential1D:
    rng = np.random.default_rng(seed)
    return Potential1D(tuple(rng.uniform(lo, hi, size=n_sub)))


@dataclass
class Lab1DResult:
    x: np.ndarray          # interior grid points, shape (n_dof,)
    h: float
    u: np.ndarray          # landscape values at interior points
    pairs: EigenpairSet    # L2-orthonormal, psi columns at interior points
    potential: Potential1D = field(repr=False, default=ZERO_POTENTIAL)


def _p1_matrices(V: Potential1D, n_dof: int):
    """Stiffness and mass (interior nodes) for -u'' + Vu, P1 elements.

    V is sampled at element midpoints (exact for V constant per element
    whenever element boundaries align with the potential's breakpoints).
    """
    n_el = n_dof + 1
    h = 1.0 / n_el
    mids = (np.arange(n_el) + 0.5) * h
    v = V(mids)
    # element contributions: K_e = (1/h)[[1,-1],[-1,1]] + v_e*(h/6)[[2,1],[1,2]]
    main_k = np.full(n_dof, 2.0 / h) + (v[:-1] + v[1:]) * (h / 3.0)
    off_k = np.full(n_dof - 1, -1.0 / h) + v[1:-1] * (h / 6.0)
    K = sp.diags([off_k, main_k, off_k], [-1, 0, 1], format="csc")
    main_m = np.full(n_dof, 2.0 * h / 3.0)
    off_m = np.full(n_dof - 1, h / 6.0)
    M = sp.diags([off_m, main_m, off_m], [-1, 0, 1], format="csc")
    return K, M, h


def solve_1d(V: Potential1D, n_dof: int, n_pairs: int) -> Lab1DResult:
    """Landscape solve and the lowest n_pairs eigenpairs of -u'' + Vu."""
    if n_dof < 10 * n_pairs:
        raise ValueError(f"n_dof={n_dof} too small for n_pairs={n_pairs} "
                         "(need n_dof >= 10*n_pairs)")
    K, M, h = _p1_matrices(V, n_dof)
    x = np.arange(1, n_dof + 1) * h
    # landscape: L u = 1 -> load vector is h per interior hat function
    u = spla.spsolve(K, np.full(n_dof, h))
    vals, vecs = sla.eigh(K.toarray(), M.toarray(),
                          subset_by_index=(0, n_pairs - 1))
    # L2-normalize and fix sign (positive mean)
    for j in range(n_pairs):
        nrm = np.sqrt(vecs[:, j] @ (M @ vecs[:, j]))
        vecs[:, j] /= nrm
        if vecs[:, j].sum() < 0:
            vecs[:, j] = -vecs[:, j]
    resid = np.array([np.linalg.norm(K @ vecs[:, j] - vals[j] * (M @ vecs[:, j]))
                      for j in range(n_pairs)])
    pairs = EigenpairSet(vals, vecs, resid, np.ones(n_pairs, bool))
    return Lab1DResult(x, h, u, pairs, V)


def envelope_check(res: Lab1DResult) -> float:
    """Max over pairs and grid points of |psi_j|/(lambda_j*max|psi_j|) - u.

    Nonpositive (up to discretization error) when the pointwise envelope
    |psi_j(x)| <= lambda_j * max|psi_j| * u(x) holds.
    """
    psi = res.pairs.vectors
    lam = res.pairs.values
    scaled = np.abs(psi) / (lam[None, :] * np.abs(psi).max(axis=0)[None, :])
    return float((scaled - res.u[:, None]).max())


def pointwise_stability_check(res: Lab1DResult, g: np.ndarray) -> float:
    """Max violation of |v| <= max|g| * u for the solve of L v = g.

    g is sampled at the interior grid points.
    """
    V = res.potential
    n_dof = len(res.x)
    K, M, _ = _p1_matrices(V, n_dof)
    v = spla.spsolve(K, M @ g)
    return float((np.abs(v) - np.abs(g).max() * res.u).max())


def fourier_reconstruct(res: Lab1DResult, N: int):
    """Coefficients c_n = (int psi_n)/lambda_n and the partial sum at x.

    Returns (c, partial) with c of length N; the partial sum approximates
    the landscape u = sum_n c_n psi_n.
    """
    n_avail = len(res.pairs.values)
    if N > n_avail:
        raise ValueError(f"N={N} exceeds available pairs {n_avail}")
    h = res.h
    psi = res.pairs.vectors[:, :N]
    # trapezoid over [0,1] with zero boundary values == h * interior sum
    integrals = h * psi.sum(axis=0)
    c = integrals / res.pairs.values[:N]
    partial = psi @ c
    return c, partial


def reconstruction_errors(res: Lab1DResult, N_max: int) -> np.ndarray:
    """Relative L2 error of the partial sum for N = 1..N_max."""
    errs = np.empty(N_max)
    u_norm = np.sqrt(res.h) * np.linalg.norm(res.u)
    for N in range(1, N_max + 1):
        _, partial = fourier_reconstruct(res, N)
        errs[N - 1] = np.sqrt(res.h) * np.linalg.norm(res.u - partial) / u_norm
    return errs


@dataclass
class PeakMatch:
    peak_x: float          # location of a local max of the landscape
    pair_index: int        # 0-based index of the nearest-peaked eigenvector
    psi_peak_x: float
    distance: float


def _local_maxima(x: np.ndarray, y: np.ndarray, min_rel: float = 0.2) -> list:
    """Indices of strict local maxima above min_rel * global max."""
    cut = min_rel * y.max()
    out = []
    for i in range(1, len(y) - 1):
        if y[i] > y[i - 1] and y[i] >= y[i + 1] and y[i] > cut:
            out.append(i)
    return out


def ground_state_census(res: Lab1DResult) -> list:
    """Match each local max of the landscape to the nearest eigenvector peak.

    Greedy: peaks in descending landscape height, each consuming the
    unused eigenvector whose max-abs location is closest.
    """
    peaks = _local_maxima(res.x, res.u)
    peaks.sort(key=lambda i: -res.u[i])
    psi_peaks = res.x[np.abs(res.pairs.vectors).argmax(axis=0)]
    used = set()
    report = []
    for i in peaks:
        best, best_d = None, np.inf
        for j in range(len(psi_peaks)):
            if j in used:
                continue
            d = abs(psi_peaks[j] - res.x[i])
            if d < best_d:
                best, best_d = j, d
        if best is None:
            break
        used.add(best)
        report.append(PeakMatch(float(res.x[i]), best,
                                float(psi_peaks[best]), float(best_d)))
    report.sort(key=lambda m: m.peak_x)
    return report


def figure_data(res: Lab1DResult, n_show: int = 5, N_partial=(1, 5, 25)):
    """Data files mirroring the 1D figures: potential, envelope, partial sums.

    Returns dict of name -> (header, 2D array) ready for CSV dumping.
    """
    x = res.x
    V = res.potential(x)
    out = {}
    out["potential"] = ("x,V", np.column_stack([x, V]))
    psi = res.pairs.vectors[:, :n_show]
    lam = res.pairs.values[:n_show]
    scaled = psi / (lam[None, :] * np.abs(psi).max(axis=0)[None, :])
    hdr = "x,u,neg_u," + ",".join(f"psi{j+1}_scaled" for j in range(n_show))
    out["envelope"] = (hdr, np.column_stack([x, res.u, -res.u, scaled]))
    cols = [x, res.u]
    names = ["x", "u"]
    for N in N_partial:
        _, partial = fourier_reconstruct(res, N)
        cols.append(partial)
        names.append(f"partial{N}")
    out["fourier"] = (",".join(names), np.column_stack(cols))
    return out
