"""Per-element regularity measure from the decay of local modal coefficients.

For each element the modal block is aggregated into band magnitudes a_k
(over modes with max(i,j)=k) and tail norms E_k = sqrt(sum_{l>=k} a_l^2).
The tail norms are fit with log E_k ~ log C - sigma*k and the measure is
m = exp(-sigma), clamped to [0,1].  Small m means smooth (p-refine), large
m means irregular (h-refine).  Fitting the monotone tail norms rather than
the raw bands keeps the estimate stable when parity zeroes out individual
bands (e.g. an even function has no odd-degree content).
"""

from __future__ import annotations

import numpy as np

from .assembly import DGSpace

NOISE_FLOOR = 1e-14


def _measure_from_block(c: np.ndarray, p: int) -> float:
    a = np.abs(c.reshape(p + 1, p + 1))
    mags = np.empty(p + 1)
    for k in range(p + 1):
        band = np.concatenate([a[k, :k + 1], a[:k, k]])
        mags[k] = np.sqrt(np.sum(band ** 2))
    tails = np.sqrt(np.cumsum((mags ** 2)[::-1])[::-1])
    top = tails[0]
    if top <= 0.0:
        return 0.0
    keep = tails > NOISE_FLOOR * top
    ks = np.nonzero(keep)[0]
    if len(ks) < 2:
        return 0.0          # single surviving tail: maximally smooth
    slope = np.polyfit(ks, np.log(tails[ks]), 1)[0]
    return float(np.clip(np.exp(slope), 0.0, 1.0))


def regularity(space: DGSpace, field: np.ndarray, eid: int) -> float:
    """Regularity measure of `field` on leaf `eid`; requires p >= 2."""
    el = space.mesh.elements[eid]
    if el.p < 2:
        raise ValueError(f"regularity undefined for p={el.p} (< 2); "
                         "caller should default to h-refinement")
    return _measure_from_block(space.block(field, eid), el.p)


def regularity_all(space: DGSpace, field: np.ndarray) -> dict:
    """Per-leaf measures; NaN where p < 2 (caller defaults to h)."""
    out = {}
    for eid in space.leaf_ids:
        el = space.mesh.elements[eid]
        if el.p < 2:
            out[eid] = float("nan")
        else:
            out[eid] = _measure_from_block(space.block(field, eid), el.p)
    return out
