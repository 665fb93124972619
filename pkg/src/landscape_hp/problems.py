"""Experiment catalog: named operator/domain setups with reference data."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np

from .assembly import ProblemSpec, SourcePoly, Subdomain, isotropic
from .mesh import DomainSpec, Mesh, build_tensor_mesh

PI2 = np.pi ** 2

# Reference eigenvalues for the L-shape Laplacian (method of particular
# solutions values quoted to all correct digits).
LSHAPE_LOW = [9.639723844, 15.19725193, 19.73920880, 29.52148111, 31.91263596]
LSHAPE_CLUSTER_50PI2 = {
    101: 485.71752463708,
    102: 490.15998172598,
    103: 493.48022005447,
    104: 493.48022005447,
    105: 493.48022005447,
    106: 499.24106145290,
    107: 502.30119419396,
}


@dataclass
class ReferenceData:
    """Known eigenvalues: list of (index-or-label, value), ascending."""

    entries: list

    def values(self, m: int | None = None) -> np.ndarray:
        v = np.array([val for _, val in self.entries])
        return v if m is None else v[:m]

    def by_index(self) -> dict:
        return dict(self.entries)


def _square_spectrum(count: int, factor: float = 1.0) -> list:
    vals = sorted((m * m + n * n) * PI2 * factor
                  for m in range(1, 40) for n in range(1, 40))[:count]
    return [(j + 1, v) for j, v in enumerate(vals)]


# tilted source for the interface-diffusion landscape runs: f(x,y) = 1 - 3x
TILTED_SOURCE = SourcePoly(((1.0, 0, 0), (-3.0, 1, 0)))

CATALOG_NAMES = ["unit_square", "lshape", "schrodinger_simple",
                 "schrodinger_rough", "disc_diffusion",
                 "disc_diffusion_corner34", "perforated"]


def catalog(name: str, seed: int = 0, p: int = 2,
            source: SourcePoly | None = None):
    """Build (ProblemSpec, initial Mesh, ReferenceData) for a named setup.

    `perforated` takes an optional hole parameter, e.g. "perforated(3)".
    `source` overrides the default source term f=1 of the landscape solve.
    """
    m_holes = 3
    mm = re.fullmatch(r"perforated(?:\((\d+)\))?", name)
    if mm:
        if mm.group(1):
            m_holes = int(mm.group(1))
        name = "perforated"
    if name not in CATALOG_NAMES:
        raise ValueError(f"unknown problem {name!r}; available: "
                       + ", ".join(CATALOG_NAMES))
    src = source or SourcePoly()

    if name == "unit_square":
        spec = ProblemSpec({0: isotropic(1.0)}, source=src,
                           name=name, seed=seed)
        mesh = build_tensor_mesh(8, 8, p=p)
        return spec, mesh, ReferenceData(_square_spectrum(150))

    if name == "lshape":
        dom = DomainSpec(-1.0, -1.0, 1.0, 1.0, masks=((0.0, 0.0, 1.0, 1.0),))
        spec = ProblemSpec({0: isotropic(1.0)}, source=src,
                           name=name, seed=seed)
        mesh = build_tensor_mesh(8, 8, dom, p=p)
        entries = [(j + 1, v) for j, v in enumerate(LSHAPE_LOW)]
        entries += sorted(LSHAPE_CLUSTER_50PI2.items())
        return spec, mesh, ReferenceData(entries)

    if name == "schrodinger_rough":
        rng = np.random.default_rng(seed)
        vals = rng.uniform(0.0, 8000.0, size=(20, 20))
        subs = {20 * j + i: isotropic(1.0, float(vals[i, j]))
                for i in range(20) for j in range(20)}

        def sd(x, y):
            return 20 * min(int(y * 20), 19) + min(int(x * 20), 19)

        spec = ProblemSpec(subs, source=src, name=name, seed=seed)
        mesh = build_tensor_mesh(20, 20, subdomain_of=sd, p=p)
        return spec, mesh, ReferenceData([])

    if name == "schrodinger_simple":
        # stand-in pattern: the published potential exists only as a figure.
        # Seeded piecewise-constant values in [0, 6400] on a 4x4 grid.
        rng = np.random.default_rng(seed)
        vals = rng.uniform(0.0, 6400.0, size=(4, 4))
        subs = {4 * j + i: isotropic(1.0, float(vals[i, j]))
                for i in range(4) for j in range(4)}

        def sd(x, y):
            return 4 * min(int(y * 4), 3) + min(int(x * 4), 3)

        spec = ProblemSpec(subs, source=src, name=name, seed=seed)
        mesh = build_tensor_mesh(8, 8, subdomain_of=sd, p=p)
        return spec, mesh, ReferenceData([])

    if name in ("disc_diffusion", "disc_diffusion_corner34"):
        beta2 = 10.0
        corner = 0.5 if name == "disc_diffusion" else 0.75
        subs = {0: isotropic(1.0), 1: isotropic(beta2)}

        def sd(x, y):
            same = (x <= corner) == (y <= corner)
            return 0 if same else 1

        spec = ProblemSpec(subs, source=src, name=name, seed=seed)
        mesh = build_tensor_mesh(8, 8, subdomain_of=sd, p=p)
        # no reference eigenvalues in the literature for this setup; the
        # Kellogg singularity exponent is exposed for regularity tests
        return spec, mesh, ReferenceData([])

    # perforated(m): (2m+1)x(2m+1) grid, delete cells with both 1-based
    # indices even; analytic eigenvalues (j^2+k^2)*((2m+1)*pi)^2 survive.
    n = 2 * m_holes + 1
    H = 1.0 / n
    masks = tuple((i * H, j * H, (i + 1) * H, (j + 1) * H)
                  for i in range(1, n, 2) for j in range(1, n, 2))
    dom = DomainSpec(0.0, 0.0, 1.0, 1.0, masks=masks)
    spec = ProblemSpec({0: isotropic(1.0)}, source=src,
                       name=f"perforated({m_holes})", seed=seed)
    mesh = build_tensor_mesh(n, n, dom, p=p)
    entries = []
    if m_holes == 3:
        entries = [(41, 2.0 * (7 * np.pi) ** 2)]
    return spec, mesh, ReferenceData(entries)


def kellogg_exponent(beta: float) -> float:
    """Strongest Kellogg interface singularity exponent (4/pi)*arccot(beta)."""
    return (4.0 / np.pi) * np.arctan(1.0 / beta)


def spec_dump(spec: ProblemSpec) -> str:
    return json.dumps(spec.to_json(), indent=2, sort_keys=True)
