"""1-irregular quadrilateral meshes with isotropic h-refinement.

Elements live on dyadic grids: an element at refinement level l occupies
cell (ix, iy) of the (nx*2^l) x (ny*2^l) tensor grid over the bounding
rectangle, so all neighbor/edge relations are exact integer arithmetic.
The full refinement forest is stored; leaves tile the domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .basis import PART_FULL, PART_HI, PART_LO

# local side ids, matching basis.trace_tables
LEFT, RIGHT, BOTTOM, TOP = 0, 1, 2, 3
_OPPOSITE = {LEFT: RIGHT, RIGHT: LEFT, BOTTOM: TOP, TOP: BOTTOM}


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class DomainSpec:
    """Axis-aligned bounding rectangle minus zero or more masked rectangles."""

    x0: float = 0.0
    y0: float = 0.0
    x1: float = 1.0
    y1: float = 1.0
    masks: tuple = ()   # tuple of (x0, y0, x1, y1) rectangles to remove

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0


UNIT_SQUARE = DomainSpec()


@dataclass
class Element:
    id: int
    level: int
    ix: int
    iy: int
    subdomain: int = 0
    p: int = 1
    parent: int | None = None
    children: tuple = ()

    @property
    def is_leaf(self):
        return not self.children


@dataclass(frozen=True)
class Edge:
    """A mesh edge; for hanging sides, one Edge per fine sub-edge.

    K1 is always the finer (or equal-level) side.  axis is 0 for a
    vertical edge (normal along x) and 1 for a horizontal edge.
    normal1 is the unit outward normal of K1 as a +/-1 sign on that axis.
    """

    kind: str            # "interior" | "boundary"
    k1: int
    k2: int | None
    axis: int
    normal1: int         # +1 or -1 along `axis`
    h_e: float
    side1: int           # local side id in K1
    side2: int | None    # local side id in K2
    part1: int           # trace part code for K1 (always PART_FULL)
    part2: int | None    # PART_FULL for equal levels, PART_LO/HI if K2 coarse
    midpoint: tuple      # physical midpoint, for geometry queries


class Mesh:
    def __init__(self, nx: int, ny: int, domain: DomainSpec, mask_cells: frozenset):
        self.nx = nx
        self.ny = ny
        self.domain = domain
        self.mask_cells = mask_cells   # level-0 (ix, iy) cells removed
        self.elements: list[Element] = []
        self._index: dict = {}         # (level, ix, iy) -> id
        self._edges = None

    # ---- construction ------------------------------------------------

    def _add(self, level, ix, iy, subdomain, p, parent=None) -> Element:
        el = Element(len(self.elements), level, ix, iy, subdomain, p, parent)
        self.elements.append(el)
        self._index[(level, ix, iy)] = el.id
        return el

    def clone(self) -> "Mesh":
        m = Mesh(self.nx, self.ny, self.domain, self.mask_cells)
        m.elements = [replace(e) for e in self.elements]
        m._index = dict(self._index)
        return m

    # ---- geometry ----------------------------------------------------

    def cell_size(self, level: int) -> tuple[float, float]:
        d = self.domain
        s = 1 << level
        return d.width / (self.nx * s), d.height / (self.ny * s)

    def rect(self, el: Element) -> tuple[float, float, float, float]:
        hx, hy = self.cell_size(el.level)
        d = self.domain
        x0 = d.x0 + el.ix * hx
        y0 = d.y0 + el.iy * hy
        return x0, y0, x0 + hx, y0 + hy

    def center(self, el: Element) -> tuple[float, float]:
        x0, y0, x1, y1 = self.rect(el)
        return 0.5 * (x0 + x1), 0.5 * (y0 + y1)

    def leaves(self) -> list[Element]:
        return [e for e in self.elements if e.is_leaf]

    def area(self) -> float:
        return sum((r[2] - r[0]) * (r[3] - r[1])
                   for r in (self.rect(e) for e in self.leaves()))

    # ---- topology ----------------------------------------------------

    def _covering_leaf(self, level: int, ix: int, iy: int):
        """Leaf element covering cell (level, ix, iy), walking up; None if
        the cell is outside the domain (or inside a mask hole)."""
        l, jx, jy = level, ix, iy
        while l >= 0:
            eid = self._index.get((l, jx, jy))
            if eid is not None:
                el = self.elements[eid]
                return el if el.is_leaf else None
            l, jx, jy = l - 1, jx >> 1, jy >> 1
        return None

    def _exists(self, level, ix, iy):
        return (level, ix, iy) in self._index

    def neighbor_cell(self, el: Element, side: int) -> tuple[int, int, int]:
        step = {LEFT: (-1, 0), RIGHT: (1, 0), BOTTOM: (0, -1), TOP: (0, 1)}[side]
        return el.level, el.ix + step[0], el.iy + step[1]

    def _in_grid(self, level, ix, iy):
        s = 1 << level
        return 0 <= ix < self.nx * s and 0 <= iy < self.ny * s

    def side_neighbors(self, el: Element, side: int):
        """Leaves across `side` of leaf `el`.

        Returns ("boundary", None), ("equal"|"coarse", leaf) or
        ("fine", [leaf, leaf]) ordered by increasing side coordinate.
        """
        l, jx, jy = self.neighbor_cell(el, side)
        if not self._in_grid(l, jx, jy):
            return "boundary", None
        eid = self._index.get((l, jx, jy))
        if eid is not None:
            nb = self.elements[eid]
            if nb.is_leaf:
                return "equal", nb
            # refined neighbor: the two children touching the shared side
            opp = _OPPOSITE[side]
            kids = []
            for cid in nb.children:
                c = self.elements[cid]
                if self._touches(c, opp, nb):
                    kids.append(c)
            kids.sort(key=lambda c: (c.iy, c.ix))
            for c in kids:
                if not c.is_leaf:
                    raise MeshError("mesh is not 1-irregular")
            return "fine", kids
        leaf = self._covering_leaf(l, jx, jy)
        if leaf is None:
            return "boundary", None
        return "coarse", leaf

    @staticmethod
    def _touches(child: Element, side: int, parent: Element) -> bool:
        lx, ly = child.ix - 2 * parent.ix, child.iy - 2 * parent.iy
        return {LEFT: lx == 0, RIGHT: lx == 1, BOTTOM: ly == 0, TOP: ly == 1}[side]

    # ---- refinement ---------------------------------------------------

    def _split(self, el: Element):
        assert el.is_leaf
        kids = []
        for dy in (0, 1):
            for dx in (0, 1):
                kids.append(self._add(el.level + 1, 2 * el.ix + dx, 2 * el.iy + dy,
                                      el.subdomain, el.p, parent=el.id))
        el.children = tuple(k.id for k in kids)

    def _refine_with_closure(self, el: Element):
        # coarser side neighbors must be split first (1-irregularity)
        for side in (LEFT, RIGHT, BOTTOM, TOP):
            kind, nb = self.side_neighbors(el, side)
            if kind == "coarse" and nb.level < el.level:
                self._refine_with_closure(nb)
        self._split(el)

    def dump(self) -> str:
        leaves = self.leaves()
        lines = [f"mesh v1 {len(leaves)}"]
        for e in leaves:
            x0, y0, x1, y1 = self.rect(e)
            lines.append(f"{e.id} {e.level} {x0:.17g} {y0:.17g} {x1:.17g} {y1:.17g} "
                         f"{e.subdomain} {e.p}")
        return "\n".join(lines) + "\n"


def build_tensor_mesh(nx: int, ny: int, domain: DomainSpec = UNIT_SQUARE,
                      subdomain_of=None, p: int = 1) -> Mesh:
    """Initial nx x ny tensor mesh over `domain`, minus masked cells.

    `subdomain_of(x, y)` assigns subdomain ids from cell centers; masked
    rectangles must align with the tensor grid lines.
    """
    if nx < 1 or ny < 1:
        raise MeshError("nx, ny must be >= 1")
    hx = domain.width / nx
    hy = domain.height / ny
    mask_cells = set()
    for (mx0, my0, mx1, my1) in domain.masks:
        i0 = (mx0 - domain.x0) / hx
        j0 = (my0 - domain.y0) / hy
        i1 = (mx1 - domain.x0) / hx
        j1 = (my1 - domain.y0) / hy
        for v, lbl in ((i0, mx0), (j0, my0), (i1, mx1), (j1, my1)):
            if abs(v - round(v)) > 1e-9:
                raise MeshError(
                    f"mask edge at {lbl} does not align with a {nx}x{ny} grid line")
        for i in range(int(round(i0)), int(round(i1))):
            for j in range(int(round(j0)), int(round(j1))):
                mask_cells.add((i, j))
    mesh = Mesh(nx, ny, domain, frozenset(mask_cells))
    for j in range(ny):
        for i in range(nx):
            if (i, j) in mask_cells:
                continue
            cx = domain.x0 + (i + 0.5) * hx
            cy = domain.y0 + (j + 0.5) * hy
            sd = subdomain_of(cx, cy) if subdomain_of else 0
            mesh._add(0, i, j, sd, p)
    return mesh


def refine_elements(mesh: Mesh, marked) -> Mesh:
    """Split each marked leaf into 4 children, with 1-irregular closure.

    Returns a new mesh; the input is unchanged.  Children inherit the
    parent's subdomain and polynomial order.
    """
    new = mesh.clone()
    ids = sorted(set(int(m) for m in marked))
    for eid in ids:
        el = new.elements[eid]
        if not el.is_leaf:
            raise MeshError(f"element {eid} is not a leaf")
    for eid in ids:
        el = new.elements[eid]
        if el.is_leaf:   # may have been split by closure already? never: closure
            new._refine_with_closure(el)
    return new


def enumerate_edges(mesh: Mesh) -> list[Edge]:
    """All mesh edges; each leaf side portion is covered exactly once.

    Hanging sides produce one Edge per fine sub-edge, with K1 the fine
    element and K2 the coarse one.  Cached on the mesh.
    """
    if mesh._edges is not None:
        return mesh._edges
    edges = []
    axis_of = {LEFT: 0, RIGHT: 0, BOTTOM: 1, TOP: 1}
    normal_of = {LEFT: -1, RIGHT: 1, BOTTOM: -1, TOP: 1}
    for el in mesh.leaves():
        hx, hy = mesh.cell_size(el.level)
        x0, y0, x1, y1 = mesh.rect(el)
        side_len = {0: hy, 1: hx}
        side_mid = {
            LEFT: (x0, 0.5 * (y0 + y1)), RIGHT: (x1, 0.5 * (y0 + y1)),
            BOTTOM: (0.5 * (x0 + x1), y0), TOP: (0.5 * (x0 + x1), y1),
        }
        for side in (LEFT, RIGHT, BOTTOM, TOP):
            axis = axis_of[side]
            kind, nb = mesh.side_neighbors(el, side)
            if kind == "boundary":
                edges.append(Edge("boundary", el.id, None, axis, normal_of[side],
                                  side_len[axis], side, None, PART_FULL, None,
                                  side_mid[side]))
            elif kind == "equal":
                if el.id < nb.id:
                    edges.append(Edge("interior", el.id, nb.id, axis,
                                      normal_of[side], side_len[axis], side,
                                      _OPPOSITE[side], PART_FULL, PART_FULL,
                                      side_mid[side]))
            elif kind == "coarse":
                # which half of the coarse side does el cover?
                tangent = el.iy if axis == 0 else el.ix
                part2 = PART_LO if tangent % 2 == 0 else PART_HI
                edges.append(Edge("interior", el.id, nb.id, axis, normal_of[side],
                                  side_len[axis], side, _OPPOSITE[side],
                                  PART_FULL, part2, side_mid[side]))
            # "fine": the finer elements generate the sub-edges
    mesh._edges = edges
    return edges
