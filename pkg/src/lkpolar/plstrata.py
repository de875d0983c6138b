"""Embedded simplicial complexes as stratified sets.

Every open cell of the complex is one stratum (the canonical PL
stratification).  For a generic linear height function the critical points
sit at vertices, so stratified Morse theory collapses to lower-link Euler
characteristics, which are computed combinatorially: the Euler characteristic
of the closed sublevel polyhedron {<v, y> <= -eta} of a normal link equals,
for eta below the smallest nonzero |<v, d>| over link directions d, the Euler
characteristic of the full subcomplex spanned by the strictly-below
directions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StratifiedComplex",
    "NormalLink",
    "DegenerateDirectionError",
    "euler_characteristic",
    "normal_link",
    "normal_morse_index",
    "normal_morse_index_many",
    "pl_morse_indices",
    "segment_complex",
    "square_boundary",
    "octahedron_boundary",
    "cube_boundary",
    "solid_cube",
    "torus_7vertex",
    "load_plstrat",
    "save_plstrat",
]

ANGLE_TOL = 1e-8


class DegenerateDirectionError(ValueError):
    """Raised when a direction is too close to an orthogonality wall; the
    caller is expected to resample."""


@dataclass(frozen=True)
class StratifiedComplex:
    """Finite embedded simplicial complex, closed under taking faces.

    ``cells[d]`` lists the d-simplices as sorted vertex-index tuples.  Strata
    are the open cells.
    """

    vertices: np.ndarray  # (V, n)
    cells: dict[int, list[tuple[int, ...]]] = field(repr=False)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        object.__setattr__(self, "vertices", verts)
        cells = {
            d: sorted(tuple(sorted(c)) for c in cs)
            for d, cs in self.cells.items()
            if cs
        }
        object.__setattr__(self, "cells", cells)
        self._validate()

    def _validate(self):
        have = {c for cs in self.cells.values() for c in cs}
        for d, cs in self.cells.items():
            for c in cs:
                if len(c) != d + 1:
                    raise ValueError(f"cell {c} listed at dimension {d}")
                if len(set(c)) != len(c):
                    raise ValueError(f"repeated vertex in cell {c}")
                for f in itertools.combinations(c, len(c) - 1):
                    if len(f) and tuple(f) not in have:
                        raise ValueError(f"complex not closed under faces: missing {f} of {c}")
                if d >= 1 and not self._affinely_nondegenerate(c):
                    raise ValueError(f"degenerate simplex {c}")

    def _affinely_nondegenerate(self, cell) -> bool:
        pts = self.vertices[list(cell)]
        edges = pts[1:] - pts[0]
        if len(edges) == 0:
            return True
        sv = np.linalg.svd(edges, compute_uv=False)
        scale = max(1.0, float(np.max(np.abs(pts))))
        return bool(sv.min() > 1e-10 * scale)

    @classmethod
    def from_maximal_cells(cls, vertices, maximal_cells) -> "StratifiedComplex":
        """Build the face closure of the given top cells."""
        cells: dict[int, set] = {}
        for c in maximal_cells:
            c = tuple(sorted(c))
            for size in range(1, len(c) + 1):
                for f in itertools.combinations(c, size):
                    cells.setdefault(size - 1, set()).add(f)
        return cls(np.asarray(vertices, dtype=float), {d: sorted(s) for d, s in cells.items()})

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def dim(self) -> int:
        return max(self.cells)

    def all_cells(self):
        for d in sorted(self.cells):
            yield from self.cells[d]

    def has_cell(self, cell) -> bool:
        cell = tuple(sorted(cell))
        return cell in set(self.cells.get(len(cell) - 1, ()))

    def cell_span(self, cell) -> np.ndarray:
        """Orthonormal basis (rows) of the linear span of the cell's edges."""
        pts = self.vertices[list(cell)]
        if len(cell) == 1:
            return np.zeros((0, self.ambient_dim))
        q, _ = np.linalg.qr((pts[1:] - pts[0]).T)
        return q.T[: len(cell) - 1]

    def barycenter(self, cell) -> np.ndarray:
        return self.vertices[list(cell)].mean(axis=0)

    def cell_volume(self, cell) -> float:
        """d-volume of the closed simplex (Gram determinant)."""
        pts = self.vertices[list(cell)]
        d = len(cell) - 1
        if d == 0:
            return 1.0
        e = pts[1:] - pts[0]
        gram = e @ e.T
        return float(np.sqrt(max(np.linalg.det(gram), 0.0))) / _factorial(d)

    def link_cells(self, cell) -> list[tuple[int, ...]]:
        """Cells c' disjoint from ``cell`` with c' + cell a cell of the complex."""
        cell = tuple(sorted(cell))
        cset = set(cell)
        out = []
        for c in self.all_cells():
            if cset & set(c):
                continue
            joined = tuple(sorted(cell + c))
            if self.has_cell(joined):
                out.append(c)
        return out

    def transformed(self, rotation: np.ndarray | None = None, translation=None, scale: float = 1.0):
        v = self.vertices * scale
        if rotation is not None:
            v = v @ np.asarray(rotation, dtype=float).T
        if translation is not None:
            v = v + np.asarray(translation, dtype=float)
        return StratifiedComplex(v, {d: list(cs) for d, cs in self.cells.items()})


def _factorial(d: int) -> int:
    out = 1
    for i in range(2, d + 1):
        out *= i
    return out


@dataclass(frozen=True)
class NormalLink:
    """Directions and simplicial structure of the link of a cell, projected
    into the orthogonal complement of the cell's span at its barycenter."""

    base_cell: tuple[int, ...]
    directions: np.ndarray  # (m, n) unit vectors orthogonal to the base span
    link_cells: list[tuple[int, ...]]  # index tuples into ``directions``
    vertex_ids: tuple[int, ...]  # original vertex indices of the directions

    @property
    def dims(self) -> np.ndarray:
        return np.array([len(c) - 1 for c in self.link_cells], dtype=int)


def euler_characteristic(K: StratifiedComplex) -> int:
    """Alternating cell count; equals chi of the underlying polyhedron."""
    return sum((-1) ** d * len(cs) for d, cs in K.cells.items())


def normal_link(K: StratifiedComplex, cell) -> NormalLink:
    """Normal link of an open cell: unit projections of its link vertices onto
    span(cell)^perp, carrying the link's simplicial structure.  The cone over
    the result is the local normal slice of the complex along the cell."""
    cell = tuple(sorted(cell))
    if not K.has_cell(cell):
        raise KeyError(f"cell {cell} not in complex")
    span = K.cell_span(cell)
    base = K.barycenter(cell)
    lk = K.link_cells(cell)
    vertex_ids = tuple(sorted({v for c in lk for v in c}))
    idx = {v: i for i, v in enumerate(vertex_ids)}
    dirs = np.zeros((len(vertex_ids), K.ambient_dim))
    for v, i in idx.items():
        d = K.vertices[v] - base
        if span.size:
            d = d - (d @ span.T) @ span
        nrm = np.linalg.norm(d)
        if nrm <= 1e-12:
            raise ValueError(f"link vertex {v} projects to zero for cell {cell}")
        dirs[i] = d / nrm
    cells = [tuple(sorted(idx[v] for v in c)) for c in lk]
    return NormalLink(base_cell=cell, directions=dirs, link_cells=cells, vertex_ids=vertex_ids)


def _lower_subcomplex_chi(link: NormalLink, below: np.ndarray) -> int:
    """chi of the full subcomplex of the link spanned by the flagged vertices."""
    chi = 0
    for c in link.link_cells:
        if all(below[i] for i in c):
            chi += (-1) ** (len(c) - 1)
    return chi


def normal_morse_index(K: StratifiedComplex, cell, v: np.ndarray, link: NormalLink | None = None) -> int:
    """Normal Morse index 1 - chi of the downward normal slice along the cell.

    ``v`` must be orthogonal to the span of the cell; directions within
    ANGLE_TOL of an orthogonality wall raise DegenerateDirectionError so the
    caller can resample.
    """
    v = np.asarray(v, dtype=float)
    if link is None:
        link = normal_link(K, cell)
    span = K.cell_span(cell)
    if span.size and np.max(np.abs(span @ v)) > 1e-8 * np.linalg.norm(v):
        raise ValueError("direction is not orthogonal to the cell")
    if len(link.vertex_ids) == 0:
        return 1  # empty link: the slice is empty
    dots = link.directions @ v
    if np.min(np.abs(dots)) <= ANGLE_TOL * np.linalg.norm(v):
        raise DegenerateDirectionError("direction orthogonal to a link direction")
    return 1 - _lower_subcomplex_chi(link, dots < 0.0)


def normal_morse_index_many(K: StratifiedComplex, cell, vs: np.ndarray, link: NormalLink | None = None):
    """Vectorized :func:`normal_morse_index` over rows of ``vs``.

    Returns (indices, valid): non-generic rows are marked invalid instead of
    raising.
    """
    if link is None:
        link = normal_link(K, cell)
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    n_dirs = vs.shape[0]
    if len(link.vertex_ids) == 0:
        return np.ones(n_dirs, dtype=int), np.ones(n_dirs, dtype=bool)
    dots = vs @ link.directions.T  # (N, m)
    norms = np.linalg.norm(vs, axis=1)
    valid = np.min(np.abs(dots), axis=1) > ANGLE_TOL * norms
    below = dots < 0.0
    chi = np.zeros(n_dirs, dtype=int)
    for c in link.link_cells:
        mask = np.logical_and.reduce(below[:, list(c)], axis=1)
        chi += (-1) ** (len(c) - 1) * mask
    return 1 - chi, valid


def pl_morse_indices(K: StratifiedComplex, v: np.ndarray) -> dict[int, int]:
    """Stratified Morse index of the height <v, .> at every vertex.

    Generic directions separate all vertex heights, so positive-dimensional
    cells carry no critical points and each vertex contributes
    1 - chi(lower link).
    """
    v = np.asarray(v, dtype=float)
    heights = K.vertices @ v
    order = np.sort(heights)
    scale = max(1.0, float(np.max(np.abs(heights))))
    if len(order) > 1 and np.min(np.diff(order)) <= 1e-10 * scale:
        raise DegenerateDirectionError("direction does not separate vertex heights")

    star: dict[int, list[tuple[int, ...]]] = {i: [] for i in range(len(K.vertices))}
    for c in K.all_cells():
        if len(c) == 1:
            continue
        for x in c:
            star[x].append(c)

    out: dict[int, int] = {}
    for x in range(len(K.vertices)):
        chi = 0
        for c in star[x]:
            rest = [w for w in c if w != x]
            if all(heights[w] < heights[x] for w in rest):
                chi += (-1) ** (len(rest) - 1)
        out[x] = 1 - chi
    return out


# ---------------------------------------------------------------------------
# catalog complexes
# ---------------------------------------------------------------------------

def segment_complex(length: float = 1.0, ambient_dim: int = 2) -> StratifiedComplex:
    """A single segment [0, length] on the first axis of R^ambient_dim."""
    v = np.zeros((2, ambient_dim))
    v[1, 0] = length
    return StratifiedComplex.from_maximal_cells(v, [(0, 1)])


def square_boundary(side: float = 1.0) -> StratifiedComplex:
    v = side * np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    return StratifiedComplex.from_maximal_cells(v, [(0, 1), (1, 2), (2, 3), (0, 3)])


def octahedron_boundary() -> StratifiedComplex:
    v = np.array(
        [
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ]
    )
    faces = [
        (0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
        (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5),
    ]
    return StratifiedComplex.from_maximal_cells(v, faces)


def _cube_vertices(side: float) -> np.ndarray:
    return side * np.array(
        [[(i >> 2) & 1, (i >> 1) & 1, i & 1] for i in range(8)], dtype=float
    )[:, ::-1]


def solid_cube(side: float = 1.0) -> StratifiedComplex:
    """[0, side]^3 cut into the six path tetrahedra (Kuhn triangulation)."""
    verts = _cube_vertices(side)
    index = {tuple(np.round(v / side).astype(int)): i for i, v in enumerate(verts)} if side else {}
    tets = []
    for perm in itertools.permutations(range(3)):
        pt = np.zeros(3, dtype=int)
        chain = [tuple(pt)]
        for axis in perm:
            pt = pt.copy()
            pt[axis] = 1
            chain.append(tuple(pt))
        tets.append(tuple(index[p] for p in chain))
    return StratifiedComplex.from_maximal_cells(verts, tets)


def cube_boundary(side: float = 1.0) -> StratifiedComplex:
    """Boundary 2-sphere of the Kuhn-triangulated cube."""
    solid = solid_cube(side)
    tri_count: dict[tuple, int] = {}
    for tet in solid.cells[3]:
        for f in itertools.combinations(tet, 3):
            tri_count[f] = tri_count.get(f, 0) + 1
    boundary = [f for f, cnt in tri_count.items() if cnt == 1]
    return StratifiedComplex.from_maximal_cells(solid.vertices, boundary)


def torus_7vertex() -> StratifiedComplex:
    """The 7-vertex triangulated torus (all 21 edges; 14 triangles), embedded
    in R^3 with the classical toroidal-polyhedron coordinates."""
    verts = np.array(
        [
            [3.0, -3.0, 0.0],
            [-3.0, 3.0, 0.0],
            [-3.0, -3.0, 1.0],
            [3.0, 3.0, 1.0],
            [1.0, 2.0, 3.0],
            [-1.0, -2.0, 3.0],
            [0.0, 0.0, 15.0],
        ]
    )
    faces = [tuple(sorted(((i % 7), ((i + 1) % 7), ((i + 3) % 7)))) for i in range(7)]
    faces += [tuple(sorted(((i % 7), ((i + 2) % 7), ((i + 3) % 7)))) for i in range(7)]
    return StratifiedComplex.from_maximal_cells(verts, faces)


# ---------------------------------------------------------------------------
# PLSTRAT text format
# ---------------------------------------------------------------------------

def save_plstrat(K: StratifiedComplex, path) -> None:
    """Write the complex in the PLSTRAT format: header ``PLSTRAT n``, vertex
    count and coordinates, then one line per cell ``dim v0 v1 ... vdim``."""
    lines = [f"PLSTRAT {K.ambient_dim}", str(len(K.vertices))]
    for v in K.vertices:
        lines.append(" ".join(repr(float(x)) for x in v))
    cells = [c for c in K.all_cells()]
    lines.append(str(len(cells)))
    for c in cells:
        lines.append(" ".join(str(x) for x in (len(c) - 1, *c)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_plstrat(path) -> StratifiedComplex:
    with open(path) as fh:
        tokens = fh.read().split()
    it = iter(tokens)
    magic = next(it)
    if magic != "PLSTRAT":
        raise ValueError(f"not a PLSTRAT file (header {magic!r})")
    n = int(next(it))
    nv = int(next(it))
    verts = np.array([[float(next(it)) for _ in range(n)] for _ in range(nv)])
    nc = int(next(it))
    cells: dict[int, list] = {}
    for _ in range(nc):
        d = int(next(it))
        cell = tuple(int(next(it)) for _ in range(d + 1))
        cells.setdefault(d, []).append(cell)
    # constructor validates the face-closure invariant
    return StratifiedComplex(verts, cells)
