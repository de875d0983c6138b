import itertools
import math

import numpy as np
import pytest

from lkpolar.geomkit import RandomSource, sample_unit_sphere
from lkpolar.plstrata import (
    DegenerateDirectionError,
    StratifiedComplex,
    cube_boundary,
    euler_characteristic,
    load_plstrat,
    normal_link,
    normal_morse_index,
    normal_morse_index_many,
    octahedron_boundary,
    pl_morse_indices,
    save_plstrat,
    segment_complex,
    solid_cube,
    square_boundary,
    torus_7vertex,
)


def sample_generic(K, gen):
    while True:
        v = sample_unit_sphere(K.ambient_dim, gen)
        try:
            pl_morse_indices(K, v)
            return v
        except DegenerateDirectionError:
            continue


# ---------------------------------------------------------------------------
# independent oracle: chi of the closed sublevel {<v,y> <= -eta} of the link
# polyhedron, computed by geometric refinement (split cells at the hyperplane
# crossing and count cells of a genuine simplicial subdivision of the sublevel)
# ---------------------------------------------------------------------------

def sublevel_chi_by_refinement(link, v, eta):
    dirs = link.directions
    vals = dirs @ v
    cut_point = {}

    def point_on_edge(i, j):
        key = (min(i, j), max(i, j))
        if key not in cut_point:
            t = (-eta - vals[i]) / (vals[j] - vals[i])
            cut_point[key] = dirs[i] + t * (dirs[j] - dirs[i])
        return key

    verts = []  # (kind, id) -> index
    vid = {}

    def add_vertex(key):
        if key not in vid:
            vid[key] = len(verts)
            verts.append(key)
        return vid[key]

    simplices = set()

    def add_simplex(ids):
        simplices.add(tuple(sorted(ids)))

    for cell in link.link_cells:
        below = [i for i in cell if vals[i] <= -eta]
        above = [i for i in cell if vals[i] > -eta]
        if not below:
            continue
        if not above:
            ids = [add_vertex(("v", i)) for i in cell]
            for size in range(1, len(ids) + 1):
                for f in itertools.combinations(ids, size):
                    add_simplex(f)
            continue
        # partial cell: clip the simplex against the halfspace and triangulate.
        # polytope vertices: the below-vertices plus one crossing point per
        # below-above edge.
        poly = [("v", i) for i in below]
        poly += [("c", point_on_edge(i, j)) for i in below for j in above]
        ids = [add_vertex(p) for p in poly]
        if len(cell) == 2:  # edge clipped to a segment
            for size in range(1, len(ids) + 1):
                for f in itertools.combinations(ids, size):
                    add_simplex(f)
        elif len(cell) == 3:  # triangle clipped to triangle or quad
            if len(below) == 1:
                add_simplex(ids)
                for f in itertools.combinations(ids, 2):
                    add_simplex(f)
                for i in ids:
                    add_simplex((i,))
            else:  # quad: below pair b0 b1, crossings c0 (b0-a), c1 (b1-a)
                b0, b1 = [add_vertex(("v", i)) for i in below]
                a = above[0]
                c0 = add_vertex(("c", point_on_edge(below[0], a)))
                c1 = add_vertex(("c", point_on_edge(below[1], a)))
                for tri in [(b0, b1, c0), (b1, c0, c1)]:
                    add_simplex(tri)
                    for f in itertools.combinations(tri, 2):
                        add_simplex(f)
                for i in (b0, b1, c0, c1):
                    add_simplex((i,))
        else:
            raise NotImplementedError("oracle supports links of dimension <= 2")
    return sum((-1) ** (len(s) - 1) for s in simplices)


def test_normal_morse_index_matches_refinement_oracle():
    K = solid_cube()
    gen = RandomSource(101).generator()
    for cell_dim in (0, 1, 2):
        for cell in K.cells[cell_dim][:4]:
            link = normal_link(K, cell)
            if len(link.vertex_ids) == 0:
                continue
            span = K.cell_span(cell)
            for _ in range(25):
                v = sample_unit_sphere(3, gen)
                if span.size:  # make v normal to the cell
                    v = v - (v @ span.T) @ span
                    if np.linalg.norm(v) < 1e-6:
                        continue
                    v /= np.linalg.norm(v)
                vals = link.directions @ v
                if np.min(np.abs(vals)) < 1e-6:
                    continue
                eta = 0.5 * np.min(np.abs(vals))
                expected = 1 - sublevel_chi_by_refinement(link, v, eta)
                assert normal_morse_index(K, cell, v, link) == expected


# ---------------------------------------------------------------------------
# catalog and chi
# ---------------------------------------------------------------------------

def test_euler_characteristics():
    assert euler_characteristic(octahedron_boundary()) == 2
    assert euler_characteristic(torus_7vertex()) == 0
    assert euler_characteristic(cube_boundary()) == 2
    assert euler_characteristic(solid_cube()) == 1
    assert euler_characteristic(segment_complex()) == 1
    single = StratifiedComplex(np.zeros((1, 2)), {0: [(0,)]})
    assert euler_characteristic(single) == 1


def test_torus_is_a_triangulated_torus():
    K = torus_7vertex()
    assert len(K.cells[0]) == 7 and len(K.cells[1]) == 21 and len(K.cells[2]) == 14
    # every edge in exactly two triangles
    from collections import Counter

    cnt = Counter(f for t in K.cells[2] for f in itertools.combinations(t, 2))
    assert set(cnt.values()) == {2}


def _tri_tri_separated(p, q, eps=1e-9):
    axes = [np.cross(p[1] - p[0], p[2] - p[0]), np.cross(q[1] - q[0], q[2] - q[0])]
    for i in range(3):
        for j in range(3):
            axes.append(np.cross(p[(i + 1) % 3] - p[i], q[(j + 1) % 3] - q[j]))
    for ax in axes:
        n = np.linalg.norm(ax)
        if n < 1e-12:
            continue
        ax = ax / n
        a0, a1 = (p @ ax).min(), (p @ ax).max()
        b0, b1 = (q @ ax).min(), (q @ ax).max()
        if a1 < b0 - eps or b1 < a0 - eps:
            return True
    return False


def test_catalog_interiors_disjoint():
    # vertex-disjoint triangles of embedded catalog surfaces must not touch
    for K in (octahedron_boundary(), cube_boundary(), torus_7vertex()):
        for a, b in itertools.combinations(K.cells[2], 2):
            if set(a) & set(b):
                continue
            assert _tri_tri_separated(K.vertices[list(a)], K.vertices[list(b)])


# ---------------------------------------------------------------------------
# normal links
# ---------------------------------------------------------------------------

def test_normal_link_square_vertex():
    K = square_boundary()
    nl = normal_link(K, (0,))
    assert len(nl.vertex_ids) == 2
    chi = sum((-1) ** (len(c) - 1) for c in nl.link_cells)
    assert chi == 2
    norms = np.linalg.norm(nl.directions, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-10)


def test_normal_link_cube_edge_quarter_disk():
    K = solid_cube()
    vidx = {tuple(v): i for i, v in enumerate(K.vertices)}
    edge = tuple(sorted((vidx[(0.0, 0.0, 0.0)], vidx[(0.0, 0.0, 1.0)])))
    nl = normal_link(K, edge)
    # quarter-disk link: chi = 1, all directions orthogonal to the edge
    chi = sum((-1) ** (len(c) - 1) for c in nl.link_cells)
    assert chi == 1
    span = K.cell_span(edge)
    assert np.max(np.abs(nl.directions @ span.T)) < 1e-10


def test_normal_link_top_cell_empty():
    K = solid_cube()
    nl = normal_link(K, K.cells[3][0])
    assert len(nl.vertex_ids) == 0
    # empty link: the slice is empty, so the index is 1 for any direction
    assert normal_morse_index(K, K.cells[3][0], np.zeros(3), link=nl) == 1


def test_normal_link_missing_cell():
    K = square_boundary()
    with pytest.raises(KeyError):
        normal_link(K, (0, 2))


# ---------------------------------------------------------------------------
# normal Morse indices
# ---------------------------------------------------------------------------

def test_facet_indices_follow_downward_slice_convention():
    # slice at level v* - delta: empty for v pointing into the body (index 1),
    # a disk for v pointing out of it (index 0)
    K = solid_cube()
    facet = next(t for t in K.cells[2] if np.allclose(K.vertices[list(t)][:, 2], 0.0))
    inward = np.array([0.0, 0.0, 1.0])
    assert normal_morse_index(K, facet, inward) == 1
    assert normal_morse_index(K, facet, -inward) == 0


def test_interior_cells_have_zero_mean_index():
    K = solid_cube()
    interior_tris = [
        t for t in K.cells[2] if not any(
            np.allclose(K.vertices[list(t)][:, ax], c) for ax in range(3) for c in (0.0, 1.0)
        )
    ]
    assert interior_tris
    gen = RandomSource(17).generator()
    for t in interior_tris:
        link = normal_link(K, t)
        span = K.cell_span(t)
        normal = np.cross(span[0], span[1])
        # both sides see a disk slice: index 0 each
        assert normal_morse_index(K, t, normal, link) == 0
        assert normal_morse_index(K, t, -normal, link) == 0


def test_degenerate_direction_raises():
    K = solid_cube()
    facet = next(t for t in K.cells[2] if np.allclose(K.vertices[list(t)][:, 2], 0.0))
    # the facet's only link direction is +z, so a vector orthogonal to it is a wall
    with pytest.raises(ValueError):
        normal_morse_index(K, facet, np.array([1.0, 0.0, 0.0]))


def test_index_depends_only_on_sign_pattern():
    K = solid_cube()
    vidx = {tuple(v): i for i, v in enumerate(K.vertices)}
    edge = tuple(sorted((vidx[(0.0, 0.0, 0.0)], vidx[(0.0, 0.0, 1.0)])))
    link = normal_link(K, edge)
    gen = RandomSource(23).generator()
    for _ in range(50):
        v = sample_unit_sphere(3, gen)
        v[2] = 0.0
        n = np.linalg.norm(v)
        if n < 1e-6:
            continue
        v /= n
        vals = link.directions @ v
        if np.min(np.abs(vals)) < 1e-3:
            continue
        base = normal_morse_index(K, edge, v, link)
        # perturb without crossing any wall
        for _ in range(5):
            dv = 1e-4 * sample_unit_sphere(3, gen)
            w = v + dv - np.array([0.0, 0.0, (v + dv)[2]])
            w /= np.linalg.norm(w)
            if np.min(np.abs(link.directions @ w)) < 1e-6:
                continue
            assert normal_morse_index(K, edge, w, link) == base


def test_normal_morse_index_many_matches_scalar():
    K = solid_cube()
    vidx = {tuple(v): i for i, v in enumerate(K.vertices)}
    edge = tuple(sorted((vidx[(0.0, 0.0, 0.0)], vidx[(0.0, 0.0, 1.0)])))
    link = normal_link(K, edge)
    gen = RandomSource(29).generator()
    th = gen.uniform(0, 2 * math.pi, 64)
    vs = np.stack([np.cos(th), np.sin(th), np.zeros(64)], axis=1)
    many, valid = normal_morse_index_many(K, edge, vs, link)
    for v, idx, ok in zip(vs, many, valid):
        if not ok:
            continue
        assert normal_morse_index(K, edge, v, link) == idx


# ---------------------------------------------------------------------------
# PL Morse indices of height functions
# ---------------------------------------------------------------------------

def test_octahedron_height_indices_sum_to_two():
    K = octahedron_boundary()
    v = np.array([0.0, 0.0, 1.0]) + np.array([1e-4, 2e-4, 0.0])
    v /= np.linalg.norm(v)
    idx = pl_morse_indices(K, v)
    assert sum(idx.values()) == 2


def test_torus_50_directions_sum_zero():
    K = torus_7vertex()
    gen = RandomSource(31).generator()
    for _ in range(50):
        v = sample_generic(K, gen)
        assert sum(pl_morse_indices(K, v).values()) == 0


def test_segment_endpoint_indices():
    K = segment_complex()
    v = np.array([1.0, 0.0])
    idx = pl_morse_indices(K, v)
    # lower endpoint is a min (index 1), upper endpoint sees the whole link below
    assert idx[0] == 1 and idx[1] == 0
    assert sum(idx.values()) == 1


def test_morse_sum_equals_chi_100_directions():
    gen = RandomSource(37).generator()
    for K in (octahedron_boundary(), torus_7vertex(), cube_boundary(), solid_cube()):
        chi = euler_characteristic(K)
        for _ in range(100):
            v = sample_generic(K, gen)
            assert sum(pl_morse_indices(K, v).values()) == chi


def test_nongeneric_height_raises():
    K = square_boundary()
    with pytest.raises(DegenerateDirectionError):
        pl_morse_indices(K, np.array([1.0, 0.0]))


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def test_plstrat_roundtrip(tmp_path):
    K = solid_cube()
    path = tmp_path / "cube.plstrat"
    save_plstrat(K, path)
    K2 = load_plstrat(path)
    assert np.array_equal(K.vertices, K2.vertices)
    assert K.cells == K2.cells


def test_plstrat_rejects_unclosed(tmp_path):
    path = tmp_path / "bad.plstrat"
    path.write_text("PLSTRAT 2\n2\n0.0 0.0\n1.0 0.0\n1\n1 0 1\n")
    with pytest.raises(ValueError):
        load_plstrat(path)


def test_validation_rejects_degenerate_simplex():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(ValueError):
        StratifiedComplex.from_maximal_cells(verts, [(0, 1, 2)])
