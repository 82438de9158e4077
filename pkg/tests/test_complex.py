import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import stellated_octahedron
from katflow import errors as E
from katflow.complex import (
    build_complex,
    edge_key,
    icosahedron,
    kat_conditions_check,
    octahedron,
    random_triangulation,
    strictly_shallow_check,
    tetrahedron,
    uniform_weights,
    validate_weights,
    weights_from_angles,
    zero_quadrilaterals,
)


def test_octahedron_counts(octa):
    assert (octa.n, octa.m, len(octa.faces)) == (6, 12, 8)
    assert not octa.is_tetrahedron


def test_icosahedron_counts(ico):
    assert (ico.n, ico.m, len(ico.faces)) == (12, 30, 20)
    assert all(len(nb) == 5 for nb in ico.neighbors)


def test_tetrahedron_flagged():
    t = tetrahedron()
    assert t.is_tetrahedron and t.n == 4


def test_edge_in_three_faces_rejected():
    faces = list(octahedron().faces) + [(0, 2, 1)]
    with pytest.raises(E.NotTriangulation):
        build_complex(faces)


def test_bad_orientation_rejected():
    faces = list(octahedron().faces)
    faces[0] = faces[0][::-1]
    with pytest.raises(E.BadOrientation):
        build_complex(faces)


@pytest.mark.parametrize("faces", [[], [(0, 1)], [(0, 1, 1)], [(0, 1, 2), (0, 2, 1)], [(0, 1, 3), (0, 3, 1)]])
def test_malformed_rejected(faces):
    with pytest.raises(E.NotTriangulation):
        build_complex(faces)


def test_three_connectivity_predicate():
    # every simplicial triangulation of the sphere is 3-connected, so the
    # predicate is exercised directly on a graph with a cut vertex
    from katflow.complex import TriangulatedPolyhedron, is_three_connected

    p = octahedron()
    assert is_three_connected(p)
    edges = ((0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4))  # two triangles sharing vertex 2
    nbrs = ((1, 2), (0, 2), (0, 1, 3, 4), (2, 4), (2, 3))
    fake = TriangulatedPolyhedron(n=5, faces=(), edges=edges, neighbors=nbrs)
    assert not is_three_connected(fake)


def test_neighbors_are_counterclockwise_cycles(ico):
    for v, ring in enumerate(ico.neighbors):
        for k in range(len(ring)):
            assert ico.is_face((v, ring[k], ring[(k + 1) % len(ring)]))


def test_face_order_independent(rng):
    p = icosahedron()
    for _ in range(5):
        faces = [tuple(np.roll(f, rng.integers(3))) for f in rng.permutation(np.array(p.faces))]
        q = build_complex(faces)
        assert (q.faces, q.edges, q.neighbors) == (p.faces, p.edges, p.neighbors)


@settings(max_examples=20, deadline=None)
@given(st.integers(5, 30), st.integers(0, 2**32 - 1))
def test_random_triangulations_valid(n, seed):
    p = random_triangulation(n, np.random.default_rng(seed))
    assert p.n == n and p.m == 3 * n - 6
    tri = set(p.triangles)
    assert all(tuple(sorted(f)) in tri for f in p.faces)
    assert kat_conditions_check(p, uniform_weights(p, 1.0)).ok


def test_all_ones_report_empty(octa, ico):
    for p in (octa, ico, tetrahedron(), stellated_octahedron()):
        assert kat_conditions_check(p, uniform_weights(p, 1.0)).ok


def test_nonfacial_triangle_violation():
    p = stellated_octahedron()
    assert (0, 2, 4) in p.triangles and not p.is_face((0, 2, 4))
    w = uniform_weights(p, 1.0)
    for e in ((0, 2), (2, 4), (0, 4)):
        w[e] = 0.0
    rep = kat_conditions_check(p, w)
    assert [c for c, _ in rep.triangles] == [(0, 2, 4)]
    assert rep.triangles[0][1] == pytest.approx(1.5 * np.pi)


def test_nonfacial_quadrilateral_violation(octa):
    # the equator 0-2-1-3 of the octahedron bounds no pair of faces
    w = uniform_weights(octa, 1.0)
    for e in ((0, 2), (1, 2), (1, 3), (0, 3)):
        w[e] = 0.0
    rep = kat_conditions_check(octa, w)
    assert (0, 2, 1, 3) in [c for c, _ in rep.quadrilaterals]
    assert not strictly_shallow_check(octa, w)


def test_strictly_shallow_examples(octa):
    assert strictly_shallow_check(octa, uniform_weights(octa, 0.5))
    w = uniform_weights(octa, 0.5)
    w[(0, 2)] = 0.0
    assert strictly_shallow_check(octa, w)
    # zero 4-cycle around two adjacent faces: KAT holds, strictly shallow fails
    for e in ((0, 2), (2, 4), (3, 4), (0, 3)):
        w[e] = 0.0
    assert kat_conditions_check(octa, w).ok
    assert zero_quadrilaterals(octa, w) == [(0, 2, 4, 3)]
    assert not strictly_shallow_check(octa, w)


def test_validate_weights(octa):
    w = uniform_weights(octa, 0.5)
    assert validate_weights(octa, {(j, i): v for (i, j), v in w.items()}) == w
    with pytest.raises(ValueError):
        validate_weights(octa, {**w, (0, 2): 1.5})
    with pytest.raises(ValueError):
        validate_weights(octa, {k: v for k, v in w.items() if k != (0, 2)})
    with pytest.raises(ValueError):
        validate_weights(octa, {**w, (0, 1): 0.5})


def test_weights_from_angles():
    w = weights_from_angles({(2, 1): 90.0, (0, 1): 60.0}, degrees=True)
    assert w[edge_key(1, 2)] == pytest.approx(0.0, abs=1e-15)
    assert w[(0, 1)] == pytest.approx(0.5)
