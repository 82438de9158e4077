import numpy as np
import pytest

from katflow.bootstrap import (
    PlanarPacking,
    _face_angle,
    bootstrap,
    hyperbolic_radii,
    lift_and_normalize,
    outer_vertex,
    tangency_pack,
)
from katflow.checks import edge_distances, is_proper, monitor_report, pairwise_inversive
from katflow.complex import random_triangulation, tetrahedron
from katflow.geometry import PlanarDisk, conical_cap, normalize_desitter, stereographic_lift


def test_octahedron_tangency(octa, octa_cfg):
    np.testing.assert_allclose(edge_distances(octa, octa_cfg), 1.0, atol=1e-10)
    assert monitor_report(octa, octa_cfg, mode="strict").passed()


def test_icosahedron_tangency(ico, ico_cfg):
    d = edge_distances(ico, ico_cfg)
    assert len(d) == 30
    np.testing.assert_allclose(d, 1.0, atol=1e-10)
    assert is_proper(ico_cfg)


def test_tetrahedron_bootstraps():
    t = tetrahedron()
    cfg = bootstrap(t)
    np.testing.assert_allclose(edge_distances(t, cfg), 1.0, atol=1e-10)


def test_face_angle_matches_euclidean_limit():
    # three equal tiny hyperbolic circles look Euclidean: angle pi/3
    x = np.exp(-1e-4)
    assert _face_angle(x, x, x) == pytest.approx(np.pi / 3, abs=1e-3)
    # a horocycle petal contributes nothing extra at a horocycle centre
    assert _face_angle(0.0, 0.5, 0.5) == 0.0


def test_hyperbolic_angle_sums(ico):
    outer = outer_vertex(ico)
    x = hyperbolic_radii(ico, outer)
    boundary = set(ico.neighbors[outer])
    for v in range(ico.n):
        if v == outer or v in boundary:
            assert x[v] == 0.0
            continue
        nb = ico.neighbors[v]
        s = sum(_face_angle(x[v], x[nb[k]], x[nb[(k + 1) % len(nb)]]) for k in range(len(nb)))
        assert s == pytest.approx(2 * np.pi, abs=1e-11)


def test_planar_packing_and_lift(ico):
    pp = tangency_pack(ico)
    assert isinstance(pp, PlanarPacking)
    planar = pp.edge_distances(ico)
    np.testing.assert_allclose(planar, 1.0, atol=1e-10)
    lifted = normalize_desitter(np.array([stereographic_lift(d) for d in pp.disks]))
    np.testing.assert_allclose(edge_distances(ico, lifted), planar, atol=1e-10)
    # non-adjacent disks are interior-disjoint
    g = pairwise_inversive(lifted)
    for i in range(ico.n):
        for j in range(i + 1, ico.n):
            if not ico.has_edge(i, j):
                assert g[i, j] > 1.0


def test_normalization_needed_for_large_outer_disk(octa):
    pp = tangency_pack(octa)
    # shrink the picture: the outer disk becomes the exterior of a circle of
    # radius 1/2, which lifts to more than a hemisphere
    half = tuple(
        PlanarDisk.circle(0.5 * d.x, 0.5 * d.y, 0.5 * d.r) if not d.is_line else d for d in pp.disks
    )
    raw = normalize_desitter(np.array([stereographic_lift(d) for d in half]))
    assert raw[pp.outer, 0] < 0 and not is_proper(raw)
    # its conical cap is the cap of the complementary disk
    np.testing.assert_array_equal(conical_cap(raw[pp.outer]).ray, -raw[pp.outer])
    fixed = lift_and_normalize(PlanarPacking(half, pp.outer))
    assert is_proper(fixed)
    assert monitor_report(octa, fixed, mode="strict").passed()


def test_deterministic(ico, ico_cfg):
    again = bootstrap(ico)
    assert np.array_equal(again, ico_cfg)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_triangulations(seed):
    rng = np.random.default_rng(seed)
    p = random_triangulation(int(rng.integers(8, 31)), rng)
    cfg = bootstrap(p)
    np.testing.assert_allclose(edge_distances(p, cfg), 1.0, atol=1e-10)
    assert monitor_report(p, cfg, mode="strict").passed()
