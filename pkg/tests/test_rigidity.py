import numpy as np
import pytest

from conftest import regular_octahedron_cfg
from katflow import errors as E
from katflow.bootstrap import bootstrap
from katflow.checks import edge_distances
from katflow.complex import random_triangulation, tetrahedron
from katflow.geometry import lorentz_generators
from katflow.rigidity import (
    assemble_rigidity,
    configuration_velocity,
    flow_velocity,
    lorentz_motions,
    measurement,
    numeric_rank,
    square_matrix,
    unmarked_matrix,
    unmarked_system,
)


def fd_jacobian_check(p, cfg, rng, k=20, h=1e-6):
    J = assemble_rigidity(p, cfg).matrix
    worst = 0.0
    for _ in range(k):
        v = rng.normal(size=cfg.size)
        v /= np.linalg.norm(v)
        fd = (measurement(p, cfg + h * v.reshape(-1, 4)) - measurement(p, cfg - h * v.reshape(-1, 4))) / (2 * h)
        worst = max(worst, np.linalg.norm(fd - J @ v) / np.linalg.norm(J @ v))
    return worst


def test_row_structure(octa, octa_cfg):
    J = assemble_rigidity(octa, octa_cfg)
    g = octa_cfg * [1, -1, -1, -1]
    for i, j in octa.edges:
        row = J.matrix[J.edge_row(i, j)]
        np.testing.assert_array_equal(row[4 * i : 4 * i + 4], g[j])
        np.testing.assert_array_equal(row[4 * j : 4 * j + 4], g[i])
        assert np.count_nonzero(row) <= 8
    for v in range(octa.n):
        row = J.matrix[J.vertex_row(v)]
        np.testing.assert_array_equal(row[4 * v : 4 * v + 4], g[v])
        assert np.count_nonzero(row) <= 4
    assert J.row_labels[0] == ("edge", octa.edges[0]) and J.col_labels[5] == (1, "b")


def test_measurement_values(octa, octa_cfg):
    f = measurement(octa, octa_cfg)
    np.testing.assert_allclose(f[: octa.m], edge_distances(octa, octa_cfg))
    np.testing.assert_allclose(f[octa.m :], -0.5, atol=1e-12)


def test_rotation_generator_in_kernel(octa, octa_cfg):
    J = assemble_rigidity(octa, octa_cfg).matrix
    for g in lorentz_generators():
        assert np.abs(J @ (octa_cfg @ g.T).ravel()).max() < 1e-10


def test_finite_differences(octa, octa_cfg, rng):
    assert fd_jacobian_check(octa, octa_cfg, rng) < 1e-5


@pytest.mark.parametrize("name, expected", [("octa", 18), ("ico", 42)])
def test_rank(name, expected, request):
    p = request.getfixturevalue(name)
    cfg = request.getfixturevalue(name + "_cfg")
    assert numeric_rank(assemble_rigidity(p, cfg)) == expected


def test_rank_zero_matrix():
    assert numeric_rank(np.zeros((5, 5))) == 0
    assert numeric_rank(np.zeros((0, 3))) == 0


def test_kernel_is_lorentz(ico, ico_cfg):
    J = assemble_rigidity(ico, ico_cfg).matrix
    kernel = np.linalg.svd(J)[2][-6:]  # right singular vectors of the 6 smallest
    motions = lorentz_motions(ico_cfg)
    q, _ = np.linalg.qr(motions.T)
    resid = kernel.T - q @ (q.T @ kernel.T)
    assert np.abs(resid).max() < 1e-8


def test_square_matrix_any_face(octa, octa_cfg):
    J = assemble_rigidity(octa, octa_cfg)
    for f in octa.faces:
        sq = square_matrix(J, f, octa_cfg)
        assert sq.matrix.shape == (18, 18)
        assert numeric_rank(sq.matrix) == 18
        keep = [c for c in range(24) if c not in sq.removed_cols]
        np.testing.assert_array_equal(sq.matrix, J.matrix[:, keep])


def test_square_matrix_symmetric_pin_is_singular(octa):
    # on the mirror-symmetric packing the motions fixing the pinned
    # coordinates of D_0, D_2 form a 2-dimensional family, so every choice of
    # spatial column of D_4 leaves a singular square matrix
    cfg = regular_octahedron_cfg()
    J = assemble_rigidity(octa, cfg)
    assert numeric_rank(J) == 18
    for col in (None, 1, 2, 3):
        with pytest.raises(E.SingularAtPin):
            square_matrix(J, (0, 2, 4), cfg, column=col)
    # the unmarked matrix does not suffer from this
    assert np.linalg.cond(unmarked_matrix(J, (0, 2, 4))) < 10


def test_square_matrix_tetrahedron():
    t = tetrahedron()
    cfg = bootstrap(t)
    sq = square_matrix(assemble_rigidity(t, cfg), t.faces[0], cfg)
    assert sq.matrix.shape == (10, 10)


def test_unmarked_shapes(octa, octa_cfg, ico, ico_cfg):
    Jo = assemble_rigidity(octa, octa_cfg)
    for f in octa.faces:
        ju = unmarked_matrix(Jo, f)
        assert ju.shape == (12, 12) and np.isfinite(np.linalg.cond(ju)) and abs(np.linalg.det(ju)) > 1e-8
    Ji = assemble_rigidity(ico, ico_cfg)
    for f in ico.faces:
        ju = unmarked_matrix(Ji, f)
        assert ju.shape == (36, 36) and numeric_rank(ju) == 36
    sys_ = unmarked_system(octa, octa.faces[0])
    np.testing.assert_array_equal(unmarked_matrix(Jo, octa.faces[0]), Jo.matrix[np.ix_(sys_.rows, sys_.cols)])
    with pytest.raises(E.TooSmall):
        unmarked_system(tetrahedron(), tetrahedron().faces[0])
    with pytest.raises(ValueError):
        sys_.row_of_edge(octa.faces[0][:2])


def test_velocity_slope_and_drift(octa, octa_cfg):
    face = (0, 3, 5)
    for e in octa.edges:
        if set(e) <= set(face):
            continue
        vel = configuration_velocity(octa, octa_cfg, face, e)
        k = octa.edge_index[e]
        h = 1e-6
        slope = (edge_distances(octa, octa_cfg + h * vel)[k] - edge_distances(octa, octa_cfg - h * vel)[k]) / (2 * h)
        assert slope == pytest.approx(-1.0, abs=1e-6)
        assert np.all(vel[list(face)] == 0)
        # explicit Euler step: every other edge moves only to second order
        step = octa_cfg + 1e-4 * vel
        delta = edge_distances(octa, step) - edge_distances(octa, octa_cfg)
        delta[k] = 0.0
        assert np.abs(delta).max() < 1e-7


def test_velocity_residual(ico, ico_cfg):
    J = assemble_rigidity(ico, ico_cfg)
    face = ico.faces[0]
    sys_ = unmarked_system(ico, face)
    ju = unmarked_matrix(J, face)
    e = next(e for e in ico.edges if not set(e) <= set(face))
    r = sys_.row_of_edge(e)
    x = flow_velocity(ju, r)
    rhs = np.zeros(len(x))
    rhs[r] = -1.0
    assert np.linalg.norm(ju @ x - rhs) < 1e-10


def test_singular_unmarked_rejected():
    ju = np.eye(6)
    ju[5] = ju[4]
    with pytest.raises(E.IllConditioned):
        flow_velocity(ju, 0)


def test_random_triangulation_rank():
    rng = np.random.default_rng(4)
    p = random_triangulation(15, rng)
    cfg = bootstrap(p)
    assert numeric_rank(assemble_rigidity(p, cfg)) == 4 * p.n - 6
    assert fd_jacobian_check(p, cfg, rng, k=10) < 1e-5


def test_dump(octa, octa_cfg):
    J = assemble_rigidity(octa, octa_cfg)
    text = J.dump()
    assert text.startswith("# rigidity matrix 18x24")
    assert len(text.strip().splitlines()) == 1 + np.count_nonzero(J.matrix)
