"""Rigidity matrices of circle polyhedra and the flow velocity solve.

The measurement map sends a configuration (4n coordinates, disk ``v`` owning
columns ``4v .. 4v+3``) to the edge inner products ``<D_i, D_j>`` followed by
the halved vertex norms ``<D_i, D_i>/2``.  Its Jacobian ``J`` has 4n - 6 rows
and, at strictly convex configurations, rank 4n - 6; the six-dimensional
kernel consists of the infinitesimal Lorentz motions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .complex import TriangulatedPolyhedron, edge_key
from .errors import IllConditioned, SingularAtPin, TooSmall
from .geometry import lorentz_generators

TOL_RANK = 1e-8
COND_MAX = 1e10
COORDS = "abcd"
_FLIP = np.array([1.0, -1.0, -1.0, -1.0])


def measurement(p: TriangulatedPolyhedron, cfg) -> np.ndarray:
    cfg = np.asarray(cfg, dtype=float)
    e = np.array(p.edges)
    g = cfg * _FLIP
    fe = np.einsum("ij,ij->i", cfg[e[:, 0]], g[e[:, 1]])
    fv = 0.5 * np.einsum("ij,ij->i", cfg, g)
    return np.concatenate([fe, fv])


@dataclass
class RigidityMatrix:
    """``J`` with labels: rows ``('edge', (i, j))`` then ``('vertex', i)``,
    columns ``(v, coordinate letter)``."""

    matrix: np.ndarray
    p: TriangulatedPolyhedron

    @property
    def row_labels(self):
        return [("edge", e) for e in self.p.edges] + [("vertex", v) for v in range(self.p.n)]

    @property
    def col_labels(self):
        return [(v, c) for v in range(self.p.n) for c in COORDS]

    def edge_row(self, i, j) -> int:
        return self.p.edge_index[edge_key(i, j)]

    def vertex_row(self, v) -> int:
        return self.p.m + v

    def dump(self) -> str:
        """Plain-text listing of the nonzero entries with row/column labels."""
        rows, cols = self.row_labels, self.col_labels
        out = [f"# rigidity matrix {self.matrix.shape[0]}x{self.matrix.shape[1]}"]
        for r, c in zip(*np.nonzero(self.matrix)):
            kind, idx = rows[r]
            out.append(f"{kind} {idx}\t{cols[c][0]}{cols[c][1]}\t{self.matrix[r, c]!r}")
        return "\n".join(out) + "\n"


def assemble_rigidity(p: TriangulatedPolyhedron, cfg) -> RigidityMatrix:
    cfg = np.asarray(cfg, dtype=float)
    n, m = p.n, p.m
    jac = np.zeros((m + n, 4 * n))
    g = cfg * _FLIP
    for r, (i, j) in enumerate(p.edges):
        jac[r, 4 * i : 4 * i + 4] = g[j]
        jac[r, 4 * j : 4 * j + 4] = g[i]
    for v in range(n):
        jac[m + v, 4 * v : 4 * v + 4] = g[v]
    return RigidityMatrix(jac, p)


def numeric_rank(mat, tol_rank=TOL_RANK) -> int:
    """Number of singular values above ``tol_rank * sigma_max``."""
    mat = np.asarray(getattr(mat, "matrix", mat), dtype=float)
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol_rank * s[0]))


def lorentz_motions(cfg) -> np.ndarray:
    """The six infinitesimal Lorentz motions of ``cfg`` as rows of length 4n."""
    cfg = np.asarray(cfg, dtype=float)
    return np.array([(cfg @ g.T).ravel() for g in lorentz_generators()])


def residual_motion(cfg, i, j) -> np.ndarray:
    """Infinitesimal Lorentz motion fixing disks ``i`` and ``j`` (unit length in
    generator coefficients), as an ``(n, 4)`` velocity field."""
    cfg = np.asarray(cfg, dtype=float)
    gens = lorentz_generators()
    a = np.vstack([np.array([g @ cfg[i] for g in gens]).T, np.array([g @ cfg[j] for g in gens]).T])
    coeff = np.linalg.svd(a)[2][-1]
    x = np.tensordot(coeff, gens, axes=1)
    return cfg @ x.T


@dataclass
class SquareMatrix:
    matrix: np.ndarray
    face: tuple
    removed_cols: tuple
    pin_column: int  # spatial coordinate (1, 2, 3) of D_k removed


def _pinned_cols(face, col):
    i, j, k = face
    return (4 * i + 1, 4 * i + 2, 4 * i + 3, 4 * j + 1, 4 * j + 2, 4 * k + col)


def square_matrix(J: RigidityMatrix, pinned_face, cfg, column=None, tol_rank=TOL_RANK) -> SquareMatrix:
    """Remove the ``b, c, d`` columns of ``D_i``, the ``b, c`` columns of
    ``D_j`` and one spatial column of ``D_k``.

    The ``D_k`` column is the one along which the Lorentz motion fixing
    ``D_i`` and ``D_j`` moves fastest, falling back to the others if the
    result is numerically singular.  ``column`` forces a choice (1, 2 or 3).

    Raises
    ------
    SingularAtPin
        If no admissible column gives a full-rank matrix.
    """
    i, j, k = pinned_face
    if column is not None:
        order = [int(column)]
    else:
        vel = residual_motion(cfg, i, j)[k, 1:]
        order = [int(c) + 1 for c in np.argsort(-np.abs(vel), kind="stable")]
    mat = J.matrix
    size = mat.shape[1] - 6
    for col in order:
        removed = _pinned_cols(pinned_face, col)
        keep = np.setdiff1d(np.arange(mat.shape[1]), removed)
        sq = mat[:, keep]
        if sq.shape[0] == size and numeric_rank(sq, tol_rank) == size:
            return SquareMatrix(sq, tuple(pinned_face), removed, col)
    raise SingularAtPin(f"no spatial column of disk {k} gives a nonsingular pin at face {tuple(pinned_face)}")


@dataclass
class UnmarkedSystem:
    """Row/column bookkeeping of the unmarked rigidity matrix for a pinned face."""

    p: TriangulatedPolyhedron
    face: tuple
    rows: np.ndarray  # indices into J rows
    cols: np.ndarray  # indices into J columns
    free: np.ndarray  # unpinned vertices, ascending

    def row_of_edge(self, e) -> int:
        r = self.p.edge_index[edge_key(*e)]
        pos = np.searchsorted(self.rows, r)
        if pos >= len(self.rows) or self.rows[pos] != r:
            raise ValueError(f"edge {e} belongs to the pinned face")
        return int(pos)


def unmarked_system(p: TriangulatedPolyhedron, pinned_face) -> UnmarkedSystem:
    if p.n <= 4:
        raise TooSmall("the unmarked matrix needs at least five vertices")
    i, j, k = pinned_face
    if not p.is_face(pinned_face):
        raise ValueError(f"{tuple(pinned_face)} is not a face")
    pinned = {i, j, k}
    drop_rows = {p.edge_index[edge_key(i, j)], p.edge_index[edge_key(j, k)], p.edge_index[edge_key(k, i)]}
    drop_rows |= {p.m + v for v in pinned}
    rows = np.array([r for r in range(p.m + p.n) if r not in drop_rows])
    free = np.array([v for v in range(p.n) if v not in pinned])
    cols = (4 * free[:, None] + np.arange(4)).ravel()
    return UnmarkedSystem(p, (i, j, k), rows, cols, free)


def unmarked_matrix(J: RigidityMatrix, pinned_face, cfg=None) -> np.ndarray:
    """Drop the rows of the pinned face's edges and vertices and all twelve
    columns of its disks, leaving a ``(4n - 12)`` square matrix."""
    sys_ = unmarked_system(J.p, pinned_face)
    return J.matrix[np.ix_(sys_.rows, sys_.cols)]


def flow_velocity(Ju, free_row, cond_max=COND_MAX) -> np.ndarray:
    """Solve ``J_u x = v_e`` where ``v_e`` is ``-1`` at ``free_row``.

    ``free_row`` is the row index of the free edge inside ``J_u`` (see
    :meth:`UnmarkedSystem.row_of_edge`).

    Raises
    ------
    IllConditioned
        If the condition number of ``J_u`` exceeds ``cond_max``.
    """
    Ju = np.asarray(Ju, dtype=float)
    cond = np.linalg.cond(Ju)
    if not np.isfinite(cond) or cond > cond_max:
        raise IllConditioned(f"unmarked rigidity matrix has condition number {cond:.3e}")
    rhs = np.zeros(Ju.shape[0])
    rhs[free_row] = -1.0
    return sla.lu_solve(sla.lu_factor(Ju), rhs)


def configuration_velocity(p: TriangulatedPolyhedron, cfg, pinned_face, edge, cond_max=COND_MAX) -> np.ndarray:
    """Flow velocity of every disk as an ``(n, 4)`` array (zero on pinned disks)."""
    sys_ = unmarked_system(p, pinned_face)
    J = assemble_rigidity(p, cfg)
    x = flow_velocity(J.matrix[np.ix_(sys_.rows, sys_.cols)], sys_.row_of_edge(edge), cond_max)
    vel = np.zeros((p.n, 4))
    vel[sys_.free] = x.reshape(-1, 4)
    return vel
