"""Tangency packings used as the starting point of the flow.

The highest-degree vertex becomes the exterior of the unit disk.  The rest of
the complex is packed as a maximal packing of the hyperbolic plane (Poincare
disk): boundary vertices are horocycles and interior radii are found by the
angle-sum iteration.  The layout is carried out directly in de Sitter
coordinates, where every tangency is a linear condition, and the result is
dropped to the plane.  :func:`lift_and_normalize` takes it back to the sphere
and boosts it until every disk is smaller than a hemisphere.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar, root

from .checks import monitor_report
from .complex import TriangulatedPolyhedron, edge_key
from .errors import NonConvergent, NormalizationFailed
from .geometry import (
    PlanarDisk,
    boost,
    inversive_distance_planar,
    lorentz_inner,
    lorentz_to_standard,
    normalize_desitter,
    orthodisk_vector,
    stereographic_drop,
    stereographic_lift,
)

TOL_TANGENCY = 1e-10
TOL_ANGLE_SUM = 1e-12
MAX_SWEEPS = 100_000


@dataclass(frozen=True)
class PlanarPacking:
    """Planar tangency packing; ``disks[outer]`` is the exterior of the unit circle."""

    disks: tuple
    outer: int

    def edge_distances(self, p: TriangulatedPolyhedron) -> np.ndarray:
        return np.array([inversive_distance_planar(self.disks[i], self.disks[j]) for i, j in p.edges])


def outer_vertex(p: TriangulatedPolyhedron) -> int:
    """Highest-degree vertex, lowest index on ties."""
    deg = [len(nb) for nb in p.neighbors]
    return int(np.argmax(deg))


def _face_angle(xv, xu, xw):
    """Angle at ``v`` of the hyperbolic triangle formed by three mutually
    tangent circles with ``x = exp(-radius)`` (``x = 0`` for horocycles)."""
    num = xv * xv * (1.0 - xu * xu) * (1.0 - xw * xw)
    den = (1.0 - xv * xv * xu * xu) * (1.0 - xv * xv * xw * xw)
    return 2.0 * np.arcsin(np.sqrt(np.clip(num / den, 0.0, 1.0)))


def hyperbolic_radii(p: TriangulatedPolyhedron, outer: int):
    """Radii parameters ``x = exp(-h)`` of the maximal packing of ``p - outer``.

    Returns an array with ``x = 0`` on the outer vertex and its neighbors.
    """
    boundary = set(p.neighbors[outer])
    interior = [v for v in range(p.n) if v != outer and v not in boundary]
    x = np.zeros(p.n)
    if not interior:
        return x
    # flowers of interior vertices as (u, w) pairs of consecutive petals
    petals = {v: [(nb[k], nb[(k + 1) % len(nb)]) for k in range(len(nb))] for v, nb in ((v, p.neighbors[v]) for v in interior)}

    def angle_sum(v, xv, xs):
        return sum(_face_angle(xv, xs[u], xs[w]) for u, w in petals[v])

    x[interior] = 0.5
    for _ in range(MAX_SWEEPS):
        for v in interior:
            x[v] = brentq(lambda t: angle_sum(v, t, x) - 2.0 * np.pi, 1e-300, 1.0 - 1e-16, xtol=1e-15, rtol=1e-15)
        err = max(abs(angle_sum(v, x[v], x) - 2.0 * np.pi) for v in interior)
        if err < 1e-9:
            break
    else:
        raise NonConvergent("radius iteration did not converge")

    # Newton polish in log radii
    idx = np.array(interior)

    def resid(h):
        xs = x.copy()
        xs[idx] = np.exp(-h)
        return np.array([angle_sum(v, xs[v], xs) - 2.0 * np.pi for v in interior])

    sol = root(resid, -np.log(x[idx]), method="hybr", options={"xtol": 1e-15})
    h = sol.x
    if np.max(np.abs(resid(h))) < np.max(np.abs(resid(-np.log(x[idx])))):
        x[idx] = np.exp(-h)
    err = float(np.max(np.abs(resid(-np.log(x[idx])))))
    if err > TOL_ANGLE_SUM * 10:
        raise NonConvergent(f"angle-sum error {err:.3e} after polishing")
    return x


def _realize_gram(gram):
    """Rows of 4-vectors with the given Lorentz Gram matrix (signature (1, 3))."""
    lam, q = np.linalg.eigh(gram)
    order = np.argsort(-lam)
    lam, q = lam[order], q[:, order]
    if not (lam[0] > 0 and np.all(lam[1:] < 0)):
        raise NonConvergent("first face Gram matrix has the wrong signature")
    return q * np.sqrt(np.abs(lam))


def _desitter_layout(p: TriangulatedPolyhedron, outer: int, x: np.ndarray) -> np.ndarray:
    kappa = (1.0 + x * x) / (1.0 - x * x)  # <D_v, D_outer>: coth of the hyperbolic radius
    cfg = np.full((p.n, 4), np.nan)
    inner_faces = [f for f in p.faces if outer not in f]
    f0 = inner_faces[0]
    verts = [outer, *f0]
    gram = np.ones((4, 4))
    np.fill_diagonal(gram, -1.0)
    for a in range(1, 4):
        gram[0, a] = gram[a, 0] = kappa[verts[a]]
    rows = _realize_gram(gram)
    rows = rows @ lorentz_to_standard(rows[0]).T
    if rows[1, 0] < 0:
        rows[:, 0] *= -1.0  # time orientation: disks inside the unit circle have a > 0
    cfg[verts] = rows
    cfg[outer] = [0.0, 0.0, 0.0, 1.0]
    d_out = cfg[outer]

    def sigma(u, v, w):
        return np.linalg.det(np.array([d_out, cfg[u], cfg[v], cfg[w]]))

    s0 = np.sign(sigma(*f0))
    done = {f0}
    queue = deque([f0])
    by_edge = {}
    for f in inner_faces:
        for k in range(3):
            by_edge[(f[k], f[(k + 1) % 3])] = f
    while queue:
        f = queue.popleft()
        for k in range(3):
            u, v = f[k], f[(k + 1) % 3]
            g = by_edge.get((v, u))
            if g is None or g in done:
                continue
            done.add(g)
            queue.append(g)
            w = next(t for t in g if t not in (u, v))
            if not np.isnan(cfg[w, 0]):
                continue
            basis = np.array([cfg[u], cfg[v], d_out])
            m = np.array([[lorentz_inner(a, b) for b in basis] for a in basis])
            beta = np.linalg.solve(m, [1.0, 1.0, kappa[w]])
            pt = beta @ basis
            nrm = orthodisk_vector(cfg[u], cfg[v], d_out)
            t2 = (-1.0 - lorentz_inner(pt, pt)) / lorentz_inner(nrm, nrm)
            t = np.sqrt(max(t2, 0.0))
            rot = g[g.index(v):] + g[: g.index(v)]  # oriented as (v, u, w)
            for cand in (pt + t * nrm, pt - t * nrm):
                cfg[w] = cand
                if np.sign(sigma(*rot)) == s0:
                    break
    if np.any(np.isnan(cfg)):
        raise NonConvergent("layout did not reach every vertex")
    # mirror so that faces appear counterclockwise from outside
    c = cfg[:, 1:] / np.linalg.norm(cfg[:, 1:], axis=1)[:, None]
    f = np.array(p.faces)
    det = np.einsum("ij,ij->i", c[f[:, 0]], np.cross(c[f[:, 1]], c[f[:, 2]]))
    if np.sum(np.sign(det)) < 0:
        cfg[:, 2] *= -1.0
    return cfg


def tangency_pack(p: TriangulatedPolyhedron, outer=None) -> PlanarPacking:
    """Planar tangency packing with the combinatorics of ``p``.

    Raises
    ------
    NonConvergent
        If the radius iteration or the layout fails to reach tangency.
    """
    outer = outer_vertex(p) if outer is None else int(outer)
    x = hyperbolic_radii(p, outer)
    cfg = _desitter_layout(p, outer, x)
    disks = tuple(stereographic_drop(d) for d in cfg)
    pp = PlanarPacking(disks, outer)
    err = np.max(np.abs(pp.edge_distances(p) - 1.0))
    if err > TOL_TANGENCY:
        raise NonConvergent(f"tangency error {err:.3e} after layout")
    return pp


def _size_score(cfg):
    """Smallest ``min(rho, pi - rho)``; written out because extreme trial boosts
    make disks too small for the classifier used by :func:`min_radius`."""
    rho = np.arccos(np.clip(cfg[:, 0] / np.linalg.norm(cfg[:, 1:], axis=1), -1.0, 1.0))
    return float(np.min(np.minimum(rho, np.pi - rho)))


def lift_and_normalize(pp: PlanarPacking, max_sweeps=50) -> np.ndarray:
    """Lift to the sphere and boost until every disk is smaller than a hemisphere.

    The boost maximizes the smallest disk size ``min(rho, pi - rho)``: coordinate
    boosts are applied in turn, each chosen by a bounded line search, with a
    simplex polish over all three rapidities at the end.  (Minimizing the
    largest radius instead is degenerate, as boosting towards a point of an
    interstice shrinks every disk.)

    Raises
    ------
    NormalizationFailed
        If some disk is still at least a hemisphere after the search.
    """
    cfg = normalize_desitter(np.array([stereographic_lift(d) for d in pp.disks]))
    best = _size_score(cfg)
    for _ in range(max_sweeps):
        start = best
        for axis in np.eye(3):
            res = minimize_scalar(
                lambda phi: -_size_score(cfg @ boost(axis, phi).T),
                bounds=(-4.0, 4.0),
                method="bounded",
                options={"xatol": 1e-12},
            )
            if -res.fun > best:
                cfg = cfg @ boost(axis, res.x).T
                best = -float(res.fun)
        if best - start < 1e-12:
            break

    def total(v):
        r = np.linalg.norm(v)
        return -_size_score(cfg @ boost(v, r).T) if r > 0 else -_size_score(cfg)

    res = minimize(total, np.zeros(3), method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    if -res.fun > best and np.linalg.norm(res.x) > 0:
        cfg = cfg @ boost(res.x, np.linalg.norm(res.x)).T
    cfg = normalize_desitter(cfg)
    if not np.all(cfg[:, 0] > 0):
        raise NormalizationFailed("could not make every disk smaller than a hemisphere")
    return cfg


def bootstrap(p: TriangulatedPolyhedron, check=True) -> np.ndarray:
    """Strictly proper tangency configuration of ``p`` on the sphere."""
    cfg = lift_and_normalize(tangency_pack(p))
    if check:
        rep = monitor_report(p, cfg, mode="strict", tol_inv=1e-9)
        if not rep.passed(strict=True):
            raise NonConvergent(f"bootstrap packing fails monitor {rep.first_failure()}")
    return cfg


def planar_tangency_errors(p: TriangulatedPolyhedron, pp: PlanarPacking) -> dict:
    d = pp.edge_distances(p)
    return {e: float(d[k] - 1.0) for k, e in enumerate(p.edges)}


__all__ = ["PlanarPacking", "bootstrap", "edge_key", "hyperbolic_radii", "lift_and_normalize", "outer_vertex", "tangency_pack"]
