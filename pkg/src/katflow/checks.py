"""Geometric predicates over configurations: geodesy, convexity, shallowness
and disk size.  These double as the runtime monitors of the flow.

A configuration is an ``(n, 4)`` array of de Sitter normalized real disks,
row ``v`` realizing vertex ``v`` of a :class:`TriangulatedPolyhedron`.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .complex import TriangulatedPolyhedron, edge_key
from .errors import AntipodalEdge, NotRealDisk
from .geometry import (
    TOL_DET,
    TOL_INV,
    TOL_NORM,
    disk_centers,
    lorentz_inner,
    minkowski_norm2,
    normalize_desitter,
    orthodisk_vector,
    spherical_center_radius,
)

TOL_ARC = 1e-10
TOL_ANTIPODAL = 1e-12


def as_configuration(cfg, n=None, tol=1e-9) -> np.ndarray:
    """Validate and return a float ``(n, 4)`` array of real normalized disks."""
    cfg = np.array(cfg, dtype=float)
    if cfg.ndim != 2 or cfg.shape[1] != 4 or (n is not None and cfg.shape[0] != n):
        raise ValueError(f"configuration must have shape ({n if n is not None else 'n'}, 4)")
    if not np.all(np.isfinite(cfg)):
        raise ValueError("configuration has non-finite entries")
    if np.any(minkowski_norm2(cfg) <= 0):
        raise NotRealDisk("configuration contains a point or imaginary disk")
    err = np.abs(lorentz_inner(cfg, cfg) + 1.0)
    if np.any(err > tol):
        v = int(np.argmax(err))
        raise ValueError(f"disk {v} is not normalized (|<D,D> + 1| = {err[v]:.3e})")
    return cfg


def pairwise_inversive(cfg) -> np.ndarray:
    """Matrix of Lorentz inner products, i.e. inversive distances for normalized rows."""
    cfg = np.asarray(cfg, dtype=float)
    g = cfg * np.array([1.0, -1.0, -1.0, -1.0])
    return cfg @ g.T


def edge_distances(p: TriangulatedPolyhedron, cfg) -> np.ndarray:
    """Inversive distance across every edge, in ``p.edges`` order."""
    cfg = np.asarray(cfg, dtype=float)
    e = np.array(p.edges)
    return lorentz_inner(cfg[e[:, 0]], cfg[e[:, 1]])


class Check(NamedTuple):
    ok: bool
    witness: tuple | None = None


# ---------------------------------------------------------------------------
# geodesy


def _in_cone(a, b, x, tol):
    """Whether ``x`` (in the plane of ``a, b``) lies strictly inside the cone
    spanned by ``a`` and ``b``, row-wise."""
    nrm = np.cross(a, b)
    return (np.einsum("...i,...i->...", np.cross(a, x), nrm) > tol) & (
        np.einsum("...i,...i->...", np.cross(x, b), nrm) > tol
    )


def is_geodesic(p: TriangulatedPolyhedron, cfg, tol=TOL_ARC) -> Check:
    """Whether the centers joined by minor arcs triangulate the sphere.

    Checked in order: no center on the interior of a non-incident arc, no two
    non-adjacent arcs crossing, every face positively oriented, and total
    signed face area ``4 pi``.  Witnesses are ``('vertex_on_arc', v, edge)``,
    ``('crossing', edge1, edge2)``, ``('orientation', face)`` or
    ``('area', total)``.

    Raises
    ------
    AntipodalEdge
        If the centers of some edge are antipodal.
    """
    c = disk_centers(cfg)
    e = np.array(p.edges)
    a, b = c[e[:, 0]], c[e[:, 1]]
    dots = np.einsum("ij,ij->i", a, b)
    bad = np.nonzero(dots <= -1.0 + TOL_ANTIPODAL)[0]
    if len(bad):
        raise AntipodalEdge(f"edge {p.edges[bad[0]]} joins antipodal centers")
    nrm = np.cross(a, b)
    nlen = np.linalg.norm(nrm, axis=1)

    # vertex on a non-incident arc
    side = (c @ nrm.T) / nlen  # (n, m)
    cand = np.abs(side) <= tol
    cand[e[:, 0], np.arange(len(e))] = False
    cand[e[:, 1], np.arange(len(e))] = False
    for v, k in sorted(zip(*np.nonzero(cand))):
        if _in_cone(a[k], b[k], c[v], -tol * nlen[k]) and c[v] @ (a[k] + b[k]) > 0:
            return Check(False, ("vertex_on_arc", int(v), p.edges[k]))

    # arc crossings between arcs with no common endpoint
    m = len(e)
    ii, jj = np.triu_indices(m, 1)
    share = (
        (e[ii, 0] == e[jj, 0]) | (e[ii, 0] == e[jj, 1]) | (e[ii, 1] == e[jj, 0]) | (e[ii, 1] == e[jj, 1])
    )
    ii, jj = ii[~share], jj[~share]
    t = np.cross(nrm[ii], nrm[jj])
    tl = np.linalg.norm(t, axis=1)
    ok_t = tl > 1e-14
    t[ok_t] /= tl[ok_t][:, None]
    hits = np.zeros(len(ii), dtype=bool)
    for sgn in (1.0, -1.0):
        x = sgn * t
        hits |= ok_t & _in_cone(a[ii], b[ii], x, tol) & _in_cone(a[jj], b[jj], x, tol)
    if np.any(hits):
        k = int(np.nonzero(hits)[0][0])
        return Check(False, ("crossing", p.edges[ii[k]], p.edges[jj[k]]))

    f = np.array(p.faces)
    ci, cj, ck = c[f[:, 0]], c[f[:, 1]], c[f[:, 2]]
    det = np.einsum("ij,ij->i", ci, np.cross(cj, ck))
    neg = np.nonzero(det <= tol)[0]
    if len(neg):
        return Check(False, ("orientation", p.faces[neg[0]]))
    # signed spherical triangle areas (Van Oosterom-Strackee)
    den = 1.0 + np.einsum("ij,ij->i", ci, cj) + np.einsum("ij,ij->i", cj, ck) + np.einsum("ij,ij->i", ck, ci)
    total = float(np.sum(2.0 * np.arctan2(det, den)))
    if abs(total - 4.0 * np.pi) > 1e-8:
        return Check(False, ("area", total))
    return Check(True)


# ---------------------------------------------------------------------------
# convexity


class ConvexCheck(NamedTuple):
    ok: bool
    strict: bool
    witness: tuple | None = None


def face_determinants(p: TriangulatedPolyhedron, cfg):
    """``det([D_v; D_i; D_j; D_k])`` for each face ``ijk`` (rows) and vertex ``v``
    (columns) together with the tolerance scale of each entry."""
    cfg = np.asarray(cfg, dtype=float)
    rn = np.linalg.norm(cfg, axis=1)
    dets = np.empty((len(p.faces), p.n))
    scale = np.empty_like(dets)
    for r, (i, j, k) in enumerate(p.faces):
        o = orthodisk_vector(cfg[i], cfg[j], cfg[k])
        dets[r] = lorentz_inner(o, cfg)
        scale[r] = rn * rn[i] * rn[j] * rn[k]
    return dets, scale


def is_convex(p: TriangulatedPolyhedron, cfg, tol=TOL_DET) -> ConvexCheck:
    """No face hyperplane separates the other disks (convex); additionally none
    lies on a face hyperplane (strictly convex).

    Witnesses are ``('separates', face, vertex)`` naming the first vertex on
    the opposite side from the first off-face vertex, or ``('coplanar', face,
    vertex)``.
    """
    dets, scale = face_determinants(p, cfg)
    sign = np.where(np.abs(dets) <= tol * scale, 0, np.sign(dets)).astype(int)
    zero_witness = None
    for r, face in enumerate(p.faces):
        others = [v for v in range(p.n) if v not in face]
        s = sign[r, others]
        nz = s[s != 0]
        if len(nz) and np.any(nz != nz[0]):
            ref = nz[0]
            v = next(v for v in others if sign[r, v] == -ref)
            return ConvexCheck(False, False, ("separates", face, v))
        if zero_witness is None and np.any(s == 0):
            zero_witness = ("coplanar", face, next(v for v in others if sign[r, v] == 0))
    if zero_witness is not None:
        return ConvexCheck(True, False, zero_witness)
    return ConvexCheck(True, True)


# ---------------------------------------------------------------------------
# shallowness and disk size


def _edge_check(p, g, mode, tol):
    for i, j in p.edges:
        if not -tol <= g[i, j] <= 1.0 + tol:
            return Check(False, ("edge", (i, j), float(g[i, j])))
    if mode == "strict":
        for q in p.quadrilaterals:
            if all(abs(g[q[k], q[(k + 1) % 4]]) <= tol for k in range(4)):
                return Check(False, ("zero_cycle", q))
    return Check(True)


def _nonedge_check(p, g, tol):
    for i in range(p.n):
        for j in range(i + 1, p.n):
            if not p.has_edge(i, j) and g[i, j] < 1.0 - tol:
                return Check(False, ("nonedge", (i, j), float(g[i, j])))
    return Check(True)


def shallow_bounds_check(p: TriangulatedPolyhedron, cfg, w=None, mode="shallow", tol=TOL_INV) -> Check:
    """Edge inversive distances in ``[0, 1]`` and non-edges at least 1.

    In ``strict`` mode no 4-cycle may have all four distances within ``tol``
    of zero.  ``w`` is accepted for symmetry with the solver and unused.
    Witnesses: ``('edge', e, d)``, ``('zero_cycle', cycle)`` or
    ``('nonedge', pair, d)``.
    """
    if mode not in ("shallow", "strict"):
        raise ValueError(f"unknown mode {mode!r}")
    g = pairwise_inversive(cfg)
    res = _edge_check(p, g, mode, tol)
    return res if not res.ok else _nonedge_check(p, g, tol)


def spherical_radii(cfg) -> np.ndarray:
    return spherical_center_radius(np.asarray(cfg, dtype=float))[1]


def min_radius(cfg) -> float:
    """Smallest ``min(rho, pi - rho)`` over all disks; 0 means a disk has
    degenerated to a point or swallowed the sphere."""
    cfg = np.asarray(cfg, dtype=float)
    if len(cfg) == 0:
        return float("inf")
    rho = spherical_radii(cfg)
    return float(np.min(np.minimum(rho, np.pi - rho)))


def is_proper(cfg) -> bool:
    """Every disk smaller than a hemisphere (positive ``a``)."""
    return bool(np.all(np.asarray(cfg)[:, 0] > 0))


@dataclass
class MonitorReport:
    geodesic: bool
    geodesic_witness: tuple | None
    convex: bool
    strictly_convex: bool
    convex_witness: tuple | None
    shallow: bool
    shallow_witness: tuple | None
    nonedge_separation: bool
    nonedge_witness: tuple | None
    min_spherical_radius: float
    normalized: bool = True

    def passed(self, strict=True, radius_floor=0.0) -> bool:
        conv = self.strictly_convex if strict else self.convex
        return bool(
            self.geodesic and conv and self.shallow and self.nonedge_separation and self.normalized
            and self.min_spherical_radius > radius_floor
        )

    def summary(self) -> dict:
        return {
            "geodesic": self.geodesic,
            "strictly_convex": self.strictly_convex,
            "shallow": self.shallow and self.nonedge_separation,
            "min_radius": self.min_spherical_radius,
        }

    def first_failure(self):
        for flag, wit in (
            ("normalized", None),
            ("geodesic", self.geodesic_witness),
            ("strictly_convex", self.convex_witness),
            ("shallow", self.shallow_witness),
            ("nonedge_separation", self.nonedge_witness),
        ):
            if not getattr(self, flag):
                return flag, wit
        return None

    def to_dict(self) -> dict:
        return asdict(self)


def monitor_report(p: TriangulatedPolyhedron, cfg, mode="shallow", tol_inv=TOL_INV, tol_norm=1e-9) -> MonitorReport:
    """Evaluate every predicate and collect the first witness of each."""
    cfg = np.asarray(cfg, dtype=float)
    normalized = bool(np.all(np.abs(lorentz_inner(cfg, cfg) + 1.0) <= tol_norm))
    try:
        geo = is_geodesic(p, cfg)
    except AntipodalEdge as exc:
        geo = Check(False, ("antipodal", str(exc)))
    conv = is_convex(p, cfg)
    g = pairwise_inversive(cfg)
    sh = _edge_check(p, g, mode, tol_inv)
    ne = _nonedge_check(p, g, tol_inv)
    return MonitorReport(
        geo.ok, geo.witness, conv.ok, conv.strict, conv.witness,
        sh.ok, sh.witness, ne.ok, ne.witness, min_radius(cfg), normalized,
    )


def normalize_configuration(cfg) -> np.ndarray:
    return normalize_desitter(np.asarray(cfg, dtype=float))


def edge_residuals(p: TriangulatedPolyhedron, cfg, w: dict) -> dict:
    d = edge_distances(p, cfg)
    return {e: abs(float(d[k]) - w[edge_key(*e)]) for k, e in enumerate(p.edges)}


__all__ = [
    "Check",
    "ConvexCheck",
    "MonitorReport",
    "TOL_NORM",
    "as_configuration",
    "edge_distances",
    "edge_residuals",
    "face_determinants",
    "is_convex",
    "is_geodesic",
    "is_proper",
    "min_radius",
    "monitor_report",
    "pairwise_inversive",
    "shallow_bounds_check",
    "spherical_radii",
]
