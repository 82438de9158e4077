"""Analytic geometry of disks on the unit sphere via Minkowski space R^{1,3}.

A disk is a 4-vector ``D = (a, b, c, d)``.  Its boundary circle is the set of
points ``P`` of the unit sphere with ``a - (b, c, d) . P = 0`` and the disk
itself is the side where ``a - (b, c, d) . P < 0``.  Positive multiples of
``D`` describe the same disk, ``-D`` is the complementary disk.  A real disk
normalized to ``<D, D> = -1`` is said to be in de Sitter coordinates, and for
two such disks the inversive distance is simply ``<D1, D2>``.

Arrays of disks are handled row-wise: anything shaped ``(..., 4)`` works
wherever a single disk does, unless stated otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm
from scipy.spatial.transform import Rotation

from .errors import (
    DegenerateTriple,
    NotLorentz,
    NotRealDisk,
    SameBoundary,
    ZeroVector,
)

TOL_NORM = 1e-12
TOL_LIGHT = 1e-10
TOL_ORTHO = 1e-10
TOL_DET = 1e-10
TOL_INV = 1e-10

#: Minkowski metric, signature (+, -, -, -)
METRIC = np.diag([1.0, -1.0, -1.0, -1.0])


def lorentz_inner(u, v):
    """Lorentz inner product ``t t' - x x' - y y' - z z'`` (broadcasts over rows)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 0] - u[..., 1] * v[..., 1] - u[..., 2] * v[..., 2] - u[..., 3] * v[..., 3]


def minkowski_norm2(d):
    """``b^2 + c^2 + d^2 - a^2``, i.e. ``-<D, D>``; positive for real disks."""
    return -lorentz_inner(d, d)


def classify_disk(d, tol=TOL_LIGHT) -> str:
    """Return ``'real'``, ``'point'`` or ``'imaginary'`` for a single 4-vector."""
    d = np.asarray(d, dtype=float)
    scale = float(d @ d)
    if scale == 0.0:
        raise ZeroVector("the zero vector is not a disk")
    q = float(minkowski_norm2(d))
    if abs(q) <= tol * scale:
        return "point"
    return "real" if q > 0 else "imaginary"


def is_normalized(d, tol=TOL_NORM) -> bool:
    return bool(np.all(np.abs(lorentz_inner(d, d) + 1.0) <= tol))


def normalize_desitter(d, tol=TOL_LIGHT):
    """Scale real disks to de Sitter coordinates, ``<D, D> = -1``.

    The scale factor ``1/sqrt(b^2 + c^2 + d^2 - a^2)`` is positive, so the disk
    (and the sign of ``a``) is unchanged.

    Raises
    ------
    NotRealDisk
        If any input row is a point or imaginary disk.
    """
    d = np.asarray(d, dtype=float)
    q = minkowski_norm2(d)
    scale = np.einsum("...i,...i->...", d, d)
    if np.any(q <= tol * scale):
        raise NotRealDisk("cannot normalize a point or imaginary disk")
    return d / np.sqrt(q)[..., None]


def inversive_distance(d1, d2):
    """Inversive distance of two real disks (normalized internally).

    Equals the cosine of the overlap angle when the boundary circles cross,
    1 at external tangency, > 1 for disjoint disks.
    """
    return lorentz_inner(normalize_desitter(d1), normalize_desitter(d2))


def overlap_angle(d1, d2):
    """Overlap angle ``arccos d`` for disks whose boundaries meet."""
    return np.arccos(np.clip(inversive_distance(d1, d2), -1.0, 1.0))


def spherical_center_radius(d):
    """Spherical center (unit 3-vector) and spherical radius in ``(0, pi)``.

    The center is ``(b, c, d)/|(b, c, d)|`` and ``cos(radius) = a/|(b, c, d)|``;
    disks with ``a > 0`` are smaller than a hemisphere.
    """
    d = np.asarray(d, dtype=float)
    if np.any(minkowski_norm2(d) <= TOL_LIGHT * np.einsum("...i,...i->...", d, d)):
        raise NotRealDisk("point and imaginary disks have no spherical radius")
    n = d[..., 1:]
    nn = np.linalg.norm(n, axis=-1)
    center = n / nn[..., None]
    rho = np.arccos(np.clip(d[..., 0] / nn, -1.0, 1.0))
    return center, rho


def disk_centers(cfg):
    """Unit spherical centers of an ``(n, 4)`` array of real disks."""
    cfg = np.asarray(cfg, dtype=float)
    n = cfg[:, 1:]
    return n / np.linalg.norm(n, axis=1)[:, None]


class ConicalCap(NamedTuple):
    ray: np.ndarray
    point: np.ndarray | None
    direction: np.ndarray | None
    at_infinity: bool


def conical_cap(d, tol=TOL_LIGHT) -> ConicalCap:
    """Apex of the cone tangent to the sphere along the boundary of ``d``.

    For ``a > 0`` this is the affine point ``(b, c, d)/a``.  Great disks give a
    point at infinity in direction ``(b, c, d)``.  Disks larger than a
    hemisphere use the cap of the complementary disk, which yields the same
    affine formula.
    """
    d = np.asarray(d, dtype=float)
    if classify_disk(d) != "real":
        raise NotRealDisk("conical caps are defined for real disks only")
    a, n = d[0], d[1:]
    nn = np.linalg.norm(n)
    if abs(a) <= tol * nn:
        return ConicalCap(d.copy(), None, n / nn, True)
    ray = d if a > 0 else -d
    return ConicalCap(ray.copy(), ray[1:] / ray[0], None, False)


class OrthoDisk(NamedTuple):
    coords: np.ndarray
    kind: str  # 'hyperbolic' | 'parabolic' | 'elliptic'


def _check_triple(m: np.ndarray) -> None:
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0 or s[2] <= 1e-12 * s[0]:
        raise DegenerateTriple("the three disks are linearly dependent")


def orthodisk_vector(d1, d2, d3):
    """Lorentz normal of the hyperplane spanned by three disks (no checks).

    Built from the four 3x3 minors of the coordinate matrix so that
    ``<C, D4> == det([D4; D1; D2; D3])`` for every ``D4``.
    """
    m = np.array([d1, d2, d3], dtype=float)
    minor = lambda cols: np.linalg.det(m[:, cols])  # noqa: E731
    return np.array([minor([1, 2, 3]), minor([0, 2, 3]), -minor([0, 1, 3]), minor([0, 1, 2])])


def _kind(c, tol=TOL_LIGHT) -> str:
    q = lorentz_inner(c, c)
    if abs(q) <= tol * float(c @ c):
        return "parabolic"
    return "elliptic" if q > 0 else "hyperbolic"


def orthodisk(d1, d2, d3) -> OrthoDisk:
    """Positively oriented orthodisk of a triple of disks.

    Odd permutations of the triple negate the result.  The kind follows the
    sign of the Minkowski norm: spacelike normals give a real orthocircle
    (hyperbolic), lightlike a point (parabolic), timelike an imaginary one
    (elliptic).
    """
    m = np.array([d1, d2, d3], dtype=float)
    _check_triple(m)
    c = orthodisk_vector(*m)
    return OrthoDisk(c, _kind(c))


def coplanarity_det(triple, d4):
    """``det([D4; D1; D2; D3])``: zero iff ``D4`` lies in the c-plane of the triple.

    The sign says on which side of the hyperplane ``D4`` lies.
    """
    m = np.array(triple, dtype=float)
    _check_triple(m)
    return float(np.linalg.det(np.vstack([np.asarray(d4, dtype=float), m])))


def coplanarity_sign(triple, d4, tol=TOL_DET) -> int:
    """Sign of :func:`coplanarity_det` with a tolerance scaled by the row norms."""
    rows = np.vstack([np.asarray(d4, dtype=float), np.array(triple, dtype=float)])
    det = coplanarity_det(triple, d4)
    scale = float(np.prod(np.linalg.norm(rows, axis=1)))
    if abs(det) <= tol * scale:
        return 0
    return 1 if det > 0 else -1


def coaxial_classify(d1, d2, tol=TOL_INV) -> str:
    """Type of the coaxial family spanned by two real disks."""
    n1, n2 = normalize_desitter(d1), normalize_desitter(d2)
    if min(np.linalg.norm(n1 - n2), np.linalg.norm(n1 + n2)) <= 1e-9 * np.linalg.norm(n1):
        raise SameBoundary("the two disks share a boundary circle")
    d = abs(float(lorentz_inner(n1, n2)))
    if d > 1.0 + tol:
        return "hyperbolic"
    if d < 1.0 - tol:
        return "elliptic"
    return "parabolic"


# ---------------------------------------------------------------------------
# planar disks and stereographic projection (from the north pole onto z = 0)


@dataclass(frozen=True)
class PlanarDisk:
    """A disk of the extended plane.

    Circle form: center ``(x, y)`` and signed radius ``r`` (``r > 0`` is the
    bounded interior, ``r < 0`` the exterior).  Line form: unit normal
    ``(nx, ny)`` and offset ``h``; the disk is the half-plane ``n . p > h``.
    """

    x: float = 0.0
    y: float = 0.0
    r: float | None = None
    nx: float | None = None
    ny: float | None = None
    h: float | None = None

    def __post_init__(self):
        if self.r is not None:
            if self.r == 0:
                raise ValueError("circle radius must be nonzero")
        elif self.nx is None or self.ny is None or self.h is None:
            raise ValueError("need either a radius or a line (nx, ny, h)")
        elif abs(self.nx**2 + self.ny**2 - 1.0) > 1e-9:
            raise ValueError("line normal must be a unit vector")

    @classmethod
    def circle(cls, x, y, r):
        return cls(x=float(x), y=float(y), r=float(r))

    @classmethod
    def line(cls, nx, ny, h):
        s = float(np.hypot(nx, ny))
        return cls(nx=float(nx) / s, ny=float(ny) / s, h=float(h) / s)

    @property
    def is_line(self) -> bool:
        return self.r is None


def inversive_distance_planar(p: PlanarDisk, q: PlanarDisk) -> float:
    """Inversive distance of two planar disks or half-planes.

    Two circles: ``(|c1 - c2|^2 - r1^2 - r2^2) / (2 r1 r2)``.  Circle and
    half-plane: signed distance from the circle center to the line (positive
    when the center is outside the half-plane) divided by ``r1``.  Two
    half-planes: ``-n1 . n2``, the cosine of the overlap angle, which is 1 for
    facing parallel half-planes.
    """
    if p.is_line and q.is_line:
        return -(p.nx * q.nx + p.ny * q.ny)
    if p.is_line:
        p, q = q, p
    if q.is_line:
        sd = q.h - (q.nx * p.x + q.ny * p.y)
        return sd / p.r
    d2 = (p.x - q.x) ** 2 + (p.y - q.y) ** 2
    return (d2 - p.r**2 - q.r**2) / (2.0 * p.r * q.r)


def stereographic_lift(p: PlanarDisk):
    """De Sitter coordinates of the spherical disk projecting onto ``p``.

    Interior disks (``r > 0``) map to disks that do not contain the north pole.
    """
    if p.is_line:
        return np.array([p.h, p.nx, p.ny, p.h])
    s = p.x**2 + p.y**2 - p.r**2
    return np.array([(s + 1.0) / 2.0, p.x, p.y, (s - 1.0) / 2.0]) / p.r


def stereographic_drop(d, tol=TOL_NORM) -> PlanarDisk:
    """Project a real disk to the plane; returns line form when the boundary
    passes through the north pole."""
    d = normalize_desitter(d)
    a, b, c, dd = d
    k = a - dd
    if abs(k) <= tol * max(1.0, float(np.abs(d).max())):
        return PlanarDisk.line(b, c, a)
    return PlanarDisk.circle(b / k, c / k, 1.0 / k)


def stereographic_point(points):
    """Project unit 3-vectors from the north pole; the pole itself maps to inf."""
    p = np.asarray(points, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return p[..., :2] / (1.0 - p[..., 2:3])


def inverse_stereographic_point(xy):
    xy = np.asarray(xy, dtype=float)
    s = np.einsum("...i,...i->...", xy, xy)[..., None]
    return np.concatenate([2.0 * xy, s - 1.0], axis=-1) / (s + 1.0)


# ---------------------------------------------------------------------------
# Lorentz transformations


def is_lorentz(m, tol=TOL_NORM) -> bool:
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        return False
    err = np.abs(m.T @ METRIC @ m - METRIC).max()
    return bool(err <= tol * max(1.0, float(np.abs(m).max()) ** 2) and m[0, 0] > 0)


def apply_lorentz(m, d):
    """Apply a time-orientation preserving Lorentz map to one or many disks."""
    m = np.asarray(m, dtype=float)
    if not is_lorentz(m):
        raise NotLorentz("matrix does not preserve the Lorentz form and time orientation")
    return np.asarray(d, dtype=float) @ m.T


def lorentz_generators():
    """Basis of the Lorentz Lie algebra: three rotations then three boosts.

    Rotation ``k`` turns the spatial plane orthogonal to axis ``k`` (x, y, z);
    boost ``k`` mixes time with axis ``k``.
    """
    gens = []
    for i, j in ((2, 3), (3, 1), (1, 2)):
        g = np.zeros((4, 4))
        g[i, j], g[j, i] = -1.0, 1.0
        gens.append(g)
    for k in (1, 2, 3):
        g = np.zeros((4, 4))
        g[0, k] = g[k, 0] = 1.0
        gens.append(g)
    return np.array(gens)


def lorentz_from_coefficients(coeffs):
    """``expm`` of a combination of :func:`lorentz_generators`."""
    return expm(np.tensordot(np.asarray(coeffs, dtype=float), lorentz_generators(), axes=1))


def spatial_rotation(r3):
    m = np.eye(4)
    m[1:, 1:] = np.asarray(r3, dtype=float)
    return m


def rotation_about(axis, angle):
    return spatial_rotation(Rotation.from_rotvec(np.asarray(axis, float) / np.linalg.norm(axis) * angle).as_matrix())


def boost(axis, rapidity):
    coeffs = np.zeros(6)
    coeffs[3:] = np.asarray(axis, dtype=float) / np.linalg.norm(axis) * rapidity
    return lorentz_from_coefficients(coeffs)


def random_rotation(rng):
    return spatial_rotation(Rotation.random(random_state=rng).as_matrix())


def random_lorentz(rng, scale=0.5):
    return lorentz_from_coefficients(rng.normal(scale=scale, size=6))


def rotation_taking(u, v):
    """Spatial rotation (4x4) taking the unit 3-vector ``u`` to ``v``."""
    u = np.asarray(u, dtype=float) / np.linalg.norm(u)
    v = np.asarray(v, dtype=float) / np.linalg.norm(v)
    axis = np.cross(u, v)
    s, c = np.linalg.norm(axis), float(u @ v)
    if s < 1e-15:
        if c > 0:
            return np.eye(4)
        # antipodal: rotate by pi about any axis orthogonal to u
        perp = np.cross(u, np.eye(3)[np.argmin(np.abs(u))])
        return rotation_about(perp, np.pi)
    return rotation_about(axis, np.arctan2(s, c))


def lorentz_to_standard(d):
    """Restricted Lorentz map sending the real disk ``d`` to ``(0, 0, 0, 1)``."""
    a, *_ = d = normalize_desitter(d)
    n = d[1:]
    rot = rotation_taking(n, [0.0, 0.0, 1.0])
    nn = np.linalg.norm(n)
    return boost([0.0, 0.0, 1.0], np.arctanh(-a / nn)) @ rot


# ---------------------------------------------------------------------------


def solve_disk_given_bc(d, delta, b2, c2, tol=TOL_INV):
    """All normalized disks with second/third coordinates ``b2, c2`` at
    inversive distance ``delta`` from the normalized disk ``d``.

    Eliminating the first coordinate leaves a quadratic in the fourth, so
    there are at most two solutions.  Every returned disk is verified.
    """
    a, b, c, dd = np.asarray(d, dtype=float)
    k = delta + b * b2 + c * c2  # a*a2 - dd*d2 = k
    q = b2 * b2 + c2 * c2
    cands = []
    if abs(a) > 1e-14:
        # a2 = (k + dd*d2)/a and a2^2 - d2^2 = q - 1
        coef = [dd * dd - a * a, 2.0 * dd * k, k * k - a * a * (q - 1.0)]
        if abs(coef[0]) <= 1e-14:
            roots = [] if abs(coef[1]) <= 1e-14 else [-coef[2] / coef[1]]
        else:
            disc = coef[1] ** 2 - 4.0 * coef[0] * coef[2]
            if disc < -1e-12 * max(1.0, coef[1] ** 2):
                roots = []
            else:
                sq = np.sqrt(max(disc, 0.0))
                roots = sorted({(-coef[1] - sq) / (2 * coef[0]), (-coef[1] + sq) / (2 * coef[0])})
        cands = [np.array([(k + dd * d2) / a, b2, c2, d2]) for d2 in roots]
    elif abs(dd) > 1e-14:
        d2 = -k / dd
        rad = q + d2 * d2 - 1.0
        if rad >= -1e-12:
            r = np.sqrt(max(rad, 0.0))
            cands = [np.array([s, b2, c2, d2]) for s in sorted({-r, r})]
    else:
        raise ValueError("the constraint does not involve the unknown coordinates")
    out = []
    for x in cands:
        if abs(lorentz_inner(x, x) + 1.0) <= 1e-9 and abs(lorentz_inner(d, x) - delta) <= tol * max(1.0, abs(delta)) * 10:
            out.append(x)
    return out
