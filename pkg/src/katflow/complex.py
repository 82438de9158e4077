"""Abstract triangulated polyhedra with edge weights.

Faces are oriented vertex triples; the orientation of every face must agree,
so each directed edge ``(i, j)`` belongs to exactly one face.  Edge weights are
target inversive distances in ``[0, 1]`` stored in a dict keyed by sorted
vertex pairs.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import networkx as nx
import numpy as np
from scipy.spatial import ConvexHull

from .errors import BadOrientation, NotThreeConnected, NotTriangulation

TOL_ANGLE = 1e-9


def edge_key(i, j):
    return (i, j) if i < j else (j, i)


def _canonical_face(f):
    f = tuple(int(v) for v in f)
    k = f.index(min(f))
    return f[k:] + f[:k]


@dataclass(frozen=True)
class TriangulatedPolyhedron:
    """Validated triangulation of the sphere; build with :func:`build_complex`."""

    n: int
    faces: tuple  # canonical rotation of each oriented face, sorted
    edges: tuple  # sorted list of sorted vertex pairs
    neighbors: tuple = field(repr=False)  # cyclic (counterclockwise) neighbor order

    @cached_property
    def edge_index(self) -> dict:
        return {e: k for k, e in enumerate(self.edges)}

    @cached_property
    def face_set(self) -> frozenset:
        return frozenset(frozenset(f) for f in self.faces)

    @cached_property
    def adjacency(self) -> tuple:
        return tuple(frozenset(nb) for nb in self.neighbors)

    @cached_property
    def edge_faces(self) -> dict:
        """Map from edge to the two faces containing it."""
        out = {e: [] for e in self.edges}
        for f in self.faces:
            for k in range(3):
                out[edge_key(f[k], f[(k + 1) % 3])].append(f)
        return {e: tuple(fs) for e, fs in out.items()}

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def is_tetrahedron(self) -> bool:
        return self.n == 4

    def has_edge(self, i, j) -> bool:
        return j in self.adjacency[i]

    def is_face(self, vertices) -> bool:
        return frozenset(vertices) in self.face_set

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    @cached_property
    def triangles(self) -> tuple:
        """All 3-cycles as sorted vertex triples."""
        out = []
        for i, j in self.edges:
            for k in self.adjacency[i] & self.adjacency[j]:
                if k > j:
                    out.append((i, j, k))
        return tuple(sorted(out))

    @cached_property
    def quadrilaterals(self) -> tuple:
        """All 4-cycles ``(v0, v1, v2, v3)`` with ``v0`` the smallest vertex
        and ``v1 < v3``, each listed once."""
        out = []
        adj = self.adjacency
        for v0 in range(self.n):
            for v1, v3 in itertools.combinations(sorted(u for u in adj[v0] if u > v0), 2):
                for v2 in adj[v1] & adj[v3]:
                    if v2 > v0 and v2 != v0:
                        out.append((v0, v1, v2, v3))
        return tuple(sorted(out))

    def bounds_two_faces(self, quad) -> bool:
        v0, v1, v2, v3 = quad
        return (self.is_face((v0, v1, v2)) and self.is_face((v0, v2, v3))) or (
            self.is_face((v1, v2, v3)) and self.is_face((v1, v3, v0))
        )


def build_complex(faces, check_connectivity=True) -> TriangulatedPolyhedron:
    """Validate an oriented face list and derive edges and vertex flowers.

    Raises
    ------
    NotTriangulation
        Bad face data, an edge not shared by exactly two faces, a vertex
        whose link is not a single cycle, or wrong Euler characteristic.
    BadOrientation
        Two faces traverse a shared edge in the same direction.
    NotThreeConnected
        The edge graph has a vertex cut of size 2 or less.
    """
    try:
        fl = [_canonical_face(f) for f in faces]
    except (TypeError, ValueError) as exc:
        raise NotTriangulation(f"malformed face list: {exc}") from None
    if not fl:
        raise NotTriangulation("empty face list")
    for f in fl:
        if len(f) != 3 or len(set(f)) != 3 or min(f) < 0:
            raise NotTriangulation(f"bad face {f}")
    verts = sorted({v for f in fl for v in f})
    n = len(verts)
    if verts != list(range(n)):
        raise NotTriangulation("vertices must be numbered 0..n-1 without gaps")
    if len(set(frozenset(f) for f in fl)) != len(fl):
        raise NotTriangulation("repeated face")

    directed = {}
    for f in fl:
        for k in range(3):
            de = (f[k], f[(k + 1) % 3])
            if de in directed:
                und = edge_key(*de)
                count = sum(set(und) <= set(g) for g in fl)
                if count > 2:
                    raise NotTriangulation(f"edge {und} lies in more than two faces")
                raise BadOrientation(f"directed edge {de} used by two faces")
            directed[de] = f
    undirected = {}
    for i, j in directed:
        undirected.setdefault(edge_key(i, j), 0)
        undirected[edge_key(i, j)] += 1
    for e, c in undirected.items():
        if c != 2:
            n_faces = sum(set(e) <= set(g) for g in fl)
            if n_faces > 2:
                raise NotTriangulation(f"edge {e} lies in {n_faces} faces")
            if n_faces == 2:
                raise BadOrientation(f"faces at edge {e} are inconsistently oriented")
            raise NotTriangulation(f"edge {e} is a boundary edge")

    edges = tuple(sorted(undirected))
    if n - len(edges) + len(fl) != 2 or len(edges) != 3 * n - 6:
        raise NotTriangulation("Euler characteristic is not that of a sphere")

    # flower of v: face (v, a, b) gives the arc a -> b around v
    succ = [dict() for _ in range(n)]
    for f in fl:
        for k in range(3):
            v, a, b = f[k], f[(k + 1) % 3], f[(k + 2) % 3]
            succ[v][a] = b
    neighbors = []
    for v in range(n):
        start = min(succ[v])
        ring = [start]
        while True:
            nxt = succ[v][ring[-1]]
            if nxt == start:
                break
            ring.append(nxt)
            if len(ring) > len(succ[v]):
                break
        if len(ring) != len(succ[v]):
            raise NotTriangulation(f"link of vertex {v} is not a single cycle")
        neighbors.append(tuple(ring))

    p = TriangulatedPolyhedron(n=n, faces=tuple(sorted(fl)), edges=edges, neighbors=tuple(neighbors))
    if check_connectivity and not is_three_connected(p):
        raise NotThreeConnected("edge graph is not 3-connected")
    return p


def is_three_connected(p: TriangulatedPolyhedron) -> bool:
    """Vertex-cut enumeration up to 64 vertices, max-flow connectivity beyond."""
    if p.n <= 3:
        return False
    if p.n > 64:
        return nx.node_connectivity(p.graph()) >= 3
    adj = p.adjacency
    for cut in itertools.chain(((v,) for v in range(p.n)), itertools.combinations(range(p.n), 2)):
        removed = set(cut)
        rest = [v for v in range(p.n) if v not in removed]
        seen = {rest[0]}
        stack = [rest[0]]
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if u not in removed and u not in seen:
                    seen.add(u)
                    stack.append(u)
        if len(seen) != len(rest):
            return False
    return True


# ---------------------------------------------------------------------------
# standard and random complexes


def tetrahedron():
    return build_complex([(0, 2, 1), (0, 1, 3), (0, 3, 2), (1, 2, 3)])


def octahedron():
    """Vertices 0..5 sit at +x, -x, +y, -y, +z, -z; faces are outward oriented."""
    return build_complex(_hull_faces(_OCTA_POINTS))


def icosahedron():
    return build_complex(_hull_faces(icosahedron_points()))


_OCTA_POINTS = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)


def octahedron_points():
    return _OCTA_POINTS.copy()


def icosahedron_points():
    phi = (1 + 5**0.5) / 2
    pts = []
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            pts += [(0, s1, s2 * phi), (s1, s2 * phi, 0), (s2 * phi, 0, s1)]
    pts = np.array(sorted(pts), dtype=float)
    return pts / np.linalg.norm(pts, axis=1)[:, None]


def _hull_faces(points):
    """Outward-oriented triangles of the convex hull of points in general position."""
    pts = np.asarray(points, dtype=float)
    hull = ConvexHull(pts)
    centroid = pts.mean(axis=0)
    faces = []
    for tri in hull.simplices:
        i, j, k = (int(v) for v in tri)
        normal = np.cross(pts[j] - pts[i], pts[k] - pts[i])
        if normal @ (pts[i] - centroid) < 0:
            j, k = k, j
        faces.append((i, j, k))
    return faces


def random_triangulation(n, rng) -> TriangulatedPolyhedron:
    """Convex hull of ``n`` random points on the sphere (resampled until every
    point is a hull vertex)."""
    while True:
        pts = rng.normal(size=(n, 3))
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        faces = _hull_faces(pts)
        if len({v for f in faces for v in f}) == n and len(faces) == 2 * n - 4:
            return build_complex(faces)


# ---------------------------------------------------------------------------
# weights


def uniform_weights(p: TriangulatedPolyhedron, value=1.0) -> dict:
    return {e: float(value) for e in p.edges}


def weights_from_angles(angles: dict, degrees=False) -> dict:
    """Convert overlap angles to inversive distances ``cos(theta)``."""
    f = np.deg2rad if degrees else (lambda x: x)
    return {edge_key(*e): float(np.cos(f(t))) for e, t in angles.items()}


def validate_weights(p: TriangulatedPolyhedron, w: dict) -> dict:
    """Return weights keyed by sorted edges; every edge exactly once, values in [0, 1]."""
    out = {}
    for (i, j), v in w.items():
        e = edge_key(int(i), int(j))
        if e not in p.edge_index:
            raise ValueError(f"{e} is not an edge")
        if e in out:
            raise ValueError(f"edge {e} weighted twice")
        v = float(v)
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"weight {v} on {e} is not shallow")
        out[e] = v
    missing = set(p.edges) - set(out)
    if missing:
        raise ValueError(f"unweighted edges: {sorted(missing)}")
    return out


def _angle(w, e):
    return float(np.arccos(np.clip(w[e], -1.0, 1.0)))


@dataclass
class KatReport:
    """Violations of the two cycle conditions; empty means the hypotheses hold."""

    triangles: list = field(default_factory=list)  # (cycle, angle_sum)
    quadrilaterals: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.triangles and not self.quadrilaterals

    def to_dict(self):
        return {
            "triangles": [{"cycle": list(c), "angle_sum": s} for c, s in self.triangles],
            "quadrilaterals": [{"cycle": list(c), "angle_sum": s} for c, s in self.quadrilaterals],
        }


def kat_conditions_check(p: TriangulatedPolyhedron, w: dict, tol_angle=TOL_ANGLE) -> KatReport:
    """Enumerate the 3-cycles with overlap-angle sum >= pi that are not faces and
    the 4-cycles with sum = 2 pi that do not bound two adjacent faces."""
    rep = KatReport()
    for tri in p.triangles:
        i, j, k = tri
        s = _angle(w, edge_key(i, j)) + _angle(w, edge_key(j, k)) + _angle(w, edge_key(i, k))
        if s >= np.pi - tol_angle and not p.is_face(tri):
            rep.triangles.append((tri, s))
    for quad in p.quadrilaterals:
        s = sum(_angle(w, edge_key(quad[k], quad[(k + 1) % 4])) for k in range(4))
        if abs(s - 2 * np.pi) <= tol_angle and not p.bounds_two_faces(quad):
            rep.quadrilaterals.append((quad, s))
    return rep


def zero_quadrilaterals(p: TriangulatedPolyhedron, w: dict) -> list:
    """4-cycles whose four weights are exactly zero."""
    return [q for q in p.quadrilaterals if all(w[edge_key(q[k], q[(k + 1) % 4])] == 0.0 for k in range(4))]


def strictly_shallow_check(p: TriangulatedPolyhedron, w: dict) -> bool:
    return not zero_quadrilaterals(p, w)
