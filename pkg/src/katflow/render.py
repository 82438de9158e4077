"""Deterministic SVG pictures of configurations.

The sphere is rotated so that the centroid of the pinned face's centers sits
at the south pole, then projected stereographically from the north pole.
Boundary circles stay circles (or lines through the pole), the geodesic
graph is drawn as sampled great-circle arcs, the free edge gets its own
style and velocity vectors show the motion of each unpinned center.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import rotation_taking, stereographic_drop, stereographic_point

SIZE = 600
WORLD = 3.0  # viewport covers [-WORLD, WORLD]^2
CLAMP = 1e6
ARC_SAMPLES = 24


@dataclass(frozen=True)
class Style:
    disk_stroke: str = "#1f3a93"
    disk_fill: str = "#1f3a93"
    disk_fill_opacity: float = 0.08
    edge_stroke: str = "#333333"
    free_edge_stroke: str = "#999999"
    velocity_stroke: str = "#2ca02c"
    velocity_scale: float = 0.5
    stroke_width: float = 1.5


def _f(x) -> str:
    x = float(np.clip(x, -CLAMP, CLAMP)) + 0.0
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _px(xy):
    s = SIZE / (2.0 * WORLD)
    return (xy[0] + WORLD) * s, (WORLD - xy[1]) * s


def view_rotation(cfg, face=None) -> np.ndarray:
    """Spatial rotation (4x4) taking the pinned face's center centroid to the
    south pole; identity without a face."""
    if face is None or len(cfg) == 0:
        return np.eye(4)
    c = np.asarray(cfg)[list(face), 1:]
    c = c / np.linalg.norm(c, axis=1)[:, None]
    g = c.sum(axis=0)
    if np.linalg.norm(g) < 1e-12:
        return np.eye(4)
    return rotation_taking(g, [0.0, 0.0, -1.0])


def _centers(cfg):
    n = cfg[:, 1:]
    return n / np.linalg.norm(n, axis=1)[:, None]


def _project(pts):
    pts = np.atleast_2d(pts)
    safe = np.where(pts[:, 2:3] > 1.0 - 1e-12, np.nan, pts)
    return stereographic_point(safe)


def _arc_points(a, b, k=ARC_SAMPLES):
    ang = np.arccos(np.clip(a @ b, -1.0, 1.0))
    if ang < 1e-15:
        return np.array([a, b])
    ts = np.linspace(0.0, 1.0, k + 1)
    return (np.sin((1 - ts) * ang)[:, None] * a + np.sin(ts * ang)[:, None] * b) / np.sin(ang)


def _polyline(xy, cls, stroke, width, extra=""):
    pts = []
    for x, y in xy:
        if not (np.isfinite(x) and np.isfinite(y)):
            continue
        px, py = _px((x, y))
        pts.append(f"{_f(px)},{_f(py)}")
    if len(pts) < 2:
        return None
    return f'<polyline class="{cls}" points="{" ".join(pts)}" fill="none" stroke="{stroke}" stroke-width="{_f(width)}"{extra}/>'


def render_svg(cfg, p=None, face=None, free_edge=None, velocity=None, style: Style | None = None, title=None) -> str:
    """SVG document for a configuration.

    ``p`` (a complex) enables the geodesic edges; ``face`` is the pinned face
    used for the view; ``free_edge`` is drawn in the free-edge style;
    ``velocity`` is an ``(n, 4)`` disk velocity, drawn for disks where it is
    nonzero.
    """
    style = style or Style()
    cfg = np.asarray(cfg, dtype=float).reshape(-1, 4)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect width="{SIZE}" height="{SIZE}" fill="white"/>',
    ]
    if title:
        out.append(f"<title>{title}</title>")
    if len(cfg):
        rot = view_rotation(cfg, face)
        view = cfg @ rot.T
        s = SIZE / (2.0 * WORLD)
        for v, d in enumerate(view):
            pd = stereographic_drop(d)
            common = f'stroke="{style.disk_stroke}" stroke-width="{_f(style.stroke_width)}"'
            if pd.is_line:
                # half-plane n.p > h: draw its boundary across the viewport
                base = np.array([pd.nx, pd.ny]) * pd.h
                t = np.array([-pd.ny, pd.nx]) * 4.0 * WORLD
                (x1, y1), (x2, y2) = _px(base - t), _px(base + t)
                out.append(f'<line class="disk" data-vertex="{v}" x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" {common}/>')
            else:
                cx, cy = _px((pd.x, pd.y))
                fill = f'fill="{style.disk_fill}" fill-opacity="{_f(style.disk_fill_opacity)}"' if pd.r > 0 else 'fill="none"'
                out.append(
                    f'<circle class="disk" data-vertex="{v}" cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(abs(pd.r) * s)}" {fill} {common}/>'
                )
        c = _centers(view)
        if p is not None:
            fe = tuple(sorted(free_edge)) if free_edge is not None else None
            for i, j in p.edges:
                if (i, j) == fe:
                    continue
                line = _polyline(_project(_arc_points(c[i], c[j])), "edge", style.edge_stroke, 1.0)
                if line:
                    out.append(line)
            if fe is not None:
                line = _polyline(
                    _project(_arc_points(c[fe[0]], c[fe[1]])), "free-edge", style.free_edge_stroke, 4.0,
                    ' stroke-dasharray="8,4"',
                )
                if line:
                    out.append(line)
        xy = _project(c)
        for v, (x, y) in enumerate(xy):
            if np.isfinite(x):
                px, py = _px((x, y))
                out.append(f'<circle class="center" data-vertex="{v}" cx="{_f(px)}" cy="{_f(py)}" r="2.500000" fill="black"/>')
        if velocity is not None:
            vel = np.asarray(velocity, dtype=float).reshape(-1, 4) @ rot.T
            tau = 1e-6
            for v in range(len(view)):
                if not np.any(vel[v]):
                    continue
                moved = view[v] + tau * vel[v]
                c2 = moved[1:] / np.linalg.norm(moved[1:])
                a, b = _project(c[v])[0], _project(c2)[0]
                tip = a + (b - a) / tau * style.velocity_scale
                if not (np.all(np.isfinite(a)) and np.all(np.isfinite(tip))):
                    continue
                (x1, y1), (x2, y2) = _px(a), _px(tip)
                out.append(
                    f'<line class="velocity" data-vertex="{v}" x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                    f'stroke="{style.velocity_stroke}" stroke-width="2.000000"/>'
                )
    out.append("</svg>")
    return "\n".join(out) + "\n"
