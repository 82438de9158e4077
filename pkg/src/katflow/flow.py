"""Edge-correction flow and the solvers built on it.

One flow pins a face ``ijk`` and moves the other disks with velocity
``J_u^{-1} v_e``: the inversive distance across the free edge ``e`` drops at
unit rate while every other edge and every de Sitter norm stays fixed.  The
ODE is integrated with an embedded Runge-Kutta 4(5) pair; after each accepted
step a minimum-norm Newton correction puts the state back on the constraint
set, and the step that crosses the target is located on the dense output.

:func:`schedule_edges` corrects the edges one at a time starting from a
tangency packing.  :func:`epsilon_schedule` handles weights with all-zero
4-cycles by solving a sequence of strictly shallow problems.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import RK45

from .checks import edge_distances, monitor_report, pairwise_inversive
from .complex import (
    TriangulatedPolyhedron,
    edge_key,
    kat_conditions_check,
    strictly_shallow_check,
    validate_weights,
    zero_quadrilaterals,
)
from .errors import (
    IllConditioned,
    KatViolation,
    MaxSteps,
    MonitorViolation,
    NonConvergent,
    NoValidPin,
    PreconditionError,
    SingularAtPin,
    TetrahedronError,
)
from .rigidity import COND_MAX, assemble_rigidity, configuration_velocity, flow_velocity, measurement, unmarked_system

log = logging.getLogger(__name__)

EPS_MIN = 2.0**-20
TOL_LIMIT = 1e-6


@dataclass(frozen=True)
class FlowOptions:
    rtol: float = 1e-8
    atol: float = 1e-10
    first_step: float = 1e-2
    max_steps: int = 10_000
    tol_target: float = 1e-10
    tol_drift: float = 1e-8
    tol_newton: float = 1e-12
    newton_iters: int = 5
    cond_max: float = COND_MAX
    radius_floor: float = 1e-6
    monitor_tol: float = 1e-9
    monitors: bool = True
    pin_attempts: int = 3


@dataclass
class TraceRecord:
    step: int
    t: float
    d_e: float
    min_radius: float
    monitors: dict
    h: float

    def to_dict(self) -> dict:
        return {"step": self.step, "t": self.t, "d_e": self.d_e, "min_radius": self.min_radius, "monitors": self.monitors, "h": self.h}


@dataclass
class FlowTrace:
    edge: tuple
    face: tuple
    target: float
    d0: float
    records: list = field(default_factory=list)
    stop_reason: str | None = None
    last_cfg: np.ndarray | None = field(default=None, repr=False)
    max_drift: float = 0.0
    max_norm_error: float = 0.0

    @property
    def steps(self) -> int:
        return len(self.records)

    @property
    def min_radius(self) -> float:
        return min((r.min_radius for r in self.records), default=float("inf"))

    def monitors_passed(self) -> bool:
        return all(r.monitors.get("geodesic", True) and r.monitors.get("strictly_convex", True) for r in self.records)

    def to_dicts(self, flow_index=0):
        base = {"flow": flow_index, "edge": list(self.edge), "face": list(self.face), "target": self.target}
        return [{**base, **r.to_dict()} for r in self.records]

    def summary(self) -> dict:
        return {
            "edge": list(self.edge),
            "face": list(self.face),
            "d0": self.d0,
            "target": self.target,
            "steps": self.steps,
            "stop_reason": self.stop_reason,
            "max_drift": self.max_drift,
            "min_radius": self.min_radius,
        }


class _FlowSystem:
    """Constraint bookkeeping of one flow (fixed pin and free edge)."""

    def __init__(self, p, cfg, face, edge, cond_max):
        self.p = p
        self.base = np.array(cfg, dtype=float)
        self.sys = unmarked_system(p, face)
        self.row_e = self.sys.row_of_edge(edge)
        self.edge = edge_key(*edge)
        self.cond_max = cond_max
        f0 = measurement(p, self.base)[self.sys.rows]
        f0[len(f0) - len(self.sys.free) :] = -0.5  # exact de Sitter norms
        self.targets = f0
        self.others = np.delete(np.arange(len(f0)), self.row_e)

    def full(self, y):
        c = self.base.copy()
        c[self.sys.free] = y.reshape(-1, 4)
        return c

    def d_e(self, y):
        c = self.full(y)
        i, j = self.edge
        return float(c[i, 0] * c[j, 0] - c[i, 1:] @ c[j, 1:])

    def ju(self, y):
        J = assemble_rigidity(self.p, self.full(y)).matrix
        return J[np.ix_(self.sys.rows, self.sys.cols)]

    def residual(self, y):
        return measurement(self.p, self.full(y))[self.sys.rows] - self.targets

    def rhs(self, t, y):
        return flow_velocity(self.ju(y), self.row_e, self.cond_max)

    def project(self, y, tol, iters):
        """Minimum-norm Newton steps onto {other edges fixed, norms -1}."""
        for _ in range(iters):
            r = self.residual(y)[self.others]
            if np.max(np.abs(r)) <= tol:
                break
            a = self.ju(y)[self.others]
            y = y - np.linalg.lstsq(a, r, rcond=None)[0]
        return y

    def solve_at(self, y, w, tol, iters):
        """Square Newton solve with the free edge pinned at ``w`` as well."""
        tg = self.targets.copy()
        tg[self.row_e] = w
        for _ in range(iters + 3):
            r = measurement(self.p, self.full(y))[self.sys.rows] - tg
            if np.max(np.abs(r)) <= tol:
                break
            y = y - np.linalg.solve(self.ju(y), r)
        return y

    def drift(self, y):
        r = self.residual(y)
        ne = len(self.sys.free)
        edges = np.delete(r[: len(r) - ne], self.row_e) if self.row_e < len(r) - ne else r[: len(r) - ne]
        return float(np.max(np.abs(edges), initial=0.0)), float(np.max(np.abs(r[len(r) - ne :]), initial=0.0)) * 2.0


def _fail(exc, trace, reason, cfg):
    trace.stop_reason = reason
    trace.last_cfg = cfg
    exc.trace = trace
    return exc


def integrate_edge_flow(p: TriangulatedPolyhedron, cfg, face, edge, target, opts: FlowOptions | None = None, on_step=None):
    """Flow ``cfg`` until the inversive distance across ``edge`` equals ``target``.

    Returns the final configuration and a :class:`FlowTrace`.  ``on_step`` is
    called with each :class:`TraceRecord` as it is accepted.

    Raises
    ------
    PreconditionError
        ``edge`` is an edge of the pinned face, or is already below ``target``,
        or the start fails the monitors.
    IllConditioned, MonitorViolation, MaxSteps
        The flow left the region where it is defined; the exception carries
        the trace with the last good configuration as ``exc.trace``.
    """
    opts = opts or FlowOptions()
    cfg = np.array(cfg, dtype=float)
    face = tuple(int(v) for v in face)
    e = edge_key(*edge)
    if e not in p.edge_index:
        raise PreconditionError(f"{edge} is not an edge")
    if set(e) <= set(face):
        raise PreconditionError(f"free edge {e} belongs to the pinned face {face}")
    sysf = _FlowSystem(p, cfg, face, e, opts.cond_max)
    y = cfg[sysf.sys.free].ravel()
    d0 = sysf.d_e(y)
    trace = FlowTrace(e, face, float(target), d0, last_cfg=cfg)
    gap = d0 - target
    if abs(gap) <= opts.tol_target:
        trace.stop_reason = "TargetReached"
        return cfg, trace
    if gap < 0:
        raise PreconditionError(f"edge {e} is at {d0!r}, already below its target {target!r}")
    if opts.monitors:
        rep = monitor_report(p, cfg, tol_inv=opts.monitor_tol)
        if not rep.passed(strict=True, radius_floor=opts.radius_floor):
            raise PreconditionError(f"start configuration fails monitor {rep.first_failure()}")

    t, h, steps = 0.0, opts.first_step, 0
    while True:
        if steps >= opts.max_steps:
            raise _fail(MaxSteps(f"no target after {steps} steps"), trace, "MaxSteps", sysf.full(y))
        g = sysf.d_e(y) - target
        t_bound = t + g * (1.0 + 1e-3) + 1e-9
        try:
            solver = RK45(sysf.rhs, t, y, t_bound, first_step=min(h, t_bound - t), rtol=opts.rtol, atol=opts.atol)
            msg = solver.step()
        except IllConditioned as exc:
            raise _fail(exc, trace, "IllConditioned", sysf.full(y)) from None
        if solver.status == "failed":
            raise _fail(IllConditioned(f"integrator failed: {msg}"), trace, "IllConditioned", sysf.full(y))
        t_new, y_new = solver.t, solver.y
        h_taken = t_new - t
        reached = sysf.d_e(y_new) - target <= opts.tol_target
        if reached:
            dense = solver.dense_output()
            lo, hi = t, t_new
            y_new = y_new
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                ym = dense(mid)
                gm = sysf.d_e(ym) - target
                if abs(gm) < opts.tol_target:
                    y_new, t_new = ym, mid
                    break
                lo, hi = (mid, hi) if gm > 0 else (lo, mid)
            try:
                y_new = sysf.solve_at(y_new, target, opts.tol_newton, opts.newton_iters)
            except np.linalg.LinAlgError as exc:
                raise _fail(IllConditioned(str(exc)), trace, "IllConditioned", sysf.full(y)) from None
            h_taken = t_new - t
        else:
            y_new = sysf.project(y_new, opts.tol_newton, opts.newton_iters)
        cur = sysf.full(y_new)
        steps += 1
        drift, norm_err = sysf.drift(y_new)
        trace.max_drift = max(trace.max_drift, drift)
        trace.max_norm_error = max(trace.max_norm_error, norm_err)
        if opts.monitors:
            rep = monitor_report(p, cur, tol_inv=opts.monitor_tol)
            summary = rep.summary()
            ok = rep.passed(strict=True, radius_floor=opts.radius_floor)
        else:
            rep, ok = None, True
            summary = {}
        d_now = sysf.d_e(y_new)
        rec = TraceRecord(steps, float(t_new), d_now, rep.min_spherical_radius if rep else float("nan"), summary, float(h_taken))
        if not ok:
            raise _fail(
                MonitorViolation(f"monitor failed at step {steps}: {rep.first_failure()}", rep),
                trace,
                "MonitorViolation",
                sysf.full(y),
            )
        if drift > opts.tol_drift:
            raise _fail(
                MonitorViolation(f"constraint drift {drift:.3e} at step {steps}"), trace, "MonitorViolation", sysf.full(y)
            )
        trace.records.append(rec)
        if on_step is not None:
            on_step(rec)
        t, y = t_new, y_new
        h = max(solver.h_abs, 1e-12)
        trace.last_cfg = cur
        if reached:
            trace.stop_reason = "TargetReached"
            return cur, trace


# ---------------------------------------------------------------------------
# scheduling


@dataclass
class SolveReport:
    cfg: np.ndarray
    weights: dict
    residuals: dict
    flows: list
    total_steps: int
    wall_time: float
    levels: list = field(default_factory=list)  # epsilon schedule: (eps, residual, n_flows)
    monitors: object = None

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    @property
    def n_flows(self) -> int:
        return len(self.flows)


def pin_candidates(p: TriangulatedPolyhedron, cfg, edge) -> list:
    """Faces not bounded by ``edge``, best first: largest minimum pairwise
    distance between the centers of the face's disks."""
    e = set(edge_key(*edge))
    c = np.asarray(cfg)[:, 1:]
    c = c / np.linalg.norm(c, axis=1)[:, None]
    scored = []
    for f in p.faces:
        if e <= set(f):
            continue
        i, j, k = f
        s = min(np.linalg.norm(c[i] - c[j]), np.linalg.norm(c[j] - c[k]), np.linalg.norm(c[k] - c[i]))
        scored.append((-s, f))
    if not scored:
        raise NoValidPin(f"every face contains edge {tuple(sorted(e))}")
    scored.sort()
    return [f for _, f in scored]


def _validate_problem(p, w, strict=True):
    if p.is_tetrahedron:
        raise TetrahedronError("the theorem excludes the tetrahedron")
    rep = kat_conditions_check(p, w)
    if not rep.ok:
        raise KatViolation("weights violate the cycle conditions", rep.triangles + rep.quadrilaterals)
    if strict and not strictly_shallow_check(p, w):
        raise PreconditionError(f"weights are not strictly shallow: zero 4-cycles {zero_quadrilaterals(p, w)}")


def schedule_edges(p: TriangulatedPolyhedron, w: dict, cfg0, opts: FlowOptions | None = None, pins=None, on_step=None, validate=True) -> SolveReport:
    """Correct one edge at a time, largest gap first, until every residual is
    below ``tol_target``.

    ``pins`` restricts the pinned faces (tried in order); by default they come
    from :func:`pin_candidates`.  If a flow becomes ill-conditioned, up to
    ``opts.pin_attempts`` pins are tried from the same start.
    """
    opts = opts or FlowOptions()
    w = validate_weights(p, w)
    if validate:
        _validate_problem(p, w)
    start = time.perf_counter()
    cfg = np.array(cfg0, dtype=float)
    flows = []
    edges = p.edges
    for _ in range(len(edges) + 1):
        d = edge_distances(p, cfg)
        gaps = np.array([d[k] - w[e] for k, e in enumerate(edges)])
        if np.any(gaps < -max(opts.tol_target, 1e-9)):
            k = int(np.argmin(gaps))
            raise PreconditionError(f"configuration is not w-bounded at edge {edges[k]} (d = {d[k]!r})")
        todo = [k for k in np.argsort(-gaps, kind="stable") if gaps[k] > opts.tol_target]
        if not todo:
            break
        e = edges[todo[0]]
        cands = list(pins) if pins is not None else pin_candidates(p, cfg, e)
        cands = [f for f in cands if not set(e) <= set(f)]
        if not cands:
            raise NoValidPin(f"no admissible pinned face for edge {e}")
        last_exc = None
        for face in cands[: max(1, opts.pin_attempts)]:
            try:
                cfg_new, trace = integrate_edge_flow(
                    p, cfg, face, e, w[e], opts, None if on_step is None else (lambda r, k=len(flows): on_step(k, r))
                )
                break
            except (IllConditioned, SingularAtPin) as exc:
                log.info("flow on %s with pin %s failed: %s", e, face, exc)
                last_exc = exc
        else:
            raise last_exc
        cfg = cfg_new
        flows.append(trace)
    else:
        raise NonConvergent("edge schedule did not terminate")
    d = edge_distances(p, cfg)
    residuals = {e: abs(float(d[k]) - w[e]) for k, e in enumerate(edges)}
    rep = monitor_report(p, cfg, tol_inv=opts.monitor_tol)
    return SolveReport(cfg, w, residuals, flows, sum(f.steps for f in flows), time.perf_counter() - start, monitors=rep)


def _limit_face(p: TriangulatedPolyhedron, quad):
    """For a zero 4-cycle bounding two faces, return the oriented face ``ijk``
    and the vertices ``(i, j, k, l)`` with ``jk`` the shared diagonal."""
    v0, v1, v2, v3 = quad
    if p.is_face((v0, v1, v2)) and p.is_face((v0, v2, v3)):
        j, k, i, l = v0, v2, v1, v3
    else:
        j, k, i, l = v1, v3, v2, v0
    face = next(f for f in p.faces if set(f) == {i, j, k})
    return face, (i, j, k, l)


def epsilon_weights(p, w, ijk, eps) -> dict:
    """``w_eps``: zero on ``ij`` and ``ki``, ``w(jk)`` on ``jk``, ``max(eps, w)``
    elsewhere (``eps = 1`` gives 1 elsewhere)."""
    i, j, k = ijk
    fixed = {edge_key(i, j): 0.0, edge_key(k, i): 0.0, edge_key(j, k): w[edge_key(j, k)]}
    if eps >= 1.0:
        return {e: fixed.get(e, 1.0) for e in p.edges}
    return {e: fixed.get(e, max(eps, w[e])) for e in p.edges}


def epsilon_schedule(
    p: TriangulatedPolyhedron,
    w: dict,
    cfg0,
    opts: FlowOptions | None = None,
    eps_min=EPS_MIN,
    tol_limit=TOL_LIMIT,
    on_level=None,
    on_step=None,
) -> SolveReport:
    """Approach weights with all-zero 4-cycles through ``w_1, w_1/2, w_1/4, ...``.

    The first level corrects the face ``ijk`` of a zero 4-cycle from tangency;
    later levels keep ``ijk`` pinned and lower the remaining edges towards
    ``max(eps, w)``.  Stops when the residual against ``w`` is below
    ``tol_limit`` or ``eps`` drops under ``eps_min``.  ``report.levels``
    lists ``(eps, residual, flows)`` per level.

    Raises
    ------
    NonConvergent
        The residual failed to decrease over three consecutive halvings.
    """
    opts = opts or FlowOptions()
    w = validate_weights(p, w)
    quads = zero_quadrilaterals(p, w)
    if not quads:
        return schedule_edges(p, w, cfg0, opts, on_step=on_step)
    _validate_problem(p, w, strict=False)
    start = time.perf_counter()
    face, (i, j, k, _l) = _limit_face(p, quads[0])

    def residual(cfg):
        d = edge_distances(p, cfg)
        return max(abs(float(d[n]) - w[e]) for n, e in enumerate(p.edges))

    rep = schedule_edges(p, epsilon_weights(p, w, (i, j, k), 1.0), cfg0, opts, on_step=on_step)
    cfg, flows = rep.cfg, list(rep.flows)
    levels = [(1.0, residual(cfg), len(rep.flows))]
    if on_level:
        on_level(*levels[-1])
    eps, stalls = 0.5, 0
    while levels[-1][1] >= tol_limit and eps >= eps_min:
        rep = schedule_edges(p, epsilon_weights(p, w, (i, j, k), eps), cfg, opts, pins=[face], on_step=on_step, validate=False)
        cfg = rep.cfg
        flows.extend(rep.flows)
        levels.append((eps, residual(cfg), len(rep.flows)))
        if on_level:
            on_level(*levels[-1])
        stalls = stalls + 1 if levels[-1][1] > 0.99 * levels[-2][1] else 0
        if stalls >= 3:
            raise NonConvergent(f"residual stalled at {levels[-1][1]:.3e} for three halvings")
        eps /= 2.0
    d = edge_distances(p, cfg)
    residuals = {e: abs(float(d[n]) - w[e]) for n, e in enumerate(p.edges)}
    mon = monitor_report(p, cfg, tol_inv=opts.monitor_tol)
    return SolveReport(cfg, w, residuals, flows, sum(f.steps for f in flows), time.perf_counter() - start, levels, mon)


def solve(p: TriangulatedPolyhedron, w: dict, cfg0=None, opts: FlowOptions | None = None, on_step=None, on_level=None) -> SolveReport:
    """Full pipeline: validate, bootstrap a tangency packing, then flow."""
    from .bootstrap import bootstrap

    w = validate_weights(p, w)
    _validate_problem(p, w, strict=False)
    if cfg0 is None:
        cfg0 = bootstrap(p)
    if strictly_shallow_check(p, w):
        return schedule_edges(p, w, cfg0, opts, on_step=on_step)
    return epsilon_schedule(p, w, cfg0, opts, on_level=on_level, on_step=on_step)


# ---------------------------------------------------------------------------


@dataclass
class Stage:
    cfg: np.ndarray
    face: tuple
    edge: tuple
    velocity: np.ndarray
    d_e: float


def flow_stages(p: TriangulatedPolyhedron, cfg, face, edge, target, n_stages=4, opts: FlowOptions | None = None) -> list:
    """Snapshots of one flow at evenly spaced values of ``d(e)`` from its start
    to ``target``, each with the velocity field at that moment."""
    opts = opts or FlowOptions()
    e = edge_key(*edge)
    d0 = float(pairwise_inversive(cfg)[e])
    out = []
    cur = np.array(cfg, dtype=float)
    for s, tgt in enumerate(np.linspace(d0, target, n_stages)):
        if s > 0:
            cur, _ = integrate_edge_flow(p, cur, face, e, float(tgt), opts)
        vel = configuration_velocity(p, cur, face, e, opts.cond_max)
        out.append(Stage(cur, tuple(face), e, vel, float(pairwise_inversive(cur)[e])))
    return out


def with_tolerance(opts: FlowOptions | None, **kw) -> FlowOptions:
    return replace(opts or FlowOptions(), **kw)
