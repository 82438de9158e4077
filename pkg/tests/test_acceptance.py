"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (or ``python
tests/test_acceptance.py``); the lines are repeated in the terminal summary.
"""
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import record_criterion
from katflow.bootstrap import bootstrap
from katflow.checks import edge_distances, monitor_report
from katflow.cli import check_solution, main
from katflow.complex import icosahedron, kat_conditions_check, octahedron, random_triangulation, uniform_weights
from katflow.fileio import ProblemFile, make_solution
from katflow.flow import epsilon_schedule, flow_stages, integrate_edge_flow, pin_candidates, schedule_edges
from katflow.geometry import (
    PlanarDisk,
    inversive_distance,
    inversive_distance_planar,
    lorentz_inner,
    orthodisk_vector,
    random_lorentz,
    random_rotation,
    stereographic_lift,
)
from katflow.render import render_svg
from katflow.rigidity import assemble_rigidity, measurement, numeric_rank, unmarked_matrix

GOLDEN = Path(__file__).parent / "golden"


def cap(center, rho):
    c = np.asarray(center, float) / np.linalg.norm(center)
    return np.concatenate([[np.cos(rho) / np.sin(rho)], c / np.sin(rho)])


def kat_random_weights(p, rng, lo=0.2, hi=1.0):
    while True:
        w = {e: float(rng.uniform(lo, hi)) for e in p.edges}
        if kat_conditions_check(p, w).ok:
            return w


# ---------------------------------------------------------------------------


def test_criterion_1_geometry_kernel():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    lift_err = 0.0
    for _ in range(1000):
        p, q = (
            PlanarDisk.circle(*rng.uniform(-2, 2, 2), rng.uniform(0.2, 2) * rng.choice([-1, 1])) for _ in range(2)
        )
        want = inversive_distance_planar(p, q)
        lift_err = max(lift_err, abs(inversive_distance(stereographic_lift(p), stereographic_lift(q)) - want))
    lor_err = 0.0
    for _ in range(1000):
        d1, d2 = (cap(rng.normal(size=3), rng.uniform(0.1, 3.0)) for _ in range(2))
        m = random_lorentz(rng)
        lor_err = max(lor_err, abs(inversive_distance(m @ d1, m @ d2) - inversive_distance(d1, d2)))
    ortho_err, n_triples = 0.0, 0
    while n_triples < 1000:
        t = np.array([cap(rng.normal(size=3), rng.uniform(0.3, 2.8)) for _ in range(3)])
        s = np.linalg.svd(t, compute_uv=False)
        if s[2] < 0.1 * s[0]:
            continue  # keep the triples well conditioned
        n_triples += 1
        c = orthodisk_vector(*t)
        ortho_err = max(ortho_err, np.abs(lorentz_inner(c / np.linalg.norm(c), t)).max())
    elapsed = time.perf_counter() - start
    ok = lift_err < 1e-10 and lor_err < 1e-10 and ortho_err < 1e-12 and elapsed < 10
    detail = f"lift {lift_err:.1e}, lorentz {lor_err:.1e}, orthodisk {ortho_err:.1e}, {elapsed:.1f} s"
    assert record_criterion(1, "geometry kernel properties", ok, detail)


def test_criterion_2_rank():
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    cases = [octahedron(), icosahedron()]
    cases += [random_triangulation(int(n), rng) for n in rng.integers(8, 31, size=5)]
    bad, worst_cond = [], 0.0
    for p in cases:
        cfg = bootstrap(p)
        J = assemble_rigidity(p, cfg)
        if numeric_rank(J) != 4 * p.n - 6:
            bad.append((p.n, "rank"))
        for f in p.faces:
            cond = np.linalg.cond(unmarked_matrix(J, f))
            worst_cond = max(worst_cond, cond)
            if not cond < 1e8:
                bad.append((p.n, f))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 30
    sizes = ",".join(str(p.n) for p in cases)
    detail = f"n = {sizes}; max cond(J_u) {worst_cond:.2e}; failures {bad}; {elapsed:.1f} s"
    assert record_criterion(2, "rank 4n-6 and nonsingular J_u for every pin", ok, detail)


def test_criterion_3_single_edge_flow():
    start = time.perf_counter()
    p = octahedron()
    cfg0 = bootstrap(p)
    edge = (0, 2)
    face = pin_candidates(p, cfg0, edge)[0]
    k = p.edge_index[edge]
    drift, monitors_ok, radii = [], True, []

    def on_step(rec):
        nonlocal monitors_ok
        monitors_ok &= rec.monitors["geodesic"] and rec.monitors["strictly_convex"]
        radii.append(rec.min_radius)

    cfg, trace = integrate_edge_flow(p, cfg0, face, edge, 0.5, on_step=on_step)
    d = edge_distances(p, cfg)
    end_err = abs(d[k] - 0.5)
    other = float(np.abs(np.delete(d, k) - np.delete(edge_distances(p, cfg0), k)).max())
    drift = max(other, trace.max_drift)
    elapsed = time.perf_counter() - start
    ok = end_err < 1e-8 and drift < 1e-8 and monitors_ok and min(radii) > 1e-3 and elapsed < 5
    detail = (
        f"{trace.steps} steps, |d(e)-0.5| {end_err:.1e}, drift {drift:.1e}, "
        f"min radius {min(radii):.3f}, {elapsed:.2f} s"
    )
    assert record_criterion(3, "single-edge flow on the octahedron", ok, detail)


@pytest.fixture(scope="module")
def icosahedron_runs():
    start = time.perf_counter()
    p = icosahedron()
    cfg0 = bootstrap(p)
    rng = np.random.default_rng(404)
    runs = []
    for _ in range(20):
        w = kat_random_weights(p, rng)
        steps_ok = []
        rep = schedule_edges(
            p, w, cfg0, on_step=lambda k, r: steps_ok.append(r.monitors["geodesic"] and r.monitors["strictly_convex"])
        )
        runs.append((w, rep, all(steps_ok)))
    return p, runs, time.perf_counter() - start


def test_criterion_4_full_solve(icosahedron_runs):
    p, runs, elapsed = icosahedron_runs
    worst = max(rep.max_residual for _, rep, _ in runs)
    most_flows = max(rep.n_flows for _, rep, _ in runs)
    mon = all(ok and rep.monitors.passed() for _, rep, ok in runs)
    ok = worst < 1e-8 and most_flows <= p.m and mon and elapsed < 300
    detail = f"20 runs, max residual {worst:.1e}, max flows {most_flows}/{p.m}, monitors {mon}, {elapsed:.1f} s"
    assert record_criterion(4, "strictly shallow solves on the icosahedron", ok, detail)


def test_criterion_5_invariance(icosahedron_runs, tmp_path):
    p, runs, _ = icosahedron_runs
    rng = np.random.default_rng(505)
    worst, checks_ok = 0.0, True
    for w, rep, _ in runs:
        rot = random_rotation(rng)
        moved = rep.cfg @ rot.T
        worst = max(worst, float(np.abs(edge_distances(p, moved) - edge_distances(p, rep.cfg)).max()))
        prob = ProblemFile.from_weights(p, w).dumps()
        sol = make_solution(p, moved, monitor_report(p, moved), prob)
        with open(tmp_path / "check.txt", "w") as log:
            checks_ok &= check_solution(sol, prob, out=log)
    ok = worst < 1e-10 and checks_ok
    detail = f"max change {worst:.1e} over 20 rotated solutions, check passes {checks_ok}"
    assert record_criterion(5, "rotation invariance and re-check", ok, detail)


def test_criterion_6_epsilon_limit():
    start = time.perf_counter()
    p = octahedron()
    w = uniform_weights(p, 0.5)
    for e in ((0, 2), (0, 3), (3, 4), (2, 4)):
        w[e] = 0.0  # zero 4-cycle around the faces (0, 2, 4) and (0, 4, 3)
    rep = epsilon_schedule(p, w, bootstrap(p))
    res = {eps: r for eps, r, _ in rep.levels}
    listed = [res[2.0**-k] for k in range(11)]
    monotone = all(b < a for a, b in zip(listed, listed[1:]))
    final = rep.levels[-1][1]
    elapsed = time.perf_counter() - start
    ok = monotone and final < 1e-4 and elapsed < 600
    detail = (
        f"residual {listed[0]:.2e} at eps=1 -> {listed[-1]:.2e} at eps=2^-10 (monotone {monotone}); "
        f"final {final:.2e} at eps={rep.levels[-1][0]:.2e}; {elapsed:.1f} s"
    )
    assert record_criterion(6, "epsilon-limit for a non-strictly-shallow target", ok, detail)


def test_criterion_7_jacobian():
    rng = np.random.default_rng(707)
    octa, ico = octahedron(), icosahedron()
    rt = random_triangulation(15, rng)
    configs = [
        (octa, bootstrap(octa)),
        (ico, bootstrap(ico)),
        (rt, bootstrap(rt)),
        (octa, schedule_edges(octa, uniform_weights(octa, 0.5), bootstrap(octa)).cfg),
        (ico, schedule_edges(ico, kat_random_weights(ico, rng), bootstrap(ico)).cfg),
    ]
    h, worst = 1e-6, 0.0
    for p, cfg in configs:
        J = assemble_rigidity(p, cfg).matrix
        for _ in range(100):
            v = rng.normal(size=cfg.shape)
            v /= np.linalg.norm(v)
            fd = (measurement(p, cfg + h * v) - measurement(p, cfg - h * v)) / (2 * h)
            jv = J @ v.ravel()
            worst = max(worst, np.linalg.norm(fd - jv) / np.linalg.norm(jv))
    ok = worst < 1e-5
    assert record_criterion(7, "Jacobian against central differences", ok, f"max relative error {worst:.1e}")


def test_criterion_8_figure(tmp_path):
    p = octahedron()
    w = uniform_weights(p, 0.5)
    cfg0 = bootstrap(p)
    rep = schedule_edges(p, w, cfg0)
    first = rep.flows[0]
    problems = []
    svgs = []
    for s, st in enumerate(flow_stages(p, cfg0, first.face, first.edge, w[first.edge], n_stages=4)):
        svg = render_svg(st.cfg, p, face=st.face, free_edge=st.edge, velocity=st.velocity)
        again = render_svg(st.cfg, p, face=st.face, free_edge=st.edge, velocity=st.velocity)
        counts = {c: svg.count(f'class="{c}"') for c in ("disk", "edge", "free-edge", "velocity")}
        if counts != {"disk": 6, "edge": 11, "free-edge": 1, "velocity": 3}:
            problems.append((s, counts))
        golden = GOLDEN / f"stage{s}.svg"
        if os.environ.get("KATFLOW_UPDATE_GOLDEN"):
            golden.write_text(svg)
        if svg != again or svg != golden.read_text():
            problems.append((s, "bytes"))
        svgs.append(svg)
    # the CLI renders the same four stages from the problem file
    prob = tmp_path / "octa.json"
    prob.write_text(ProblemFile.from_weights(p, w).dumps())
    for rnd in range(2):
        main(["render", str(prob), "--stages", "4", "--velocity", "--svg", str(tmp_path / f"run{rnd}")])
    for s in range(4):
        a, b = ((tmp_path / f"run{r}_stage{s}.svg").read_text() for r in range(2))
        if not a == b == svgs[s]:
            problems.append((s, "cli"))
    ok = not problems
    detail = f"4 stages: 6 disks, highlighted free edge, 3 velocity vectors, golden bytes; problems {problems}"
    assert record_criterion(8, "flow-stage figures", ok, detail)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
