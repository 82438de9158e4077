"""Command line interface: ``katflow solve | check | render | bootstrap``.

Exit codes (errors are also written to stderr as one JSON object)::

    0  OK                  8  ILL_CONDITIONED
    1  INTERNAL_ERROR      9  MONITOR_VIOLATION
    2  PARSE_ERROR        10  MAX_STEPS
    3  INVALID_COMPLEX    11  NON_CONVERGENT
    4  KAT_VIOLATION      12  NO_VALID_PIN
    5  TETRAHEDRON        13  PRECONDITION
    6  INVALID_WEIGHTS    14  IO_ERROR
    7  CHECK_FAILED
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import errors as E
from .bootstrap import bootstrap
from .checks import edge_distances, monitor_report
from .complex import random_triangulation, validate_weights
from .fileio import ProblemFile, make_solution, parse_problem, parse_solution, trace_lines
from .flow import FlowOptions, pin_candidates, schedule_edges, solve, flow_stages, EPS_MIN, TOL_LIMIT
from .render import render_svg
from .rigidity import assemble_rigidity, configuration_velocity, numeric_rank, unmarked_matrix

EXIT = {
    "OK": 0,
    "INTERNAL_ERROR": 1,
    "PARSE_ERROR": 2,
    "INVALID_COMPLEX": 3,
    "KAT_VIOLATION": 4,
    "TETRAHEDRON": 5,
    "INVALID_WEIGHTS": 6,
    "CHECK_FAILED": 7,
    "ILL_CONDITIONED": 8,
    "MONITOR_VIOLATION": 9,
    "MAX_STEPS": 10,
    "NON_CONVERGENT": 11,
    "NO_VALID_PIN": 12,
    "PRECONDITION": 13,
    "IO_ERROR": 14,
}

# most specific first
_ERROR_KINDS = [
    (E.ParseError, "PARSE_ERROR"),
    ((E.NotTriangulation, E.NotThreeConnected, E.BadOrientation), "INVALID_COMPLEX"),
    (E.KatViolation, "KAT_VIOLATION"),
    (E.TetrahedronError, "TETRAHEDRON"),
    (E.IllConditioned, "ILL_CONDITIONED"),
    (E.MonitorViolation, "MONITOR_VIOLATION"),
    (E.MaxSteps, "MAX_STEPS"),
    ((E.NonConvergent, E.NormalizationFailed), "NON_CONVERGENT"),
    ((E.NoValidPin, E.SingularAtPin), "NO_VALID_PIN"),
    (E.PreconditionError, "PRECONDITION"),
    (OSError, "IO_ERROR"),
    (ValueError, "INVALID_WEIGHTS"),
]

log = logging.getLogger("katflow")


def classify_error(exc) -> str:
    for kinds, name in _ERROR_KINDS:
        if isinstance(exc, kinds):
            return name
    return "INTERNAL_ERROR"


def error_record(exc) -> dict:
    kind = classify_error(exc)
    rec = {"error": kind, "exit_code": EXIT[kind], "type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, E.KatViolation):
        rec["violations"] = [{"cycle": list(c), "angle_sum": s} for c, s in exc.violations]
    if isinstance(exc, E.MonitorViolation) and exc.report is not None:
        rec["monitor"] = exc.report.first_failure()
    if getattr(exc, "trace", None) is not None:
        rec["trace"] = exc.trace.summary()
    return json.loads(json.dumps(rec, default=lambda o: o.tolist() if hasattr(o, "tolist") else str(o)))


def _fail(exc) -> int:
    rec = error_record(exc)
    sys.stderr.write(json.dumps(rec, sort_keys=True) + "\n")
    return rec["exit_code"]


def _read(path) -> str:
    return Path(path).read_text()


def _options(prob: ProblemFile, args) -> FlowOptions:
    kw = {}
    for k in ("tol_target", "rtol", "max_steps", "cond_max"):
        if k in prob.options:
            kw[k] = prob.options[k]
    if getattr(args, "tol_target", None) is not None:
        kw["tol_target"] = args.tol_target
    return FlowOptions(**kw)


def _tolerances(opts: FlowOptions) -> dict:
    return {
        "tol_target": opts.tol_target,
        "tol_drift": opts.tol_drift,
        "rtol": opts.rtol,
        "cond_max": opts.cond_max,
        "tol_newton": opts.tol_newton,
    }


def _dump_matrices(path, p, cfg, face=None):
    J = assemble_rigidity(p, cfg)
    text = J.dump()
    if face is not None and p.n > 4:
        ju = unmarked_matrix(J, face)
        text += f"# unmarked matrix for pinned face {tuple(face)}: {ju.shape[0]}x{ju.shape[1]}\n"
        for r, c in zip(*np.nonzero(ju)):
            text += f"{r}\t{c}\t{ju[r, c]!r}\n"
    Path(path).write_text(text)


def solve_file(path, out=None, svg=None, trace=None, tol_target=None, dump=None, seed=None) -> int:
    """Solve one problem file; returns the exit code."""
    try:
        text = _read(path)
        prob = parse_problem(text)
        p = prob.complex()
        w = validate_weights(p, prob.inversive_weights())
        args = argparse.Namespace(tol_target=tol_target)
        opts = _options(prob, args)
        records = []
        levels = []
        want_trace = trace is not None or prob.options.get("trace", False)
        on_step = (lambda k, r: records.append({"flow": k, **r.to_dict()})) if want_trace else None
        rep = solve(p, w, opts=opts, on_step=on_step, on_level=lambda e, r, n: levels.append((e, r, n)))
        extra = {"flows": rep.n_flows, "steps": rep.total_steps}
        seed = seed if seed is not None else prob.options.get("seed")
        if seed is not None:
            extra["seed"] = seed  # the pipeline is deterministic; recorded for provenance only
        if rep.levels:
            extra["epsilon_levels"] = [[e, r] for e, r, _ in rep.levels]
            extra["eps_min"] = prob.options.get("eps_min", EPS_MIN)
            extra["tol_limit"] = prob.options.get("tol_limit", TOL_LIMIT)
        sol = make_solution(p, rep.cfg, rep.monitors, text, _tolerances(opts), extra)
        out = out or str(Path(path).with_suffix("")) + ".solution.json"
        Path(out).write_text(sol.dumps())
        if want_trace:
            tpath = trace or str(Path(out).with_suffix("")) + ".trace.jsonl"
            Path(tpath).write_text(trace_lines(records))
        if svg:
            face = rep.flows[-1].face if rep.flows else None
            Path(svg).write_text(render_svg(rep.cfg, p, face=face))
        if dump:
            _dump_matrices(dump, p, rep.cfg, rep.flows[-1].face if rep.flows else None)
        log.info("solved %s: %d flows, %d steps, max residual %.3e", path, rep.n_flows, rep.total_steps, rep.max_residual)
        print(json.dumps({"file": str(path), "out": out, "max_residual": rep.max_residual, "flows": rep.n_flows}))
        return 0
    except Exception as exc:  # noqa: BLE001 - every failure becomes an exit code
        return _fail(exc)


def cmd_solve(args) -> int:
    if args.batch:
        files = sorted(str(f) for f in Path(args.batch).glob("*.json") if not f.name.endswith(".solution.json"))
        if not files:
            return _fail(OSError(f"no problem files in {args.batch}"))
        with ProcessPoolExecutor(max_workers=min(len(files), os.cpu_count() or 1)) as ex:
            codes = list(ex.map(solve_file, files))
        return max(codes)
    if not args.problem:
        return _fail(E.ParseError("solve needs a problem file or --batch"))
    return solve_file(args.problem, args.out, args.svg, args.trace, args.tol_target, args.dump_matrices, args.seed)


def check_solution(sol, prob_text=None, tol_residual=1e-8, tol_norm=1e-9, out=None) -> bool:
    """Print diagnostics for a solution; True iff every check passes."""
    out = out or sys.stdout
    from .complex import build_complex

    p = build_complex(sol.faces)
    cfg = sol.disks
    ok = True
    lines = []
    if cfg.shape != (p.n, 4):
        lines.append(f"FAIL disk count {len(cfg)} != {p.n}")
        out.write("\n".join(lines) + "\n")
        return False
    norm_err = np.abs(cfg[:, 0] ** 2 - np.sum(cfg[:, 1:] ** 2, axis=1) + 1.0)
    worst = int(np.argmax(norm_err))
    good = norm_err[worst] <= tol_norm
    ok &= bool(good)
    lines.append(f"{'ok  ' if good else 'FAIL'} normalization: max |<D,D> + 1| = {norm_err[worst]:.3e} (disk {worst})")
    try:
        rep = monitor_report(p, cfg, tol_inv=1e-9)
        mon_ok = rep.passed(strict=True)
        lines.append(f"{'ok  ' if mon_ok else 'FAIL'} monitors: {json.dumps(rep.summary())}")
        if not mon_ok:
            lines.append(f"     first failure: {rep.first_failure()}")
        ok &= mon_ok
    except E.KatflowError as exc:
        lines.append(f"FAIL monitors: {exc}")
        ok = False
    J = assemble_rigidity(p, cfg)
    r = numeric_rank(J)
    lines.append(f"{'ok  ' if r == 4 * p.n - 6 else 'FAIL'} rank J = {r} (expected {4 * p.n - 6})")
    ok &= r == 4 * p.n - 6
    if p.n > 4:
        lines.append("cond(J_u) per pinned face:")
        for f in p.faces:
            lines.append(f"     {f}: {np.linalg.cond(unmarked_matrix(J, f)):.3e}")
    d = edge_distances(p, cfg)
    stored = {(i, j): v for i, j, v in sol.edges}
    if prob_text is not None:
        prob = parse_problem(prob_text)
        if sorted(map(lambda f: tuple(sorted(f)), prob.faces)) != sorted(map(lambda f: tuple(sorted(f)), sol.faces)):
            lines.append("FAIL problem and solution have different faces")
            out.write("\n".join(lines) + "\n")
            return False
        w = validate_weights(p, prob.inversive_weights())
        lines.append(f"{'edge':8s}{'achieved':24s}{'target':24s}residual")
        bad = []
        for k, e in enumerate(p.edges):
            res = abs(d[k] - w[e])
            flag = "" if res < tol_residual else "  <-- FAIL"
            if flag:
                bad.append(e)
            lines.append(f"{str(e):8s}{float(d[k])!r:24s}{w[e]!r:24s}{res:.3e}{flag}")
        ok &= not bad
        lines.append(f"{'ok  ' if not bad else 'FAIL'} residuals below {tol_residual:g}" + (f": {bad}" if bad else ""))
    else:
        mism = max((abs(d[k] - stored.get(e, np.inf)) for k, e in enumerate(p.edges)), default=0.0)
        good = mism < 1e-9
        lines.append(f"{'ok  ' if good else 'FAIL'} stored edge distances match disks (max diff {mism:.3e})")
        ok &= bool(good)
    out.write("\n".join(lines) + "\n")
    return bool(ok)


def cmd_check(args) -> int:
    try:
        sol = parse_solution(_read(args.solution))
        prob_text = _read(args.problem) if args.problem else None
        if args.dump_matrices:
            from .complex import build_complex

            _dump_matrices(args.dump_matrices, build_complex(sol.faces), sol.disks)
        ok = check_solution(sol, prob_text)
    except Exception as exc:  # noqa: BLE001
        return _fail(exc)
    if not ok:
        sys.stderr.write(json.dumps({"error": "CHECK_FAILED", "exit_code": EXIT["CHECK_FAILED"]}) + "\n")
        return EXIT["CHECK_FAILED"]
    return 0


def cmd_render(args) -> int:
    try:
        text = _read(args.input)
        obj = json.loads(text)
        from .complex import build_complex

        if obj.get("version", "").startswith("katflow-problem"):
            prob = parse_problem(text)
            p, w = prob.validated()
            cfg0 = bootstrap(p)
            gaps = edge_distances(p, cfg0) - np.array([w[e] for e in p.edges])
            k = int(np.argmax(gaps))
            if gaps[k] <= 0:
                raise E.PreconditionError("all edges already at their targets; nothing to flow")
            e = p.edges[k]
            face = pin_candidates(p, cfg0, e)[0]
            stages = flow_stages(p, cfg0, face, e, w[e], n_stages=args.stages or 4)
            prefix = args.svg or str(Path(args.input).with_suffix(""))
            for s, st in enumerate(stages):
                Path(f"{prefix}_stage{s}.svg").write_text(
                    render_svg(st.cfg, p, face=st.face, free_edge=st.edge, velocity=st.velocity if args.velocity else None)
                )
            return 0
        sol = parse_solution(text)
        p = build_complex(sol.faces)
        face = tuple(args.pin) if args.pin else None
        edge = tuple(args.edge) if args.edge else None
        vel = None
        if edge is not None and args.velocity:
            face = face or pin_candidates(p, sol.disks, edge)[0]
            vel = configuration_velocity(p, sol.disks, face, edge)
        svg = render_svg(sol.disks, p, face=face, free_edge=edge, velocity=vel)
        Path(args.svg or str(Path(args.input).with_suffix("")) + ".svg").write_text(svg)
        return 0
    except json.JSONDecodeError as exc:
        return _fail(E.ParseError(f"invalid JSON: {exc}"))
    except Exception as exc:  # noqa: BLE001
        return _fail(exc)


def cmd_bootstrap(args) -> int:
    try:
        if args.random:
            rng = np.random.default_rng(args.seed)
            p = random_triangulation(args.random, rng)
            text = json.dumps({"random": args.random, "seed": args.seed})
        else:
            if not args.problem:
                raise E.ParseError("bootstrap needs a problem file or --random N")
            text = _read(args.problem)
            p = parse_problem(text).complex()
        cfg = bootstrap(p)
        rep = monitor_report(p, cfg, mode="strict", tol_inv=1e-9)
        extra = {"seed": args.seed} if args.random else None
        sol = make_solution(p, cfg, rep, text, {"tol_tangency": 1e-10}, extra)
        out = args.out or "bootstrap.solution.json"
        Path(out).write_text(sol.dumps())
        if args.svg:
            Path(args.svg).write_text(render_svg(cfg, p, face=p.faces[0]))
        if args.dump_matrices:
            _dump_matrices(args.dump_matrices, p, cfg)
        return 0
    except Exception as exc:  # noqa: BLE001
        return _fail(exc)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="katflow", description="Circle packings with prescribed overlaps on the sphere.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("solve", help="solve a problem file")
    s.add_argument("problem", nargs="?")
    s.add_argument("--out")
    s.add_argument("--svg")
    s.add_argument("--trace", help="write the flow trace as JSON lines")
    s.add_argument("--tol-target", type=float, dest="tol_target")
    s.add_argument("--seed", type=int, help="recorded in the provenance (the solver itself is deterministic)")
    s.add_argument("--batch", help="solve every *.json problem in a directory")
    s.add_argument("--dump-matrices", dest="dump_matrices")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("check", help="diagnose a solution file")
    c.add_argument("solution")
    c.add_argument("problem", nargs="?")
    c.add_argument("--dump-matrices", dest="dump_matrices")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("render", help="draw a solution, or the flow stages of a problem")
    r.add_argument("input")
    r.add_argument("--svg", help="output file (solution) or prefix (problem)")
    r.add_argument("--edge", type=int, nargs=2)
    r.add_argument("--pin", type=int, nargs=3)
    r.add_argument("--velocity", action="store_true")
    r.add_argument("--stages", type=int)
    r.set_defaults(func=cmd_render)

    b = sub.add_parser("bootstrap", help="tangency packing of a complex")
    b.add_argument("problem", nargs="?")
    b.add_argument("--random", type=int, help="random triangulation with this many vertices")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.add_argument("--svg")
    b.add_argument("--dump-matrices", dest="dump_matrices")
    b.set_defaults(func=cmd_bootstrap)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
