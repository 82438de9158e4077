"""Shrink every octahedron edge from tangency (1) to 0.5 and watch the flows.

Writes octahedron_stage{0..3}.svg for the first flow and prints one line per
flow. Run from anywhere: ``python3 demos/octahedron_flow.py [outdir]``.
"""
import sys
from pathlib import Path

from katflow import bootstrap, octahedron, render_svg, schedule_edges
from katflow.checks import edge_distances
from katflow.complex import uniform_weights
from katflow.flow import flow_stages

out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
p = octahedron()
w = uniform_weights(p, 0.5)
cfg0 = bootstrap(p)
print(f"tangency packing: n = {p.n}, max |d - 1| = {abs(edge_distances(p, cfg0) - 1).max():.1e}")

rep = schedule_edges(p, w, cfg0)
for k, tr in enumerate(rep.flows):
    print(f"flow {k:2d}: edge {tr.edge} pin {tr.face} {tr.d0:.6f} -> {tr.target} in {tr.steps} steps")
print(f"max residual {rep.max_residual:.1e}, monitors pass: {rep.monitors.passed()}")

first = rep.flows[0]
for s, st in enumerate(flow_stages(p, cfg0, first.face, first.edge, w[first.edge])):
    path = out / f"octahedron_stage{s}.svg"
    path.write_text(render_svg(st.cfg, p, face=st.face, free_edge=st.edge, velocity=st.velocity))
    print(f"stage {s}: d(e) = {st.d_e:.4f} -> {path}")
