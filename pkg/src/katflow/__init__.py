"""Circle packings on the sphere with prescribed shallow overlaps, computed by
flowing disks in de Sitter space one edge at a time."""

__version__ = "0.1.0"

from .bootstrap import bootstrap, lift_and_normalize, tangency_pack  # noqa: E402
from .checks import is_convex, is_geodesic, min_radius, monitor_report, shallow_bounds_check  # noqa: E402
from .complex import (  # noqa: E402
    TriangulatedPolyhedron,
    build_complex,
    icosahedron,
    kat_conditions_check,
    octahedron,
    random_triangulation,
    strictly_shallow_check,
    tetrahedron,
)
from .flow import FlowOptions, epsilon_schedule, integrate_edge_flow, schedule_edges, solve  # noqa: E402
from .geometry import inversive_distance, lorentz_inner, normalize_desitter  # noqa: E402
from .render import render_svg  # noqa: E402
from .rigidity import assemble_rigidity, flow_velocity, numeric_rank, square_matrix, unmarked_matrix  # noqa: E402
