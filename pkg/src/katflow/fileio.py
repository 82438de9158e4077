"""Problem and solution files (JSON) and flow traces (JSON lines).

Floats are written with Python's ``repr``, the shortest decimal string that
reads back as the same double, so both files round-trip bit for bit.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .complex import TriangulatedPolyhedron, build_complex, edge_key, validate_weights
from .errors import ParseError

PROBLEM_VERSION = "katflow-problem/1"
SOLUTION_VERSION = "katflow-solution/1"
UNITS = ("inversive", "angle_radians", "angle_degrees")
OPTION_KEYS = {
    "tol_target": float,
    "rtol": float,
    "max_steps": int,
    "cond_max": float,
    "eps_min": float,
    "tol_limit": float,
    "seed": int,
    "trace": bool,
}


def _require(cond, msg):
    if not cond:
        raise ParseError(msg)


def _check_keys(obj, allowed, what):
    _require(isinstance(obj, dict), f"{what} must be a JSON object")
    unknown = sorted(set(obj) - set(allowed))
    _require(not unknown, f"unknown field(s) in {what}: {', '.join(unknown)}")


def _number(x, what):
    _require(isinstance(x, (int, float)) and not isinstance(x, bool), f"{what} must be a number")
    return float(x)


def _faces(raw):
    _require(isinstance(raw, list) and raw, "faces must be a non-empty list")
    out = []
    for f in raw:
        _require(
            isinstance(f, list) and len(f) == 3 and all(isinstance(v, int) and not isinstance(v, bool) for v in f),
            f"face {f!r} must be a list of three integers",
        )
        out.append(tuple(f))
    return out


@dataclass
class ProblemFile:
    faces: list
    weights: list  # (i, j, value, unit) as given
    options: dict = field(default_factory=dict)
    version: str = PROBLEM_VERSION

    def complex(self) -> TriangulatedPolyhedron:
        return build_complex(self.faces)

    def inversive_weights(self) -> dict:
        """Weights converted to inversive distances, keyed by sorted edge."""
        out = {}
        for i, j, v, unit in self.weights:
            e = edge_key(i, j)
            if e in out:
                raise ValueError(f"edge {e} weighted twice")
            if unit == "inversive":
                out[e] = float(v)
            elif unit == "angle_radians":
                out[e] = float(np.cos(v))
            else:
                out[e] = float(np.cos(np.deg2rad(v)))
            # overlap angles of exactly pi/2 must give exact zeros
            if unit != "inversive" and abs(out[e]) < 1e-15:
                out[e] = 0.0
        return out

    def validated(self):
        p = self.complex()
        return p, validate_weights(p, self.inversive_weights())

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "faces": [list(f) for f in self.faces],
            "weights": [[i, j, v, u] for i, j, v, u in self.weights],
            "options": dict(self.options),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"

    @classmethod
    def from_weights(cls, p: TriangulatedPolyhedron, w: dict, options=None):
        return cls([list(f) for f in p.faces], [[i, j, float(w[(i, j)]), "inversive"] for i, j in p.edges], dict(options or {}))


def parse_problem(text: str) -> ProblemFile:
    """Parse and schema-check a problem file (no geometric validation).

    Raises
    ------
    ParseError
        Malformed JSON, a missing or unknown field, or a wrongly typed value.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    _check_keys(obj, {"version", "faces", "weights", "options"}, "problem")
    _require(obj.get("version") == PROBLEM_VERSION, f"version must be {PROBLEM_VERSION!r}")
    _require("faces" in obj and "weights" in obj, "problem needs faces and weights")
    faces = _faces(obj["faces"])
    weights = []
    _require(isinstance(obj["weights"], list), "weights must be a list")
    for item in obj["weights"]:
        _require(isinstance(item, list) and len(item) in (3, 4), f"weight {item!r} must be [i, j, value, unit]")
        i, j, v = item[:3]
        unit = item[3] if len(item) == 4 else "inversive"
        _require(all(isinstance(x, int) and not isinstance(x, bool) for x in (i, j)), f"weight {item!r}: bad vertex")
        _require(unit in UNITS, f"weight {item!r}: unit must be one of {UNITS}")
        weights.append((i, j, _number(v, f"weight {item!r}"), unit))
    opts = obj.get("options", {})
    _check_keys(opts, OPTION_KEYS, "options")
    clean = {}
    for k, v in opts.items():
        typ = OPTION_KEYS[k]
        if typ is bool:
            _require(isinstance(v, bool), f"option {k} must be a boolean")
        elif typ is int:
            _require(isinstance(v, int) and not isinstance(v, bool), f"option {k} must be an integer")
        else:
            v = _number(v, f"option {k}")
        clean[k] = v
    return ProblemFile(faces, weights, clean, obj["version"])


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class SolutionFile:
    faces: list
    disks: np.ndarray
    edges: list  # (i, j, d)
    monitors: dict
    provenance: dict
    version: str = SOLUTION_VERSION

    @property
    def n(self) -> int:
        return len(self.disks)

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "faces": [list(f) for f in self.faces],
            "disks": [[float(x) for x in row] for row in self.disks],
            "edges": [[int(i), int(j), float(d)] for i, j, d in self.edges],
            "monitors": self.monitors,
            "provenance": self.provenance,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"

    def __eq__(self, other):
        return isinstance(other, SolutionFile) and self.to_json() == other.to_json()


def parse_solution(text: str) -> SolutionFile:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    _check_keys(obj, {"version", "faces", "disks", "edges", "monitors", "provenance"}, "solution")
    _require(obj.get("version") == SOLUTION_VERSION, f"version must be {SOLUTION_VERSION!r}")
    for k in ("faces", "disks", "edges"):
        _require(k in obj, f"solution needs {k}")
    faces = _faces(obj["faces"])
    disks = obj["disks"]
    _require(
        isinstance(disks, list) and all(isinstance(r, list) and len(r) == 4 for r in disks),
        "disks must be a list of [a, b, c, d]",
    )
    arr = np.array([[_number(x, "disk coordinate") for x in r] for r in disks]).reshape(-1, 4)
    edges = []
    for item in obj["edges"]:
        _require(isinstance(item, list) and len(item) == 3, f"edge entry {item!r} must be [i, j, d]")
        edges.append((int(item[0]), int(item[1]), _number(item[2], "edge distance")))
    return SolutionFile(
        [list(f) for f in faces], arr, edges, obj.get("monitors", {}), obj.get("provenance", {}), obj["version"]
    )


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def make_solution(p: TriangulatedPolyhedron, cfg, monitors=None, input_text="", tolerances=None, extra=None) -> SolutionFile:
    from .checks import edge_distances

    cfg = np.asarray(cfg, dtype=float)
    d = edge_distances(p, cfg)
    prov = {
        "input_sha256": sha256_text(input_text),
        "software": f"katflow {__version__}",
        "tolerances": _jsonable(tolerances or {}),
    }
    if extra:
        prov.update(_jsonable(extra))
    mon = _jsonable(monitors.to_dict() if hasattr(monitors, "to_dict") else (monitors or {}))
    return SolutionFile(
        [list(f) for f in p.faces], cfg.copy(), [(i, j, float(d[k])) for k, (i, j) in enumerate(p.edges)], mon, prov
    )


def trace_lines(records) -> str:
    """JSON-lines text, one object per record."""
    return "".join(json.dumps(_jsonable(r), sort_keys=True) + "\n" for r in records)
