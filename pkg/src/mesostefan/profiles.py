"""CSV/JSON serialization for profiles, states, and traces.

All numeric output uses 17 significant digits so that round-tripping through
text is bit-exact for doubles.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import GridError
from .grids import Grid, Profile, build_grid


def fmt(x) -> str:
    return f"{float(x):.17g}"


def profile_to_csv(profile: Profile) -> str:
    lines = ["x,value"]
    lines += [f"{fmt(x)},{fmt(v)}"
              for x, v in zip(profile.grid.points, profile.values)]
    return "\n".join(lines) + "\n"


def save_profile(path, profile: Profile):
    with open(path, "w") as fh:
        fh.write(profile_to_csv(profile))
    with open(_sidecar(path), "w") as fh:
        fh.write(profile.grid.descriptor() + "\n")


def _sidecar(path) -> str:
    root, _ = os.path.splitext(path)
    return root + ".grid.json"


def load_profile(path) -> Profile:
    x, v = load_columns(path, ("x", "value"))
    side = _sidecar(path)
    if os.path.exists(side):
        with open(side) as fh:
            d = json.load(fh)
        grid = build_grid(d["epsilon"], d["left"], d["right"], d["spacing"])
        if grid.n != x.size:
            raise GridError("grid descriptor does not match profile length")
    else:
        grid = _grid_from_points(x)
    return Profile(grid, v)


def _grid_from_points(x: np.ndarray) -> Grid:
    spacing = float(x[1] - x[0])
    if np.max(np.abs(np.diff(x) - spacing)) > 1e-9 * max(1.0, spacing):
        raise GridError("points are not equispaced")
    pts = np.asarray(x, dtype=float)
    pts.setflags(write=False)
    # epsilon is not recoverable from bare points; record a neutral 0.5
    return Grid(0.5, -pts[0] * 0.5, pts[-1] * 0.5, spacing, pts)


def load_columns(path, names) -> tuple[np.ndarray, ...]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        cols = {n: [] for n in header}
        for line in fh:
            line = line.strip()
            if not line:
                continue
            for n, tok in zip(header, line.split(",")):
                cols[n].append(float(tok))
    missing = [n for n in names if n not in cols]
    if missing:
        raise GridError(f"columns {missing} missing from {path}")
    return tuple(np.array(cols[n]) for n in names)


def state_to_csv(grid: Grid, h: np.ndarray, m: np.ndarray) -> str:
    lines = ["x,h,m"]
    lines += [f"{fmt(x)},{fmt(a)},{fmt(b)}"
              for x, a, b in zip(grid.points, h, m)]
    return "\n".join(lines) + "\n"


def save_state(path, grid: Grid, h, m):
    with open(path, "w") as fh:
        fh.write(state_to_csv(grid, h, m))
    with open(_sidecar(path), "w") as fh:
        fh.write(grid.descriptor() + "\n")


def load_state(path):
    x, h, m = load_columns(path, ("x", "h", "m"))
    side = _sidecar(path)
    if os.path.exists(side):
        with open(side) as fh:
            d = json.load(fh)
        grid = build_grid(d["epsilon"], d["left"], d["right"], d["spacing"])
    else:
        grid = _grid_from_points(x)
    return grid, h, m


def dump_json(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_coerce)
        fh.write("\n")


def _coerce(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, bool):
        return obj
    raise TypeError(f"cannot serialize {type(obj)}")
