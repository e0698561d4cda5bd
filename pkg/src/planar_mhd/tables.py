"""Plain-text state tables.

One row per cell, eight columns: x, rho, u, w1, w2, b1, b2, theta.  Values
are written with 17 significant digits so a write/read round trip is exact.
Lines starting with '#' are comments; a '# time = <t>' header carries the
snapshot instant.
"""

from __future__ import annotations

import numpy as np

COLUMNS = ("x", "rho", "u", "w1", "w2", "b1", "b2", "theta")


def format_float(v):
    return f"{v:.17g}"


def write_state_table(path, grid, state):
    cols = np.column_stack([
        grid.cell_centers,
        state.rho,
        state.u,
        state.w[:, 0],
        state.w[:, 1],
        state.b[:, 0],
        state.b[:, 1],
        state.theta,
    ])
    with open(path, "w") as fh:
        fh.write(f"# time = {format_float(state.time)}\n")
        fh.write("# columns: " + " ".join(COLUMNS) + "\n")
        for row in cols:
            fh.write(" ".join(format_float(v) for v in row) + "\n")


def read_state_table(path):
    """Read a state table; returns (time, x, fields dict)."""
    time = 0.0
    rows = []
    with open(path) as fh:
        for line in fh:
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                body = stripped[1:].strip()
                if body.startswith("time") and "=" in body:
                    time = float(body.split("=", 1)[1])
                continue
            parts = stripped.split()
            if len(parts) != len(COLUMNS):
                raise ValueError(
                    f"{path}: expected {len(COLUMNS)} columns per row, got {len(parts)}"
                )
            rows.append([float(p) for p in parts])
    if not rows:
        raise ValueError(f"{path}: table contains no data rows")
    data = np.asarray(rows, dtype=float)
    fields = {name: data[:, j].copy() for j, name in enumerate(COLUMNS)}
    x = fields.pop("x")
    return time, x, fields
