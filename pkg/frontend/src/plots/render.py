"""Renderers for the five documented CSV schemas.

Each plot kind validates the header of its input CSV before drawing; a
mismatch raises SchemaError.  Rendering is deterministic: the Agg backend
is forced and the PNG "Software" chunk is suppressed, so identical inputs
give identical bytes.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class SchemaError(ValueError):
    """The input CSV does not match the schema of the requested plot kind."""


@dataclass(frozen=True)
class PlotJob:
    kind: str
    input_path: str
    output_path: str


def _read_table(path: str):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}")
    if not rows:
        raise SchemaError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    if not body:
        raise SchemaError(f"{path} has a header but no data rows")
    try:
        data = np.array([[float(v) for v in row] for row in body])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric data ({exc})")
    if data.shape[1] != len(header):
        raise SchemaError(f"{path}: ragged rows")
    return header, data


def _check_header(header, first, pattern, path, min_cols=2):
    if len(header) < min_cols or header[0] != first:
        raise SchemaError(
            f"{path}: expected columns [{first}, {pattern}...], got {header[:4]}")
    rx = re.compile(pattern)
    for name in header[1:]:
        if not rx.fullmatch(name):
            raise SchemaError(f"{path}: unexpected column {name!r}")


def _new_axes():
    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=150)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    # dropping the Software chunk leaves only content-derived bytes
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)


def render_spacetime(job: PlotJob):
    """Pseudocolor u(x, t) from a trajectory CSV (t, x0..x{M-1})."""
    header, data = _read_table(job.input_path)
    _check_header(header, "t", r"(u[12]_)?x\d+", job.input_path)
    t = data[:, 0]
    u = data[:, 1:]
    x = np.linspace(0.0, 2.0 * np.pi, u.shape[1], endpoint=False)
    fig, ax = _new_axes()
    mesh = ax.pcolormesh(x, t, u, shading="nearest", cmap="viridis",
                         rasterized=True)
    fig.colorbar(mesh, ax=ax, label="u")
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    _save(fig, job.output_path)


def render_bifurcation(job: PlotJob):
    """Branch diagram from an equilibria CSV (param, L2norm, stable, c)."""
    header, data = _read_table(job.input_path)
    if header != ["param", "L2norm", "stable", "c"]:
        raise SchemaError(
            f"{job.input_path}: expected [param, L2norm, stable, c], got {header}")
    param, l2, stable = data[:, 0], data[:, 1], data[:, 2].astype(int)
    fig, ax = _new_axes()
    ax.plot(param, l2, color="0.6", lw=1.0, zorder=1)
    styles = {1: ("tab:blue", "stable"), 0: ("tab:red", "unstable"),
              -1: ("0.4", "unclassified")}
    for code, (color, label) in styles.items():
        mask = stable == code
        if mask.any():
            ax.scatter(param[mask], l2[mask], s=18, color=color, label=label,
                       zorder=2)
    ax.set_xlabel("parameter")
    ax.set_ylabel(r"$\|u\|_{L^2}$")
    ax.legend(loc="best")
    _save(fig, job.output_path)


def render_controls(job: PlotJob):
    """Control-amplitude traces from a controls CSV (t, f1..fm)."""
    header, data = _read_table(job.input_path)
    _check_header(header, "t", r"(u[12]_)?f\d+", job.input_path)
    t = data[:, 0]
    fig, ax = _new_axes()
    for j, name in enumerate(header[1:]):
        ax.plot(t, data[:, j + 1], lw=0.9, label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("control amplitude")
    if len(header) <= 9:              # legends for small actuator counts only
        ax.legend(loc="best", fontsize=8)
    _save(fig, job.output_path)


def render_snapshot(job: PlotJob):
    """Controlled profile vs target from a snapshot CSV (x, controlled, target)."""
    header, data = _read_table(job.input_path)
    if header != ["x", "controlled", "target"]:
        raise SchemaError(
            f"{job.input_path}: expected [x, controlled, target], got {header}")
    x = data[:, 0]
    fig, ax = _new_axes()
    ax.plot(x, data[:, 2], "k--", lw=1.4, label="target")
    ax.plot(x, data[:, 1], "r-", lw=1.2, label="controlled")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.set_xlim(x.min(), x.max())
    ax.legend(loc="best")
    _save(fig, job.output_path)


def render_placement(job: PlotJob):
    """Actuator-position dot strips per iterate from a placement CSV."""
    header, data = _read_table(job.input_path)
    m = len(header) - 3
    expect = ["iter", "cost", "control_energy"] + [f"x{j+1}" for j in range(m)]
    if m < 1 or header != expect:
        raise SchemaError(
            f"{job.input_path}: expected [iter, cost, control_energy, x1..], "
            f"got {header}")
    iters = data[:, 0]
    pos = data[:, 3:]
    fig, ax = _new_axes()
    for i, row in zip(iters, pos):
        ax.scatter(row, np.full(m, i), s=24, color="tab:blue")
    ax.set_xlim(0.0, 2.0 * np.pi)
    ax.set_xlabel("actuator position")
    ax.set_ylabel("iteration")
    ax.set_yticks(iters)
    twin = ax.twinx()
    twin.plot(np.zeros(0), np.zeros(0))      # keep the twin axis deterministic
    twin.set_ylim(ax.get_ylim())
    twin.set_yticks(iters)
    twin.set_yticklabels([f"{c:.3g}" for c in data[:, 1]])
    twin.set_ylabel("cost")
    _save(fig, job.output_path)


KINDS = {
    "spacetime": render_spacetime,
    "bifurcation": render_bifurcation,
    "controls": render_controls,
    "snapshot": render_snapshot,
    "placement": render_placement,
}


def render(job: PlotJob):
    """Render one plot job; raises SchemaError on input mismatch."""
    try:
        fn = KINDS[job.kind]
    except KeyError:
        raise SchemaError(f"unknown plot kind {job.kind!r}")
    fn(job)
