"""Rendering tests for the five CSV plot kinds."""

import math

import pytest
from click.testing import CliRunner

from plots import PlotJob, SchemaError, render
from plots.cli import main

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(repr(float(v)) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture
def golden(tmp_path):
    """Small hand-made CSVs matching each documented schema."""
    files = {}
    M, n_t = 24, 6
    x = [2 * math.pi * j / M for j in range(M)]
    files["spacetime"] = write_csv(
        tmp_path / "trajectory.csv", ["t"] + [f"x{j}" for j in range(M)],
        [[0.5 * i] + [math.sin(xi - 0.3 * i) for xi in x] for i in range(n_t)])
    files["bifurcation"] = write_csv(
        tmp_path / "branch.csv", ["param", "L2norm", "stable", "c"],
        [[0.5 - 0.05 * i, 2.0 + 0.3 * i, (i % 3) - 1, 0.0] for i in range(8)])
    files["controls"] = write_csv(
        tmp_path / "controls.csv", ["t", "f1", "f2", "f3"],
        [[0.1 * i, math.exp(-0.1 * i), -0.5 * math.exp(-0.2 * i), 0.1]
         for i in range(20)])
    files["snapshot"] = write_csv(
        tmp_path / "snapshot.csv", ["x", "controlled", "target"],
        [[xi, math.sin(xi), math.sin(xi) + 0.05] for xi in x])
    files["placement"] = write_csv(
        tmp_path / "placement.csv",
        ["iter", "cost", "control_energy", "x1", "x2", "x3"],
        [[i, 4.0 - 0.5 * i, 2.0 - 0.1 * i, 0.5 + 0.1 * i, 1.0, 1.5 - 0.1 * i]
         for i in range(4)])
    return files


KINDS = ["spacetime", "bifurcation", "controls", "snapshot", "placement"]


@pytest.mark.parametrize("kind", KINDS)
def test_renders_all_kinds(kind, golden, tmp_path):
    out = tmp_path / f"{kind}.png"
    render(PlotJob(kind, golden[kind], str(out)))
    data = out.read_bytes()
    assert data[:8] == PNG_MAGIC
    assert len(data) > 1000


@pytest.mark.parametrize("kind", KINDS)
def test_rendering_is_deterministic(kind, golden, tmp_path):
    outs = []
    for name in ("a.png", "b.png"):
        out = tmp_path / name
        render(PlotJob(kind, golden[kind], str(out)))
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_input_is_not_mutated(golden, tmp_path):
    before = open(golden["snapshot"]).read()
    render(PlotJob("snapshot", golden["snapshot"], str(tmp_path / "o.png")))
    assert open(golden["snapshot"]).read() == before


def test_unknown_kind_rejected(golden, tmp_path):
    with pytest.raises(SchemaError):
        render(PlotJob("histogram", golden["snapshot"], str(tmp_path / "o.png")))


def test_schema_mismatch_rejected(golden, tmp_path):
    # feeding a controls file to the snapshot renderer must fail cleanly
    with pytest.raises(SchemaError):
        render(PlotJob("snapshot", golden["controls"], str(tmp_path / "o.png")))
    with pytest.raises(SchemaError):
        render(PlotJob("bifurcation", golden["placement"],
                       str(tmp_path / "o.png")))


def test_empty_trajectory_rejected(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("t,x0,x1\n")
    with pytest.raises(SchemaError):
        render(PlotJob("spacetime", str(path), str(tmp_path / "o.png")))


def test_non_numeric_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,controlled,target\n0.0,hello,1.0\n")
    with pytest.raises(SchemaError):
        render(PlotJob("snapshot", str(path), str(tmp_path / "o.png")))


class TestCli:
    def test_happy_path(self, golden, tmp_path):
        out = str(tmp_path / "fig.png")
        result = CliRunner().invoke(
            main, ["spacetime", golden["spacetime"], "-o", out])
        assert result.exit_code == 0, result.output
        assert open(out, "rb").read(8) == PNG_MAGIC

    def test_bad_kind(self, golden, tmp_path):
        result = CliRunner().invoke(
            main, ["piechart", golden["spacetime"],
                   "-o", str(tmp_path / "fig.png")])
        assert result.exit_code != 0

    def test_schema_error_is_reported(self, golden, tmp_path):
        result = CliRunner().invoke(
            main, ["snapshot", golden["controls"],
                   "-o", str(tmp_path / "fig.png")])
        assert result.exit_code != 0
        assert "expected" in result.output
