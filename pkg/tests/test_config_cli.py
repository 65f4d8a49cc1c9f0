from pathlib import Path

import numpy as np
import pytest

from vtbem import cli
from vtbem import quadrature as q
from vtbem.config import dump_config, parse_config
from vtbem.errors import SchemaError, UnknownKey
from vtbem.solver_dd import load_i2i

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL_DISK = """
physics: {wavelength: 1.1, deltaV: 0.00625, deltaT: 0.00625, gamma: 1.4}
components:
  - {name: wall, kind: star, curve: {type: circle, radius: 0.5}}
targets:
  grid: {xmin: -0.3, xmax: 0.3, ymin: -0.3, ymax: 0.3, nx: 4, ny: 3}
"""

OBLIQUE = """
physics: {wavelength: 1.1, deltaV: 0.00625, deltaT: 0.00625}
components:
  - {name: bottom, kind: star, curve: {type: line, start: [0, 0], end: [2, 0]}}
  - {name: right, kind: circ, curve: {type: line, start: [2, 0], end: [2.3, 1]}}
  - {name: top, kind: star, curve: {type: line, start: [2.3, 1], end: [0, 1]}}
  - {name: left, kind: circ, curve: {type: line, start: [0, 1], end: [0, 0]}}
"""


def _diag(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        key, _, val = line.partition(": ")
        out[key] = val
    return out


def _run(tmp_path, text, *extra, name="job.yaml"):
    cfg = tmp_path / name
    cfg.write_text(text)
    out = tmp_path / "out"
    code = cli.main(["--config", str(cfg), "--output-dir", str(out), *extra])
    return code, out


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------
@pytest.mark.parametrize("name", ["disk.yaml", "star.yaml", "waveguide.yaml", "split_duct.yaml"])
def test_round_trip(name):
    cfg = parse_config((CONFIGS / name).read_text())
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert again.discretization.order == 16
    assert again.discretization.corner_depth == 7


def test_modes():
    assert parse_config((CONFIGS / "disk.yaml").read_text()).mode == "case1"
    assert parse_config((CONFIGS / "waveguide.yaml").read_text()).mode == "case2"
    assert parse_config((CONFIGS / "split_duct.yaml").read_text()).mode == "dd"


def test_wrong_case_key_is_unknown():
    with pytest.raises(UnknownKey) as e:
        parse_config(SMALL_DISK.replace("deltaV", "deltav"))
    assert e.value.path == ("physics", "deltav")


def test_schema_errors():
    with pytest.raises(SchemaError):
        parse_config("physics: {wavelength: -1, deltaV: 0.1, deltaT: 0.1}\ncomponents: []")
    with pytest.raises(SchemaError):
        parse_config("[1, 2]")
    with pytest.raises(SchemaError):
        parse_config(SMALL_DISK.replace("nx: 4", "nx: 0"))


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------
def test_exit_code_schema(tmp_path):
    assert _run(tmp_path, SMALL_DISK.replace("deltaV", "deltav"))[0] == cli.EXIT_SCHEMA
    assert cli.main(["--config", str(tmp_path / "missing.yaml")]) == cli.EXIT_SCHEMA


def test_exit_code_geometry(tmp_path):
    assert _run(tmp_path, OBLIQUE)[0] == cli.EXIT_GEOMETRY


def test_exit_code_solver(tmp_path, monkeypatch):
    monkeypatch.setattr(q, "MAX_LEVELS", 0)
    assert _run(tmp_path, SMALL_DISK)[0] == cli.EXIT_SOLVER


def test_zero_data_gives_zero_field(tmp_path):
    code, out = _run(tmp_path, SMALL_DISK)
    assert code == cli.EXIT_OK
    lines = (out / "field.csv").read_text().splitlines()
    assert lines[0] == "x,y,re_u,im_u,flag"
    rows = np.loadtxt(out / "field.csv", delimiter=",", skiprows=1)
    assert rows.shape == (12, 5)
    assert np.all(rows[:, 2:4] == 0)
    # row-major over the grid: x varies fastest
    assert np.all(np.diff(rows[:4, 0]) > 0) and np.all(rows[:4, 1] == rows[0, 1])
    dens = np.loadtxt(out / "density_wall.csv", delimiter=",", skiprows=1)
    assert dens.shape[1] == 3
    diag = _diag(out / "diagnostics.txt")
    assert {"unknowns", "condition_estimate_1norm", "solve_backward_error", "wall_seconds"} <= set(diag)
    assert not list(out.glob("*.png"))  # figures are opt-in


def test_disk_config_matches_oracle(tmp_path):
    code, out = _run(tmp_path, (CONFIGS / "disk.yaml").read_text())
    assert code == cli.EXIT_OK
    assert float(_diag(out / "diagnostics.txt")["disk_oracle_max_error"]) <= 1e-8


def test_output_is_deterministic(tmp_path):
    text = (CONFIGS / "disk.yaml").read_text()
    _, a = _run(tmp_path, text)
    first = (a / "field.csv").read_bytes(), (a / "density_wall.csv").read_bytes()
    _, b = _run(tmp_path, text)
    assert (b / "field.csv").read_bytes() == first[0]
    assert (b / "density_wall.csv").read_bytes() == first[1]


@pytest.mark.slow
def test_waveguide_config_diagnostics(tmp_path):
    code, out = _run(tmp_path, (CONFIGS / "waveguide.yaml").read_text())
    assert code == cli.EXIT_OK
    diag = _diag(out / "diagnostics.txt")
    assert float(diag["analytic_max_error"]) <= 1e-6
    flags = np.loadtxt(out / "field.csv", delimiter=",", skiprows=1)[:, 4]
    # grid points above the top wall are outside the duct
    assert np.any(flags == cli.FLAG_OUTSIDE) and np.any(flags == cli.FLAG_OK)


@pytest.mark.slow
def test_dd_config_dumps_maps(tmp_path):
    code, out = _run(tmp_path, (CONFIGS / "split_duct.yaml").read_text(), "--dump-i2i")
    assert code == cli.EXIT_OK
    diag = _diag(out / "diagnostics.txt")
    assert float(diag["analytic_max_error"]) <= 1e-6
    assert float(diag["coupling_condition_estimate_1norm"]) <= 1e4
    for name in ("A", "B"):
        m = load_i2i(out / f"i2i_{name}_plus_to_minus.bin")
        assert m.matrix.shape[0] == m.matrix.shape[1] > 0
    assert (out / "density_A.a_bottom.csv").exists()


def test_figures_opt_in(tmp_path):
    pytest.importorskip("matplotlib")
    code, out = _run(tmp_path, SMALL_DISK, "--figures")
    assert code == cli.EXIT_OK
    assert (out / "geometry.png").stat().st_size > 0
    assert (out / "field_abs.png").stat().st_size > 0


def test_threads_flag(tmp_path):
    assert _run(tmp_path, SMALL_DISK, "--threads", "1")[0] == cli.EXIT_OK
