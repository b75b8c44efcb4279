import csv
import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from wavekin import GridField, auto_grid
from wavekin.cli import COLUMNS, CSV_TAG, fig1_field, main
from wavekin.config import parse_config
from wavekin.errors import ConfigError

FIG1 = {
    "dispersion": {"kind": "massless", "c": 1.0},
    "field": {"type": "gaussians", "components": [
        {"A": 0.5, "k0": [0.3, 0.5, 0.0], "delta": 0.1},
        {"A": 0.87, "k0": [1.2, 0.7, 0.0], "delta": 0.15},
    ]},
    "grid": {"points_per_axis": 64},
    "time": {"t0": 0, "t1": 10, "steps": 11},
}


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc, indent=2))
    return str(path)


def with_disp(disp):
    return {**FIG1, "dispersion": disp}


def read_csv(path):
    lines = open(path).read().splitlines()
    assert lines[0] == CSV_TAG
    rows = list(csv.reader(lines[1:]))
    assert tuple(rows[0]) == COLUMNS
    return np.array(rows[1:], dtype=float)


def test_run_writes_trajectory(tmp_path):
    out = tmp_path / "traj.csv"
    assert main(["run", write(tmp_path, FIG1), "-o", str(out)]) == 0
    data = read_csv(out)
    assert data.shape == (11, len(COLUMNS))
    np.testing.assert_allclose(data[:, 0], np.linspace(0, 10, 11))
    col = {name: i for i, name in enumerate(COLUMNS)}
    for name in ("norm", "px", "py", "E", "Lx", "Ly", "Lz", "Nx", "Ny", "Nz"):
        assert np.ptp(data[:, col[name]]) <= 1e-10 * max(1.0, np.abs(data[:, col[name]]).max()), name


def test_run_json_format(tmp_path, capsys):
    assert main(["run", write(tmp_path, FIG1), "--format", "json", "--grid-n", "48"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["format"] == "wavekin-trajectory" and doc["columns"] == list(COLUMNS)
    assert len(doc["rows"]) == 11


def test_run_quadratic_group_velocity(tmp_path):
    out = tmp_path / "q.csv"
    assert main(["run", write(tmp_path, with_disp({"kind": "quadratic", "m": 2.0})), "-o", str(out)]) == 0
    data = read_csv(out)
    col = {name: i for i, name in enumerate(COLUMNS)}
    for a, b in (("vgx", "px"), ("vgy", "py"), ("vgz", "pz")):
        np.testing.assert_allclose(data[:, col[a]], data[:, col[b]] / 2.0, rtol=1e-12, atol=1e-15)


def test_run_output_is_deterministic(tmp_path):
    cfg = write(tmp_path, FIG1)
    paths = [tmp_path / f"o{i}.csv" for i in range(3)]
    assert main(["run", cfg, "-o", str(paths[0])]) == 0
    assert main(["run", cfg, "-o", str(paths[1])]) == 0
    assert main(["run", cfg, "-o", str(paths[2]), "--threads", "4"]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes() == paths[2].read_bytes()


def test_malformed_json_exit_2(tmp_path, capsys):
    assert main(["run", write(tmp_path, '{"dispersion": {"kind": "massless",,}}')]) == 2
    assert "line 1, column" in capsys.readouterr().err


def test_unknown_key_exit_2(tmp_path, capsys):
    doc = json.loads(json.dumps(FIG1))
    doc["field"]["components"][1]["detla"] = 0.1
    assert main(["run", write(tmp_path, doc)]) == 2
    err = capsys.readouterr().err
    assert "unknown key" in err and "detla" in err and "line" in err


@pytest.mark.parametrize("patch, message", [
    ({"dispersion": {"kind": "quadratic"}}, "requires 'm'"),
    ({"dispersion": {"kind": "massless", "m": 1}}, "does not take 'm'"),
    ({"grid": {"margin": 3}}, "margin"),
    ({"time": {"t0": 2, "t1": 1}}, "t1 > t0"),
    ({"field": {"type": "grid", "file": "missing.kgrid"}}, "not found"),
])
def test_config_errors(tmp_path, patch, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(json.dumps({**FIG1, **patch}), tmp_path)


def test_missing_config_file(tmp_path):
    assert main(["run", str(tmp_path / "nope.json")]) == 2


def test_complex_amplitudes_and_offsets(tmp_path):
    doc = json.loads(json.dumps(FIG1))
    doc["field"]["components"][0].update({"A": [0.3, -0.4], "r0": [1, 0, 0]})
    cfg = parse_config(json.dumps(doc))
    assert cfg.field.components[0].amplitude == complex(0.3, -0.4)
    assert cfg.field.components[0].r0 == (1.0, 0.0, 0.0)


def test_grid_file_config(tmp_path):
    f = fig1_field()
    spec = auto_grid(f, 7, 64)
    GridField.from_function(spec, lambda x, y, z: f._evaluate(x, y, z)[0]).save(tmp_path / "psi.kgrid")
    doc = {**FIG1, "field": {"type": "grid", "file": "psi.kgrid"}, "time": {"t0": 0, "t1": 2, "steps": 3}}
    out = tmp_path / "g.csv"
    assert main(["run", write(tmp_path, doc), "-o", str(out)]) == 0
    data = read_csv(out)
    col = {name: i for i, name in enumerate(COLUMNS)}
    # 4th-order gradient on a grid field: velocities are exact, centroids good to the stencil error
    assert data[0, col["vgx"]] == pytest.approx(0.7714, abs=1e-3)
    assert data[0, col["norm"]] == pytest.approx(1.0069, rel=1e-5)


def test_numerical_consistency_exit_3(tmp_path, capsys):
    assert main(["run", write(tmp_path, FIG1), "--grid-n", "24"]) == 3
    assert "centroid-imaginary" in capsys.readouterr().err


def test_check_fig1(tmp_path, capsys):
    assert main(["check", write(tmp_path, FIG1)]) == 0
    table = capsys.readouterr().out
    rows = {line.split()[0]: line.split()[1] for line in table.splitlines()[1:]}
    for name in ("relativistic-energy-centroid", "boost-conservation", "am-ext-energy-conservation",
                 "subluminality", "centroid-linearity", "quadrature-consistency"):
        assert rows[name] == "pass"
    assert rows["am-ext-probability-rate"] == "expected-violation"
    assert "-0.0709" in table


def test_check_quadratic(tmp_path, capsys):
    assert main(["check", write(tmp_path, with_disp({"kind": "quadratic", "m": 1.0}))]) == 0
    rows = {line.split()[0]: line.split()[1] for line in capsys.readouterr().out.splitlines()[1:]}
    assert rows["ehrenfest-quadratic"] == "pass"
    assert rows["boost-conservation"] == "expected-violation"
    assert rows["subluminality"] == "n/a"


def test_check_tight_tolerance_fails(tmp_path, capsys):
    # the trajectory identities hold to rounding; the grid-dependent residue does not
    assert main(["check", write(tmp_path, FIG1), "--grid-n", "40", "--tol", "1e-14"]) == 1
    out = capsys.readouterr().out
    line = next(l for l in out.splitlines() if l.startswith("quadrature-consistency"))
    assert line.split()[1] == "fail" and float(line.split()[2]) > 1e-14


def test_fig1_default(capsys):
    assert main(["fig1"]) == 0
    rep = json.loads(capsys.readouterr().out)
    q, o = rep["quadrature"], rep["oracle"]
    np.testing.assert_allclose(o["v_prob"], [0.777056, 0.591671, 0], atol=1e-6)
    np.testing.assert_allclose(o["v_energy"], [0.821253, 0.546925, 0], atol=1e-6)
    assert q["grid_n"] == [96, 96, 96]
    assert rep["agreement"] and max(rep["relative_difference"].values()) < 0.02
    assert q["angle_deg"] == pytest.approx(3.6, abs=0.5)
    assert q["speed_prob"] < 1 and q["speed_energy"] < 1 and rep["noncollinear"]
    assert rep["reference_circle"]["radius"] == 1.0
    assert rep["convergence"]["converged"]


def test_fig1_coarse(capsys):
    assert main(["fig1", "--points", "32"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["quadrature"]["grid_n"] == [32, 32, 32]
    assert max(rep["relative_difference"].values()) < 0.02


def test_fig1_renormalize(capsys):
    assert main(["fig1", "--points", "48", "--renormalize"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["parameters"]["A"][1] == pytest.approx(math.sqrt(0.75))
    assert rep["quadrature"]["p_mean"][0] == pytest.approx((0.25 * 0.3 + 0.75 * 1.2), rel=1e-6)


def test_fig1_nonconvergence_exit_4(capsys):
    assert main(["fig1", "--points", "32", "--max-n", "40"]) == 4
    assert '"converged": false' in capsys.readouterr().err


def test_converge_command(tmp_path, capsys):
    assert main(["converge", write(tmp_path, FIG1), "--observable", "E_mean", "--grid-n", "33"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["converged"] and rep["error_estimate"] < 1e-8
    assert rep["value"] == pytest.approx(1.1973, abs=1e-4)
    assert main(["converge", write(tmp_path, FIG1), "--observable", "E_mean", "--grid-n", "17",
                 "--max-n", "33", "--tol", "1e-300"]) == 4


def test_converge_unknown_observable(tmp_path):
    assert main(["converge", write(tmp_path, FIG1), "--observable", "spin"]) == 2


@pytest.mark.skipif(shutil.which("wavekin") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["wavekin", "run", write(tmp_path, FIG1), "--grid-n", "40"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == CSV_TAG
    proc = subprocess.run(["wavekin", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 2
