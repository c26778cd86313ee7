import json
from pathlib import Path

import numpy as np
import pytest

from exsurf.cli import main

FAST_CONFIG = """
[spectrum]
n_q1 = 9
n_q3 = 9

[dd]
ratios = 0.5, 8.0
n_alpha = 12
n_beta = 12
n_phi = 12

[berry]
steps_per_loop = 200
sweep_ratios = 0.8, 1.2

[ssh3]
n_t1_sweep = 7

[circuit]
n_theta = 16
theta0_time = 0.05
sweep_ratios = 0.5,
"""


@pytest.fixture
def fast_config(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(FAST_CONFIG)
    return path


def read_table(path: Path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# exsurf ")
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return header, rows


def test_spectrum_command(fast_config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["spectrum", "--config", str(fast_config), "--out", str(out)]) == 0
    header, rows = read_table(out / "spectrum.csv")
    assert header == ["q1", "q2", "q3", "q4", "kappa", "band", "reE", "imE", "class"]
    assert len(rows) == 9 * 9 * 3  # three bands per node
    classes = {row[-1] for row in rows}
    assert "FermiArcInterior" in classes and "Regular" in classes


def test_spectrum_hermitian_all_real(tmp_path):
    config = tmp_path / "h.ini"
    config.write_text("[model]\nkappa = 0.0\n\n[spectrum]\nn_q1 = 7\nn_q3 = 7\n")
    out = tmp_path / "out"
    assert main(["spectrum", "--config", str(config), "--out", str(out)]) == 0
    _, rows = read_table(out / "spectrum.csv")
    assert max(abs(float(r[7])) for r in rows) < 1e-12


def test_dd_command(fast_config, tmp_path):
    out = tmp_path / "out"
    assert main(["dd", "--config", str(fast_config), "--out", str(out)]) == 0
    header, rows = read_table(out / "dd.csv")
    assert header == ["ratio", "dd", "status", "masked_fraction"]
    values = {float(r[0]): (float(r[1]), r[2]) for r in rows}
    assert abs(values[0.5][0]) < 0.05 and values[0.5][1] == "ok"
    assert abs(values[8.0][0] - 1.0) < 0.08 and values[8.0][1] == "ok"


def test_dd_flags_touching_sphere(tmp_path):
    config = tmp_path / "t.ini"
    config.write_text("[dd]\nratios = 1.0,\nn_alpha = 12\nn_beta = 12\nn_phi = 12\n")
    out = tmp_path / "out"
    assert main(["dd", "--config", str(config), "--out", str(out)]) == 0
    _, rows = read_table(out / "dd.csv")
    assert rows[0][2] == "ill-defined"


def test_berry_command(fast_config, tmp_path):
    out = tmp_path / "out"
    assert main(["berry", "--config", str(fast_config), "--out", str(out)]) == 0
    header, rows = read_table(out / "berry_tracks.csv")
    assert header == ["theta", "band", "reE", "imE"]
    thetas = sorted({float(r[0]) for r in rows})
    assert thetas[-1] > 4 * np.pi  # three loops of track data
    header, rows = read_table(out / "berry_sweep.csv")
    assert header == [
        "delta", "nesting_ratio", "phase", "loops_to_close", "permutation",
        "status",
    ]
    by_ratio = {float(r[1]): r for r in rows}
    assert abs(float(by_ratio[0.8][2]) - 2 * np.pi) < 0.1
    assert abs(float(by_ratio[1.2][2])) < 0.1


def test_berry_loop_through_ring_exits_3(tmp_path):
    config = tmp_path / "ep.ini"
    ring = 2 * np.sqrt(2) / 3
    config.write_text(
        f"[berry]\ndelta = {0.85 + ring}\nsteps_per_loop = 64\n"
    )
    out = tmp_path / "out"
    assert main(["berry", "--config", str(config), "--out", str(out)]) == 3


def test_ssh3_command(fast_config, tmp_path):
    out = tmp_path / "out"
    assert main(["ssh3", "--config", str(fast_config), "--out", str(out)]) == 0
    header, rows = read_table(out / "ssh3_metrics.csv")
    assert header == ["model", "gamma", "t1", "boundary_weight", "mean_ipr"]
    weights = {float(r[1]): float(r[3]) for r in rows}
    assert weights[1.0] > 0.5 and weights[0.0] < 0.3
    header, rows = read_table(out / "ssh3_ep3_sweep.csv")
    pbc = [float(r[3]) for r in rows if r[1] == "pbc"]
    obc = [float(r[3]) for r in rows if r[1] == "obc"]
    assert min(pbc) < 1e-6
    assert min(obc) > 10 * min(pbc)


def test_dynamics_command(fast_config, tmp_path):
    out = tmp_path / "out"
    assert main(["dynamics", "--config", str(fast_config), "--out", str(out)]) == 0
    header, rows = read_table(out / "trajectories.csv")
    assert header == ["source", "init", "t", "p_e00", "p_g10", "p_g01", "p_g00", "norm"]
    sources = {r[0] for r in rows}
    assert sources == {"lab", "effective", "fitted"}
    header, rows = read_table(out / "berry_experiment.csv")
    assert abs(float(rows[0][2]) - 2 * np.pi) < 0.15
    header, rows = read_table(out / "fitted_tracks.csv")
    assert sorted({float(r[0]) for r in rows})[-1] > 4 * np.pi


def test_outputs_deterministic(fast_config, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main(["dd", "--config", str(fast_config), "--out", str(out)]) == 0
        assert main(["ssh3", "--config", str(fast_config), "--out", str(out)]) == 0
    for name in ("dd.csv", "ssh3_spectra.csv", "ssh3_metrics.csv", "ssh3_ep3_sweep.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_json_mirror(fast_config, tmp_path):
    out = tmp_path / "out"
    assert main(["dd", "--config", str(fast_config), "--out", str(out),
                 "--format", "json"]) == 0
    payload = json.loads((out / "dd.json").read_text())
    assert payload["rows"][0]["status"] in ("ok", "ill-defined")


def test_emit_config(fast_config, capsys):
    assert main(["dd", "--config", str(fast_config), "--emit-config"]) == 0
    text = capsys.readouterr().out
    assert "[dd]" in text and "n_alpha = 12" in text
    assert "[output]" in text


def test_unknown_key_rejected(tmp_path, capsys):
    config = tmp_path / "bad.ini"
    config.write_text("[dd]\nn_aleph = 12\n")
    assert main(["dd", "--config", str(config)]) == 2
    config.write_text("[ddd]\nn_alpha = 12\n")
    assert main(["dd", "--config", str(config)]) == 2
    config.write_text("[dd]\nn_alpha = twelve\n")
    assert main(["dd", "--config", str(config)]) == 2


def test_missing_config_rejected(tmp_path):
    assert main(["dd", "--config", str(tmp_path / "nope.ini")]) == 2
