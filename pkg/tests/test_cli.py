import json
import subprocess
import sys

import numpy as np
import pytest

from treejacobi import RefusedClassificationError, save_graph
from treejacobi.cli import main, read_csv


@pytest.fixture(scope="module")
def graph_files(tmp_path_factory):
    from treejacobi import (
        build_complete_bipartite,
        build_cycle,
        build_theta,
    )
    root = tmp_path_factory.mktemp("graphs")
    paths = {}
    for name, (g, params) in {
        "theta3": build_theta(3, 1.0, 0.0),
        "c2": build_cycle(2, 1.0, [1.0, -1.0]),
        "k23": build_complete_bipartite(2, 3, 1.0, 0.0),
    }.items():
        path = root / f"{name}.json"
        save_graph(path, g, params)
        paths[name] = str(path)
    return paths


def _run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_validate_ok(capsys, graph_files):
    code, doc = _run_json(capsys, ["validate", "--graph", graph_files["theta3"]])
    assert code == 0
    assert doc["valid"] is True
    assert doc["manifest"]["subcommand"] == "validate"
    assert len(doc["manifest"]["graph_sha256"]) == 64


def test_validate_bad_file_exits_one(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"vertices": 2, "b": [0.0], "edges": []}')
    assert main(["validate", "--graph", str(bad)]) == 1


def test_missing_graph_flag_exits_one(capsys):
    assert main(["solve", "--z", "0,1"]) == 1


def test_unknown_subcommand_exits_one(capsys):
    assert main(["frobnicate"]) == 1


def test_solve_round_trip(capsys, graph_files):
    code, doc = _run_json(
        capsys, ["solve", "--graph", graph_files["theta3"], "--z", "-4,0"]
    )
    assert code == 0
    m0 = complex(*doc["m"][0])
    assert m0.real == pytest.approx((2 - np.sqrt(2)) / 2, abs=1e-9)
    assert doc["residual"] < 1e-10
    assert len(doc["m"]) == 6 and len(doc["G"]) == 2 and len(doc["Q"]) == 3


def test_negative_comma_values_accepted(capsys, graph_files):
    # "--z -4,0" must parse although the value starts with a dash
    code, _ = _run_json(
        capsys, ["solve", "--graph", graph_files["theta3"], "--z", "-4,0"]
    )
    assert code == 0


def test_ids_prints_value_and_label(capsys, graph_files):
    code, doc = _run_json(
        capsys, ["ids", "--graph", graph_files["c2"], "--at", "0"]
    )
    assert code == 0
    assert doc["k"] == pytest.approx(0.5, abs=1e-6)
    assert doc["label"] == 1
    assert doc["label_residual"] < 1e-6


def test_ids_inside_band_exits_two(capsys, graph_files):
    assert main(["ids", "--graph", graph_files["theta3"], "--at", "0.5"]) == 2


def test_dos_csv_round_trip(capsys, graph_files, tmp_path):
    out = tmp_path / "dos.csv"
    code = main(["dos", "--graph", graph_files["theta3"], "--range", "-3,3",
                 "--points", "601", "--out", str(out)])
    assert code == 0
    manifest, header, cols = read_csv(out)
    assert header == ["energy", "density", "ids"]
    assert manifest["subcommand"] == "dos"
    assert manifest["params"]["n_points"] >= 601
    i = np.argmin(np.abs(cols["energy"]))
    assert cols["density"][i] == pytest.approx(np.sqrt(2) / (3 * np.pi),
                                               abs=2e-3)


def test_gaps_report(capsys, graph_files):
    code, doc = _run_json(capsys, ["gaps", "--graph", graph_files["c2"]])
    assert code == 0
    assert len(doc["gaps"]) == 1
    assert doc["gaps"][0]["label"] == 1


def test_atoms_report(capsys, graph_files):
    code, doc = _run_json(capsys, ["atoms", "--graph", graph_files["k23"]])
    assert code == 0
    assert len(doc["atoms"]) == 1
    assert doc["atoms"][0]["mass"] == pytest.approx(0.2, abs=1e-3)


def test_aomoto_report(capsys, graph_files):
    code, doc = _run_json(
        capsys, ["aomoto", "--graph", graph_files["k23"], "--lambda", "0"]
    )
    assert code == 0
    assert doc["X1"] == [2, 3, 4]
    assert doc["index"] == 1
    assert doc["local_orders"]["G"] == [1, 1, -1, -1, -1]


def test_refused_classification_maps_to_exit_three(capsys, monkeypatch):
    from treejacobi import cli

    def boom(args, manifest):
        raise RefusedClassificationError("ambiguous weights")

    monkeypatch.setitem(cli._COMMANDS, "validate", boom)
    assert main(["validate", "--graph", "unused"]) == 1  # no file, exits first
    monkeypatch.setattr(cli, "_file_sha256", lambda p: "0" * 64)
    assert main(["validate", "--graph", "unused"]) == 3


def test_lift_csv_and_kernel_dim(capsys, graph_files, tmp_path):
    out = tmp_path / "lift.csv"
    code = main(["lift", "--graph", graph_files["k23"], "--n", "20",
                 "--seed", "5", "--lambda", "0", "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert "# kernel_dimension: " in text
    _, header, cols = read_csv(out)
    assert header == ["eigenvalue"]
    assert cols["eigenvalue"].shape[0] == 100


def test_lift_ks_against_dos_csv(capsys, graph_files, tmp_path):
    dos_path = tmp_path / "dos.csv"
    assert main(["dos", "--graph", graph_files["theta3"],
                 "--out", str(dos_path)]) == 0
    code, doc = _run_json(
        capsys,
        ["lift-ks", "--graph", graph_files["theta3"], "--n", "150",
         "--seed", "2", "--dos", str(dos_path)],
    )
    assert code == 0
    assert doc["ks_distance"] < 0.08


def test_anderson_json(capsys):
    code, doc = _run_json(
        capsys,
        ["anderson", "--d", "3", "--b", "uniform,-0.5,0.5", "--a", "const,1",
         "--z", "0,1", "--pool", "1000", "--sweeps", "60", "--seed", "1"],
    )
    assert code == 0
    assert doc["diagnostics"]["stationary"] is True
    assert doc["stderr"] > 0
    assert doc["manifest"]["params"]["b_dist"][0] == "uniform"


def test_anderson_bad_distribution_exits_one(capsys):
    assert main(["anderson", "--d", "3", "--b", "gauss,0,1",
                 "--a", "const,1", "--z", "0,1"]) == 1


def test_anderson_check_json(capsys):
    code, doc = _run_json(
        capsys,
        ["anderson-check", "--d", "3", "--b", "const,0", "--a", "const,1",
         "--z", "0,1", "--h", "1e-3", "--pool", "500", "--sweeps", "40"],
    )
    assert code == 0
    assert doc["passed"] is True


def test_workers_one_bit_identical_subprocess(graph_files, tmp_path):
    # two fresh interpreter runs must emit identical bytes
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / f"{tag}.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "treejacobi.cli", "dos",
             "--graph", graph_files["c2"], "--points", "401",
             "--workers", "1", "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_seeded_lift_bit_identical_subprocess(graph_files, tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / f"{tag}.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "treejacobi.cli", "lift",
             "--graph", graph_files["theta3"], "--n", "30", "--seed", "9",
             "--workers", "1", "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    capsys.readouterr()
    assert main(["dos", "--help"]) == 0
