import json
import subprocess

import pytest

from acnn import __version__
from acnn.capmap import load_chip
from acnn.cli import main


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    """A small end-to-end artifact chain built through the CLI."""
    d = tmp_path_factory.mktemp("cliwork")
    paths = {
        "dataset": d / "tiny.arrows",
        "net": d / "net.json",
        "qnet": d / "qnet.json",
        "chip": d / "chip.json",
        "chip_exact": d / "chip_exact.json",
        "dir": d,
    }
    steps = [
        ["gen-dataset", "--out", str(paths["dataset"]), "--seed", "3",
         "--n-train", "256", "--n-test", "64"],
        ["train", "--dataset", str(paths["dataset"]), "--out", str(paths["net"]),
         "--seed", "0", "--epochs", "20"],
        ["quantize", "--net", str(paths["net"]), "--out", str(paths["qnet"])],
        ["map", "--net", str(paths["qnet"]), "--out", str(paths["chip"]),
         "--chip-seed", "0"],
        ["map", "--net", str(paths["qnet"]), "--out", str(paths["chip_exact"]),
         "--exact"],
    ]
    for argv in steps:
        assert main(argv) == 0, argv
    return paths


def test_pipeline_artifacts_and_manifests(work):
    for key in ("dataset", "net", "qnet", "chip"):
        path = work[key]
        assert path.exists()
        manifest = json.loads((path.parent / (path.name + ".manifest.json")).read_text())
        assert manifest["tool"] == "acnn"
        assert manifest["version"] == __version__
        assert isinstance(manifest["config"], dict)
    m = json.loads((work["dir"] / "tiny.arrows.manifest.json").read_text())
    assert m["command"] == "gen-dataset"
    assert m["config"]["seed"] == 3
    assert m["config"]["n_train"] == 256


def test_gen_dataset_idempotent(work, tmp_path):
    out = tmp_path / "again.arrows"
    assert main(["gen-dataset", "--out", str(out), "--seed", "3",
                 "--n-train", "256", "--n-test", "64"]) == 0
    assert out.read_bytes() == work["dataset"].read_bytes()


def test_quantized_chip_sits_on_unit_grid(work):
    chip = load_chip(work["chip"])
    exact = load_chip(work["chip_exact"])
    for cfg in chip.layers[0]:
        for _, c in cfg.pos_tree:
            assert c == round(c)
    on_grid = [
        c == round(c) for cfg in exact.layers[0] for _, c in cfg.pos_tree
    ]
    assert not all(on_grid)


def test_infer_outputs(work, tmp_path, capsys):
    out = tmp_path / "run.json"
    trace = tmp_path / "trace.csv"
    argv = ["infer", "--chip", str(work["chip"]), "--dataset", str(work["dataset"]),
            "--reference-net", str(work["qnet"]), "--out", str(out),
            "--trace-csv", str(trace), "--noiseless"]
    assert main(argv) == 0
    text = capsys.readouterr().out
    assert "hardware accuracy:" in text
    assert "matching fraction:" in text
    doc = json.loads(out.read_text())
    assert doc["n_samples"] == 64
    assert 0.0 <= doc["matching_mean"] <= 1.0
    assert len(trace.read_text().splitlines()) == 1 + 64 * 16
    # noiseless reruns reproduce the artifact byte for byte
    out2 = tmp_path / "run2.json"
    rerun = list(argv)
    rerun[rerun.index(str(out))] = str(out2)
    assert main(rerun) == 0
    assert out2.read_text() == out.read_text()


def test_montecarlo_aggregates(work, tmp_path, capsys):
    out = tmp_path / "mc.json"
    argv = ["montecarlo", "--chip", str(work["chip"]), "--dataset", str(work["dataset"]),
            "--n-chips", "2", "--iterations", "2", "--out", str(out)]
    assert main(argv) == 0
    text = capsys.readouterr().out
    assert "chip_seed=0" in text and "chip_seed=1" in text
    doc = json.loads(out.read_text())
    assert doc["seeds"] == [0, 1]
    assert set(doc["per_seed"]) == {"0", "1"}
    assert 0.0 <= doc["accuracy_mean"] <= 1.0


def test_transient_commands(tmp_path, capsys):
    csv = tmp_path / "step.csv"
    assert main(["transient", "--circuit", "rc-step", "--csv", str(csv)]) == 0
    assert "conservation residual" in capsys.readouterr().out
    assert csv.exists() and (tmp_path / "step.csv.manifest.json").exists()
    assert main(["transient", "--circuit", "pcg", "--cycles", "1",
                 "--dt", "1e-9"]) == 0
    out = capsys.readouterr().out
    assert "measured resonance: 1.61" in out
    assert "clock peaks per cycle" in out


def test_energy_command(work, tmp_path):
    out = tmp_path / "energy.json"
    argv = ["energy", "--chip", str(work["chip"]), "--dataset", str(work["dataset"]),
            "--sample", "UP", "--ops", "5", "--out-json", str(out)]
    assert main(argv) == 0
    doc = json.loads(out.read_text())
    assert doc["n_ops"] == 5
    assert doc["o_max"] == 5
    assert doc["sample"] == "UP"
    assert doc["total_with_pcg_j"] > doc["total_adiabatic_j"] > 0
    assert doc["v_peak_last"] <= doc["v_peak_first"]


def test_report_prints_tables(capsys):
    assert main(["report"]) == 0
    out = capsys.readouterr().out
    assert "conv/adiabatic" in out
    assert "mean ratio at 30 ops: 2.73" in out
    assert sum(1 for line in out.splitlines() if line.lstrip().startswith(
        ("UP", "LEFT", "DOWN", "RIGHT"))) == 12


def test_report_svgs_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["report", "--svg-dir", str(a)]) == 0
    assert main(["report", "--svg-dir", str(b)]) == 0
    for name in ("energy_vs_ops.svg", "vmax_decay.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gen-dataset": {"seed": 7, "n_train": 64,
                                               "n_test": 16}}))
    out = tmp_path / "a.arrows"
    assert main(["--config", str(cfg), "gen-dataset", "--out", str(out)]) == 0
    m = json.loads((tmp_path / "a.arrows.manifest.json").read_text())
    assert m["config"]["seed"] == 7
    # explicit flags beat the config file
    out2 = tmp_path / "b.arrows"
    assert main(["--config", str(cfg), "gen-dataset", "--out", str(out2),
                 "--seed", "9"]) == 0
    m2 = json.loads((tmp_path / "b.arrows.manifest.json").read_text())
    assert m2["config"]["seed"] == 9


def test_config_file_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gen-dataset": {"sede": 7}}))
    code = main(["--config", str(cfg), "gen-dataset",
                 "--out", str(tmp_path / "x.arrows")])
    assert code == 1
    assert "unknown keys" in capsys.readouterr().err


def test_exit_codes(tmp_path, capsys):
    assert main(["train", "--dataset", str(tmp_path / "nope.arrows"),
                 "--out", str(tmp_path / "n.json")]) == 2
    assert main(["gen-dataset", "--out", str(tmp_path / "d.arrows"),
                 "--n-train", "4"]) == 1
    assert main(["not-a-command"]) == 1
    assert main(["--version"]) == 0
    capsys.readouterr()


def test_map_rejects_bad_geometry(work, tmp_path, capsys):
    code = main(["map", "--net", str(work["qnet"]),
                 "--out", str(tmp_path / "c.json"), "--headroom", "0.5"])
    assert code == 1
    assert "headroom" in capsys.readouterr().err


def test_console_entry_point():
    proc = subprocess.run(["acnn", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == f"acnn {__version__}"
