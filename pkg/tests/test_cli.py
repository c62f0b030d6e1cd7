import json

import pytest

from isingkz import cli
from isingkz.config import load_flat

SMALL = {
    "kz-integrable": ["--tauQ", "[8.0, 16.0]", "--n_nodes", "256"],
    "kzm-analytics": ["--tauQ", "8", "--n_nodes", "256"],
    "bcs-sweep": ["--n_g", "7", "--n_k", "512", "--g_max", "2.5"],
    "critical-point": ["--n_g", "11", "--n_k", "1024"],
    "crossover": ["--n_k", "1024"],
    "ed-gap": ["--g", "[0.0, 0.25]", "--L", "[6, 8, 10]"],
    "ed-drive": ["--L", "8", "--t_after", "10"],
    "crash-test": ["--L", "8", "--t_after", "10"],
    "pair-drive": ["--t_after", "10"],
    "amplitude-scan": ["--tauQ", "[8.0, 16.0, 32.0]", "--n_nodes", "256", "--hold", "20"],
}


def run(tmp_path, name, extra=(), sub="out"):
    out = tmp_path / sub
    assert cli.main(["run", name, "--out", str(out), *extra]) == 0
    return out


def test_every_scenario_is_exercised():
    assert set(SMALL) == set(cli.SCENARIOS)


def test_list(capsys):
    assert cli.main(["list", "-v"]) == 0
    text = capsys.readouterr().out
    for name in cli.SCENARIOS:
        assert name in text
    assert "n_nodes = 2048" in text


@pytest.mark.parametrize("name", sorted(SMALL))
def test_scenario_runs_and_records_manifest(tmp_path, name):
    out = run(tmp_path, name, SMALL[name])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scenario"] == name
    assert set(manifest["versions"]) == {"isingkz", "numpy", "scipy", "python"}
    assert manifest["wall_time_s"] >= 0
    for fname in manifest["outputs"]:
        assert (out / fname).is_file()
    config = load_flat(out / "config.toml")
    assert config.pop("scenario") == name
    assert config == json.loads(json.dumps(manifest["config"]))
    assert cli.main(["validate", str(out / "config.toml")]) == 0


@pytest.mark.parametrize("name", ["kz-integrable", "ed-drive", "bcs-sweep"])
def test_reruns_are_byte_identical(tmp_path, name):
    a = run(tmp_path, name, SMALL[name], "a")
    b = run(tmp_path, name, SMALL[name], "b")
    for path in a.glob("*.csv"):
        assert path.read_bytes() == (b / path.name).read_bytes(), path.name


def test_workers_do_not_change_results(tmp_path, monkeypatch):
    a = run(tmp_path, "bcs-sweep", SMALL["bcs-sweep"], "a")
    monkeypatch.setenv("ISINGKZ_WORKERS", "2")
    b = run(tmp_path, "bcs-sweep", SMALL["bcs-sweep"], "b")
    assert json.loads((b / "manifest.json").read_text())["workers"] == 2
    assert (a / "bcs_sweep.csv").read_bytes() == (b / "bcs_sweep.csv").read_bytes()


def test_config_file_and_override_precedence(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('scenario = "pair-drive"\nt_after = 5.0\nA = 0.01\n')
    out = run(tmp_path, "pair-drive", ["--config", str(cfg), "--A=0.002"])
    config = load_flat(out / "config.toml")
    assert (config["t_after"], config["A"]) == (5.0, 0.002)


@pytest.mark.parametrize("argv", [
    ["run", "no-such-scenario"],
    ["run", "pair-drive", "--bogus", "1"],
    ["run", "pair-drive", "--A", "\"loud\""],
    ["run", "pair-drive", "--A"],
    ["run", "pair-drive", "--config", "/nonexistent/c.toml"],
    ["run", "ed-gap", "--L", "[7, 9, 11]"],
])
def test_invalid_input_exit_code(tmp_path, capsys, argv):
    assert cli.main(argv + ["--out", str(tmp_path / "x")]) == cli.EXIT_INVALID
    assert capsys.readouterr().err.startswith("error:")


def test_validate_rejects_bad_files(tmp_path):
    bare = tmp_path / "bare.toml"
    bare.write_text("g = 0.5\n")
    broken = tmp_path / "broken.toml"
    broken.write_text("g = [0.5\n")
    wrong = tmp_path / "wrong.toml"
    wrong.write_text('scenario = "crossover"\nn_k = "many"\n')
    for path in (bare, broken, wrong):
        assert cli.main(["validate", str(path)]) == cli.EXIT_INVALID


def test_numerical_failure_names_operation(tmp_path, capsys):
    code = cli.main(["run", "crossover", "--g_lo", "1.5", "--g_hi", "2.0", "--n_k", "512",
                     "--out", str(tmp_path / "x")])
    assert code == cli.EXIT_NUMERICAL
    assert "bcs.locate_crossover" in capsys.readouterr().err
