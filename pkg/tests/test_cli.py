import csv
import json

import numpy as np
import pytest

from sgkron.cli import ConfigError, main, resolve_config
from sgkron.io import load_map, load_mits, save_mits


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def error_line(err):
    lines = err.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


@pytest.fixture
def small_stack(tmp_path, capsys):
    name = tmp_path / "data" / "s"
    code, _, _ = run(["gen-stack", "--out", name, "--frames", 4, "--height", 7, "--width", 7,
                      "--a", 2, "--b", 2, "--seed", 1], capsys)
    assert code == 0
    return name


def test_gen_stack_and_detect(small_stack, tmp_path, capsys):
    assert load_mits(small_stack).shape == (4, 7, 7, 4)
    code, out, _ = run(["detect", small_stack, "--out", tmp_path / "m1", "--window", 3,
                        "--a", 2, "--b", 2], capsys)
    assert code == 0 and "5x5" in out
    code, _, _ = run(["detect", small_stack, "--out", tmp_path / "m2", "--window", 3,
                      "--a", 2, "--b", 2, "--threads", 2], capsys)
    assert code == 0
    assert (tmp_path / "m1" / "map.bin").read_bytes() == (tmp_path / "m2" / "map.bin").read_bytes()
    assert load_map(tmp_path / "m1" / "map").shape == (5, 5)


def test_precedence():
    cfg = resolve_config("detect", {"detector": "sg-online", "out": "o", "stack": "s"},
                         {"detector": "sg", "window": 3, "alpha0": 0.5})
    assert cfg["detector"] == "sg-online" and cfg["window"] == 3 and cfg["alpha0"] == 0.5
    cfg = resolve_config("detect", {"out": "o", "stack": "s"}, {})
    assert cfg["window"] == 5 and cfg["detector"] == "ksg" and cfg["tol"] == 1e-7
    with pytest.raises(ConfigError):
        resolve_config("detect", {"out": "o", "stack": "s"}, {"window": 5.0})
    with pytest.raises(ConfigError):
        resolve_config("mse-bench", {"out": "o", "threads": "many"}, {})
    assert resolve_config("mse-bench", {"out": "o", "threads": "auto"}, {})["threads"] >= 1


@pytest.mark.parametrize("argv", [
    ["--window", 4],
    ["--window", 3, "--a", 3, "--b", 2],
    ["--window", 3, "--a", 2, "--b", 2, "--alpha0", -1],
    ["--window", 9, "--a", 2, "--b", 2],
    ["--detector", "nope"],
])
def test_config_errors(small_stack, tmp_path, capsys, argv):
    code, _, err = run(["detect", small_stack, "--out", tmp_path / "m"] + argv, capsys)
    assert code == 2
    if "nope" not in argv:
        assert error_line(err)["error"] == "config"


def test_config_file_errors(small_stack, tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"window": 3, "colour": "red"}')
    code, _, err = run(["detect", small_stack, "--out", tmp_path / "m", "--config", cfg], capsys)
    assert code == 2 and "colour" in error_line(err)["message"]
    cfg.write_text("{broken")
    code, _, err = run(["detect", small_stack, "--out", tmp_path / "m", "--config", cfg], capsys)
    assert code == 2
    code, _, err = run(["detect", small_stack, "--out", tmp_path / "m", "--config",
                        tmp_path / "absent.json"], capsys)
    assert code == 2


def test_data_errors(small_stack, tmp_path, capsys):
    code, _, err = run(["detect", tmp_path / "absent", "--out", tmp_path / "m"], capsys)
    assert code == 3 and error_line(err)["error"] == "data"
    payload = small_stack.with_suffix(".bin")
    payload.write_bytes(payload.read_bytes()[:100])
    code, _, err = run(["detect", small_stack, "--out", tmp_path / "m", "--window", 3,
                        "--a", 2, "--b", 2], capsys)
    assert code == 3 and "100" in error_line(err)["message"]


def test_failure_ceiling(tmp_path, capsys):
    save_mits(np.zeros((3, 5, 5, 4), complex), tmp_path / "z")
    argv = ["detect", tmp_path / "z", "--out", tmp_path / "m", "--window", 3, "--a", 2, "--b", 2]
    code, _, err = run(argv, capsys)
    assert code == 4 and error_line(err)["error"] == "failures"
    assert np.isnan(load_map(tmp_path / "m" / "map")).all()
    code, _, _ = run(argv + ["--max-failure-rate", 1.0], capsys)
    assert code == 0


def test_mse_bench(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"t_grid": [1, 2, 5], "a": 2, "b": 2, "n": 6}))
    out = tmp_path / "bench"
    code, _, _ = run(["mse-bench", "--config", cfg, "--trials", 4, "--out", out], capsys)
    assert code == 0
    with open(out / "mse.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["T", "component", "estimator", "mse", "icrb"]
    assert len(rows) == 3 * 4 * 2
    first = (out / "mse.csv").read_bytes()
    run(["mse-bench", "--config", cfg, "--trials", 4, "--out", out, "--threads", 2], capsys)
    assert (out / "mse.csv").read_bytes() == first


def test_roc_bench(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"a": 2, "b": 2, "n": 6, "T": 4, "horizons": [2],
                               "rho1_a": [0.1, -0.5]}))
    out = tmp_path / "roc"
    code, stdout, _ = run(["roc-bench", "--config", cfg, "--trials", 5, "--out", out], capsys)
    assert code == 0 and "AUC ksg-online" in stdout
    with open(out / "roc.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["detector", "horizon_T", "p_fa", "p_d"]
    assert {r["detector"] for r in rows} == {"sg", "ksg", "sg-online", "ksg-online"}
    assert {r["horizon_T"] for r in rows if r["detector"] == "ksg-online"} == {"2", "4"}
    assert (out / "roc_auc.csv").exists()


def test_bad_complex_in_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"rho0_a": [0.9, 0.9]}))
    code, _, err = run(["roc-bench", "--config", cfg, "--out", tmp_path / "o"], capsys)
    assert code == 2 and "rho0_a" in error_line(err)["message"]
