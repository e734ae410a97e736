import csv

import pytest

from rlreadout.cli import EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_RUNTIME, main
from rlreadout.config import CONFIG_KEYS, ConfigError, RunConfig, dump_config, load_config, parse_config


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_parse_and_defaults():
    vals = parse_config("seed = 3  # comment\nkappa=none\nratios = 2, 5\npreset = brisbane\n")
    assert vals == {"seed": 3, "kappa": None, "ratios": (2.0, 5.0), "preset": "brisbane"}
    assert load_config(None).n_updates == 5000


def test_unknown_key():
    with pytest.raises(ConfigError):
        parse_config("learning_rate = 1")


def test_bad_value_and_syntax():
    with pytest.raises(ConfigError):
        parse_config("seed = three")
    with pytest.raises(ConfigError):
        parse_config("seed")


def test_partial_explicit_device():
    with pytest.raises(ConfigError):
        RunConfig(kappa=10.0)


def test_dump_round_trip(tmp_path):
    cfg = RunConfig(seed=4, ratios=(1.0, 3.0), kappa=5.0, chi=1.0, n0=10.0, t1_us=100.0)
    p = tmp_path / "c.cfg"
    p.write_text(dump_config(cfg))
    assert load_config(p) == cfg
    assert set(CONFIG_KEYS) == set(parse_config(dump_config(cfg)))


def test_simulate_square(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path)]) == EXIT_OK
    assert "f_max=0.995" in capsys.readouterr().out
    m = rows(tmp_path / "metrics.csv")[0]
    assert float(m["tau_r"]) > 2000  # passive decay dominates
    assert len(rows(tmp_path / "trajectory.csv")) == 485


def test_simulate_zero(tmp_path):
    assert main(["simulate", "--out", str(tmp_path), "--waveform", "zero"]) == EXIT_OK
    assert float(rows(tmp_path / "metrics.csv")[0]["f_max"]) == 0.5


def test_simulate_missing_file(tmp_path, capsys):
    code = main(["simulate", "--out", str(tmp_path), "--waveform", str(tmp_path / "nope.txt")])
    assert code == EXIT_RUNTIME
    assert "nope.txt" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["simulate", "--set", "bogus=1"], ["simulate", "--preset", "osaka"],
                                  ["simulate", "--config", "/nonexistent.cfg"],
                                  ["simulate", "--set", "kappa=3"]])
def test_config_errors(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert not (tmp_path / "o").exists()


def test_simulate_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["simulate", "--out", str(tmp_path / d), "--preset", "brisbane"]) == EXIT_OK
    for f in ("trajectory.csv", "metrics.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_train_zero_updates(tmp_path):
    assert main(["train", "--out", str(tmp_path), "--updates", "0"]) == EXIT_NOT_CONVERGED
    assert rows(tmp_path / "seed_0" / "training_log.csv") == []
    lines = (tmp_path / "seed_0" / "final_waveform.txt").read_text().splitlines()
    assert lines[0].startswith("# dt_ns=") and len(lines) == 122
    assert max(abs(float(v)) for v in lines[1:]) < 5.0


def test_train_short_run(tmp_path):
    code = main(["train", "--out", str(tmp_path), "--updates", "3", "--seeds", "2",
                 "--set", "checkpoints=2"])
    assert code == EXIT_NOT_CONVERGED
    assert len(rows(tmp_path / "summary.csv")) == 2
    assert len(rows(tmp_path / "seed_1" / "training_log.csv")) == 3
    assert (tmp_path / "seed_0" / "waveform_00002.txt").exists()


def test_sweep_empty(tmp_path):
    assert main(["sweep-ratio", "--out", str(tmp_path), "--ratios", ""]) == EXIT_OK
    text = (tmp_path / "sweep_ratio.csv").read_text().splitlines()
    assert text[0].startswith("ratio,a4r_f_max") and len(text) == 1


def test_robustness_single_point_matches_simulate(tmp_path):
    assert main(["robustness", "--out", str(tmp_path / "r"), "--waveform", "square",
                 "--set", "grid_points=1"]) == EXIT_OK
    assert main(["simulate", "--out", str(tmp_path / "s")]) == EXIT_OK
    r = rows(tmp_path / "r" / "robustness.csv")
    s = rows(tmp_path / "s" / "metrics.csv")[0]
    assert len(r) == 1
    assert r[0]["f_max"] == s["f_max"] and r[0]["tau_r"] == s["tau_r"]
