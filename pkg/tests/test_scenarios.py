import math

import numpy as np
import pytest

from swtbounds.cli import main
from swtbounds.errors import ConfigError
from swtbounds.scenarios import (OUTPUT_ENV, format_number, load_config, parse_config,
                                 run_scenario, sweep, validate_config)


@pytest.fixture(autouse=True)
def _isolate_env(monkeypatch):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)


def write_cfg(tmp_path, text, name="cfg.txt"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def read_csv(path):
    lines = path.read_text(encoding="utf-8").split("\n")
    assert lines[-1] == ""
    header = lines[0].split(",")
    rows = [list(map(float, ln.split(","))) for ln in lines[1:-1]]
    return header, np.array(rows)


def test_parse_config_basic_and_errors():
    cfg = parse_config("# comment\nscenario = single-state\nomega = 0.5  # inline\n")
    assert cfg.scenario == "single-state" and cfg.parameters == {"omega": "0.5"}
    with pytest.raises(ConfigError) as err:
        parse_config("omega = 1\n")
    assert err.value.key == "scenario"
    with pytest.raises(ConfigError) as err:
        parse_config("scenario = x\na = 1\na = 2\n")
    assert err.value.key == "a"
    with pytest.raises(ConfigError):
        parse_config("scenario = x\njunk\n")


def test_validate_config_issues_name_keys():
    assert validate_config(parse_config("scenario = single-state\nomega = 0.5")) == []
    issues = validate_config(parse_config("scenario = pxp-lightcone\ndelta0 = -1"))
    keys = {i.split(":")[0] for i in issues}
    assert {"N", "delta0", "omega", "t_max", "dt"} <= keys
    assert validate_config(parse_config("scenario = nope"))[0].startswith("scenario")
    issues = validate_config(parse_config("scenario = single-state\nomega = abc"))
    assert issues[0].startswith("omega")
    issues = validate_config(parse_config("scenario = closed-bound\nrank = 8\ndim = 8"))
    assert issues[0].startswith("rank")
    assert validate_config(parse_config("scenario = single-state\nomega=1\nbogus = 1"))


def test_run_rejects_invalid_config(tmp_path):
    cfg = parse_config("scenario = single-state\ndelta0 = 0\nomega = 1")
    with pytest.raises(ConfigError) as err:
        run_scenario(cfg, write=False)
    assert err.value.key == "delta0"


def test_format_number():
    assert format_number(0.1) == "1.0000000000000001e-01"
    assert format_number(3) == "3"
    assert format_number(math.nan) == "nan"


def test_single_state_scenario_csv(tmp_path):
    path = write_cfg(tmp_path, "scenario = single-state\nomega = 1\nt_max = 5\ndt = 0.5\n")
    res = run_scenario(load_config(path))
    header, data = read_csv(res.paths[0])
    assert header == ["t", "epsilon", "const_bound"]
    assert data.shape == (11, 3)
    assert np.all(data[:, 1] <= data[:, 2])
    assert "\r" not in res.paths[0].read_text()


def test_closed_bound_scenario_and_determinism(tmp_path):
    text = "scenario = closed-bound\nseed = 4\ndim = 6\nrank = 2\nratio = 0.2\nn_times = 12\n"
    p1 = run_scenario(load_config(write_cfg(tmp_path, text + "output = a.csv\n"))).paths[0]
    p2 = run_scenario(load_config(write_cfg(tmp_path, text + "output = b.csv\n"))).paths[0]
    assert p1.read_bytes() == p2.read_bytes()
    header, data = read_csv(p1)
    assert header == ["t", "epsilon", "b1", "b2", "asymptotic"]
    assert np.all(data[:, 1] <= data[:, 2]) and np.all(data[:, 1] <= data[:, 3])


def test_bound_tables_scenario(tmp_path):
    res = run_scenario(load_config(write_cfg(tmp_path, "scenario = bound-tables\n")))
    header, data = read_csv(res.paths[0])
    assert header == ["x", "slope_b1", "slope_b2", "intercept_b1", "intercept_b2"]
    below = data[:, 0] < 0.188
    assert np.all(data[below, 2] < data[below, 1])
    assert np.all(data[data[:, 0] > 0.19, 2] > data[data[:, 0] > 0.19, 1])
    assert res.metric == pytest.approx(0.18868, abs=1e-4)


def test_zeno_scenarios(tmp_path):
    res = run_scenario(load_config(write_cfg(tmp_path, "scenario = zeno-example1\n")))
    header, data = read_csv(res.paths[0])
    assert header == ["t", "epsilon", "bound_exact", "bound_asymptotic"]
    assert np.all(data[:, 1] <= data[:, 2])
    assert res.metric == pytest.approx(2 * 0.05 / (2 + 0.05 ** 2), rel=0.02)
    res = run_scenario(load_config(write_cfg(
        tmp_path, "scenario = zeno-example2\nt_max = 60\ndt = 1\nomega = 0.2\n")))
    assert res.metric_name == "slope"


def test_pxp_scenarios_small_chain(tmp_path):
    text = ("scenario = pxp-lightcone\nN = 6\ndelta0 = 10\nomega = 2\n"
            "t_max = 3\ndt = 0.1\n")
    res = run_scenario(load_config(write_cfg(tmp_path, text)))
    header, data = read_csv(res.paths[0])
    assert header == ["t", "site", "commutator_norm"] and data.shape == (31 * 6, 3)
    cheader, cdata = read_csv(res.paths[1])
    assert res.paths[1].name == "pxp-lightcone_crossings.csv"
    assert cheader == ["site", "crossing_time"] and np.all(np.diff(cdata[:, 1]) > 0)
    res = run_scenario(load_config(write_cfg(
        tmp_path, "scenario = pxp-collapse\nN = 6\ndelta0 = 10\nomega = 2\ny_site = 4\n")))
    header, data = read_csv(res.paths[0])
    assert header == ["t", "scaled_time", "commutator_norm"]
    assert np.allclose(data[:, 1], data[:, 0] * 1.0)


def test_output_dir_env_override(tmp_path, monkeypatch):
    out = tmp_path / "elsewhere"
    monkeypatch.setenv(OUTPUT_ENV, str(out))
    res = run_scenario(load_config(write_cfg(tmp_path, "scenario = bound-tables\n")))
    assert res.paths[0].parent == out and res.paths[0].exists()


def test_sweep_with_failure_and_collapse_summary(tmp_path):
    cfg = load_config(write_cfg(tmp_path, "scenario = single-state\nt_max = 2\ndt = 0.5\n"))
    path, rows = sweep(cfg, "omega", ["0.5", "-1", "1"])
    assert [r[1] for r in rows] == ["ok", "failed", "ok"]
    header, _ = path.read_text().split("\n", 1)
    assert header == "omega,status,max_epsilon_over_bound,message"
    assert (tmp_path / "single-state_omega=0.5.csv").exists()
    cfg = load_config(write_cfg(tmp_path, "scenario = pxp-collapse\nN = 5\ndelta0 = 30\n"
                                          "omega = 1\ny_site = 3\nn_times = 9\n", "c.txt"))
    path, rows = sweep(cfg, "omega", ["1", "2"])
    assert "sup_deviation" in path.read_text().split("\n")[0]
    assert rows[0][3] == 0.0 and rows[1][3] < 0.1
    assert sweep(cfg, "omega", [])[1] == []
    with pytest.raises(ConfigError):
        sweep(cfg, "nonexistent", ["1"])


def test_cli_commands(tmp_path, capsys):
    good = write_cfg(tmp_path, "scenario = bound-tables\nn_points = 5\n")
    bad = write_cfg(tmp_path, "scenario = single-state\n", "bad.txt")
    assert main(["validate", str(good)]) == 0
    assert main(["validate", str(bad)]) == 1
    assert "omega" in capsys.readouterr().out
    assert main(["run", str(good)]) == 0
    assert main(["run", str(bad)]) == 2
    assert "key: omega" in capsys.readouterr().err
    assert main(["sweep", str(good), "--axis", "x_max", "--values", "0.3,0.4"]) == 0
    assert main(["sweep", str(good), "--axis", "x_max", "--values", "0.3,0.9"]) == 1


def test_cli_selftest_passes():
    assert main(["selftest"]) == 0
