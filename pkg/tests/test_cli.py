import json
import math
import os

import pytest

from mkdvlab import cli


def write_cfg(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


SMALL_VERIFY = """
# one sweep point, two sample times
command = verify
orders = 5
alpha = 1.1
beta = 0.9
c = 1.0
t = 0.0, 0.37
"""


def run_main(args):
    return cli.main(list(args))


# --------------------------------------------------------------------------
# config file handling

def test_parse_flat_file(tmp_path):
    p = write_cfg(tmp_path / "c.txt", SMALL_VERIFY)
    raw = cli.parse_config_file(p)
    assert raw["orders"] == "5"
    assert raw["t"] == "0.0, 0.37"
    cfg = cli.build_config("verify", raw, str(tmp_path))
    assert cfg.orders == (5,)
    assert cfg.alphas == (1.1,)
    assert cfg.times == (0.0, 0.37)
    # unset knobs fall back to the command defaults
    assert cfg.tolerances["breather_ode"] == 1e-8


def test_parse_errors(tmp_path):
    p = write_cfg(tmp_path / "dup.txt", "orders = 5\norders = 7\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config_file(p)
    p = write_cfg(tmp_path / "noeq.txt", "orders 5\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config_file(p)


def test_build_config_rejections(tmp_path):
    out = str(tmp_path)
    good = {"orders": "5"}
    with pytest.raises(cli.ConfigError):  # unknown key
        cli.build_config("verify", {"ordrs": "5"}, out)
    with pytest.raises(cli.ConfigError):  # order outside the hierarchy
        cli.build_config("verify", {"orders": "4"}, out)
    with pytest.raises(cli.ConfigError):  # empty sweep list
        cli.build_config("verify", {"orders": ""}, out)
    with pytest.raises(cli.ConfigError):  # command mismatch inside the file
        cli.build_config("verify", {"command": "spectrum"}, out)
    with pytest.raises(cli.ConfigError):  # unknown tolerance name
        cli.build_config("verify", {"tol_bogus": "1e-3"}, out)
    with pytest.raises(cli.ConfigError):  # negative budget
        cli.build_config("verify", {"tol_breather_ode": "-1"}, out)
    with pytest.raises(cli.ConfigError):  # non-finite budget
        cli.build_config("verify", {"tol_breather_ode": "inf"}, out)
    with pytest.raises(cli.ConfigError):  # eta is capped
        cli.build_config("stability", {"eta": "0.5"}, out)
    with pytest.raises(cli.ConfigError):  # spread check halves the window
        cli.build_config("spectrum", {"window_n": "256"}, out)
    with pytest.raises(cli.ConfigError):  # output directory must exist
        cli.build_config("verify", good, str(tmp_path / "missing"))
    cfg = cli.build_config("verify", good, out, seed_override=99)
    assert cfg.seed == 99


def test_zero_budget_allowed(tmp_path):
    # a zero budget is the documented way to force a red run
    cfg = cli.build_config("verify", {"tol_identity": "0"}, str(tmp_path))
    assert cfg.tolerances["identity"] == 0.0


# --------------------------------------------------------------------------
# deterministic serialization

def test_float_formatting():
    assert cli.dump_json({"x": 0.1}) == '{\n  "x": 0.10000000000000001\n}\n'
    assert cli.dump_json({"b": True, "i": 3}) == \
        '{\n  "b": true,\n  "i": 3\n}\n'
    assert cli.dump_json({"v": float("nan")}) == '{\n  "v": null\n}\n'
    assert cli.dump_json({"v": float("inf")}) == '{\n  "v": null\n}\n'
    assert cli.dump_json(["a", 2.5]) == '[\n  "a",\n  2.5\n]\n'
    # keys come out sorted regardless of insertion order
    assert cli.dump_json({"z": 1, "a": 2}) == '{\n  "a": 2,\n  "z": 1\n}\n'


def test_csv_writer():
    text = cli.dump_csv(("id", "x"), [("r1", 1.5), ("r2", float("nan"))])
    lines = text.strip().split("\n")
    assert lines[0] == "id,x"
    assert lines[1] == "r1,1.5"
    assert lines[2] == "r2,null"


def test_report_invariant():
    rec = {"id": "r", "params": {}, "measured": 2.0, "budget": 1.0,
           "pass": True}
    with pytest.raises(ValueError):
        cli.SuiteReport(command="verify", config_echo={}, records=(rec,))


# --------------------------------------------------------------------------
# end-to-end runs (kept to one cheap sweep point)

def test_verify_run_and_determinism(tmp_path):
    cfgp = write_cfg(tmp_path / "c.txt", SMALL_VERIFY)
    out1 = tmp_path / "o1"
    out2 = tmp_path / "o2"
    out1.mkdir()
    out2.mkdir()
    assert run_main(["verify", "--config", cfgp, "--out", str(out1)]) == 0
    assert run_main(["verify", "--config", cfgp, "--out", str(out2)]) == 0
    b1 = (out1 / "report.json").read_bytes()
    assert b1 == (out2 / "report.json").read_bytes()
    assert (out1 / "records.csv").read_bytes() == \
        (out2 / "records.csv").read_bytes()

    report = json.loads(b1)
    cfg = cli.build_config("verify", cli.parse_config_file(cfgp), str(out1))
    assert len(report["records"]) == cli.verify_record_count(cfg)
    assert all(r["pass"] for r in report["records"])
    for r in report["records"]:
        assert math.isfinite(r["measured"])


def test_zero_budget_run_fails(tmp_path):
    text = SMALL_VERIFY + "".join(
        f"tol_{name} = 0\n"
        for name in ("breather_ode", "soliton_ode", "identity", "energy",
                     "reduction", "unique"))
    cfgp = write_cfg(tmp_path / "c.txt", text)
    out = tmp_path / "o"
    out.mkdir()
    assert run_main(["verify", "--config", cfgp, "--out", str(out)]) == 1
    report = json.loads((out / "report.json").read_text())
    assert not any(r["pass"] for r in report["records"])


def test_worker_pool_matches_sequential(tmp_path, monkeypatch):
    text = SMALL_VERIFY.replace("orders = 5", "orders = 3, 5")
    cfgp = write_cfg(tmp_path / "c.txt", text)
    out1 = tmp_path / "seq"
    out2 = tmp_path / "pool"
    out1.mkdir()
    out2.mkdir()
    monkeypatch.delenv("MKDVLAB_WORKERS", raising=False)
    assert run_main(["verify", "--config", cfgp, "--out", str(out1)]) == 0
    monkeypatch.setenv("MKDVLAB_WORKERS", "2")
    assert run_main(["verify", "--config", cfgp, "--out", str(out2)]) == 0
    assert (out1 / "report.json").read_bytes() == \
        (out2 / "report.json").read_bytes()


def test_exit_code_config_error(tmp_path):
    out = tmp_path / "o"
    out.mkdir()
    bad = write_cfg(tmp_path / "bad.txt", "nonsense_key = 1\n")
    assert run_main(["verify", "--config", bad, "--out", str(out)]) == 2
    good = write_cfg(tmp_path / "good.txt", SMALL_VERIFY)
    missing = str(tmp_path / "nowhere")
    assert run_main(["verify", "--config", good, "--out", missing]) == 2


def test_report_structure(tmp_path):
    cfgp = write_cfg(tmp_path / "c.txt", SMALL_VERIFY)
    out = tmp_path / "o"
    out.mkdir()
    run_main(["verify", "--config", cfgp, "--out", str(out)])
    report = json.loads((out / "report.json").read_text())
    assert report["command"] == "verify"
    assert report["config"]["orders"] == [5]
    assert "tool_version" in report
    ids = [r["id"] for r in report["records"]]
    assert len(ids) == len(set(ids))  # record ids are unique
    assert os.path.getsize(out / "records.csv") > 0
