import json

import pytest

from pdcg import ExperimentConfig
from pdcg.cli import cli_main


@pytest.fixture()
def config_path(tmp_path):
    cfg = ExperimentConfig(
        loss="logistic", regularizer="squared_l2", n=30, p=6, mu=1.0,
        seed=3, max_iters=50,
    )
    path = tmp_path / "cfg.json"
    cfg.dump(str(path))
    return str(path)


@pytest.fixture()
def certify_config_path(tmp_path):
    # instance from the certified-bound regime (scaled loss)
    cfg = ExperimentConfig(
        loss="hinge", regularizer="squared_l2", n=60, p=12, mu=1.0,
        seed=11, scale=20.0 / 60, max_iters=300,
    )
    path = tmp_path / "certify.json"
    cfg.dump(str(path))
    return str(path)


def test_solve_writes_csv_and_exits_zero(tmp_path, config_path, capsys):
    out = tmp_path / "trace.csv"
    assert cli_main(["solve", "--config", config_path, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,rho,primal,dual,gap,avg_primal,dual_subopt,bregman_ref"
    assert len(lines) == 51
    assert "solve:" in capsys.readouterr().out


def test_solve_byte_identical_reruns(tmp_path, config_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli_main(["solve", "--config", config_path, "--out", str(out1)]) == 0
    assert cli_main(["solve", "--config", config_path, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_solve_json_format(tmp_path, config_path):
    out = tmp_path / "trace.json"
    code = cli_main(
        ["solve", "--config", config_path, "--out", str(out), "--format", "json", "--max-iters", "7"]
    )
    assert code == 0
    obj = json.loads(out.read_text())
    assert len(obj["records"]) == 7
    assert obj["header"]["geometry"]["r2_primal"] > 0


def test_solve_requires_output(config_path):
    assert cli_main(["solve", "--config", config_path]) == 2


def test_solve_unwritable_path(config_path):
    assert cli_main(["solve", "--config", config_path, "--out", "/nonexistent/x.csv"]) == 2


def test_compare_passes(config_path, capsys):
    code = cli_main(["compare", "--config", config_path, "--iters", "100", "--tol", "1e-9"])
    assert code == 0
    assert "compare: PASS" in capsys.readouterr().out


def test_compare_line_search(config_path, capsys):
    code = cli_main(
        ["compare", "--config", config_path, "--iters", "50", "--schedule", "line-search"]
    )
    assert code == 0


def test_certify_pass_and_report(tmp_path, certify_config_path, capsys):
    report = tmp_path / "report.json"
    code = cli_main(
        ["certify", "--config", certify_config_path, "--prop", "gcg-fixed-min-gap", "--out", str(report)]
    )
    assert code == 0
    assert "certify: PASS" in capsys.readouterr().out
    obj = json.loads(report.read_text())
    assert obj["passed"] is True
    assert obj["bound_id"] == "gcg-fixed-min-gap"
    assert len(obj["margins"]) == 300


def test_certify_reference_based(certify_config_path, capsys):
    code = cli_main(
        ["certify", "--config", certify_config_path, "--prop", "md-distance", "--max-iters", "200"]
    )
    assert code == 0
    assert "certify: PASS" in capsys.readouterr().out


def test_certify_exit_one_on_failed_bound(tmp_path, capsys):
    # unscaled instance whose first-pair gap exceeds the t=1 bound
    cfg = ExperimentConfig(loss="hinge", regularizer="squared_l2", n=30, p=6, seed=3, max_iters=50)
    path = tmp_path / "c.json"
    cfg.dump(str(path))
    code = cli_main(["certify", "--config", path.as_posix(), "--prop", "gcg-linesearch-min-gap"])
    assert code == 1
    assert "certify: FAIL" in capsys.readouterr().out


def test_certify_compact_domain_bound(tmp_path, capsys):
    cfg = ExperimentConfig(
        loss="lad", regularizer="entropy", n=20, p=10, mu=1.0, scale=1.0,
        seed=0, max_iters=500,
    )
    path = tmp_path / "compact.json"
    cfg.dump(str(path))
    code = cli_main(["certify", "--config", str(path), "--prop", "compact-averaged-gap"])
    assert code == 0
    assert "certify: PASS" in capsys.readouterr().out


def test_sweep_writes_cells(tmp_path, config_path):
    out_dir = tmp_path / "cells"
    code = cli_main(
        [
            "sweep", "--config", config_path, "--out-dir", str(out_dir),
            "--schedules", "two-over-t-plus-one,one-over-t", "--seeds", "0:3",
            "--workers", "1",
        ]
    )
    assert code == 0
    assert len(list(out_dir.iterdir())) == 6


def test_unknown_flag_exits_two(config_path):
    assert cli_main(["solve", "--config", config_path, "--frobnicate"]) == 2


def test_unknown_command_exits_two():
    assert cli_main(["transmogrify"]) == 2


def test_missing_config_exits_two():
    assert cli_main(["solve", "--config", "/no/such/file.json", "--out", "/tmp/x.csv"]) == 2


def test_bad_config_value_exits_two(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"loss": "huber"}')
    assert cli_main(["solve", "--config", str(path), "--out", str(tmp_path / "x.csv")]) == 2


def test_version_flag():
    assert cli_main(["--version"]) == 0
