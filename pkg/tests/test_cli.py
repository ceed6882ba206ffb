import json

import pytest

from llfba.cli import expand_instances, main


def test_solve_and_verify(tmp_path, capsys):
    out = tmp_path / "sol.json"
    assert main(["solve", "example", "--method", "bigm", "-o", str(out)]) == 0
    assert "objective=20" in capsys.readouterr().out
    assert json.loads(out.read_text())["status"] == "Optimal"
    assert main(["verify", "example", str(out)]) == 0


def test_verify_flags_loop(tmp_path, capsys):
    out = tmp_path / "fba.json"
    main(["solve", "example", "--method", "fba", "-o", str(out)])
    assert main(["verify", "example", str(out)]) == 1
    assert "cycle found: r2 r3 r4" in capsys.readouterr().out


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text('method = "fba"\ntime_limit = 30\n')
    main(["solve", "example", "--config", str(cfg)])
    assert "objective=40" in capsys.readouterr().out
    main(["solve", "example", "--config", str(cfg), "--method", "hull"])
    assert "objective=20" in capsys.readouterr().out


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text("colour = 1\n")
    with pytest.raises(SystemExit):
        main(["solve", "example", "--config", str(cfg)])


def test_backend_env(monkeypatch, capsys):
    monkeypatch.setenv("LLFBA_BACKEND", "highs-bigm")
    assert main(["solve", "example", "--method", "indicator"]) == 0
    assert "objective=20" in capsys.readouterr().out
    monkeypatch.setenv("LLFBA_BACKEND", "nope")
    assert main(["solve", "example"]) == 3


def test_bench_aggregate_profile(tmp_path, capsys):
    grid = tmp_path / "grid.toml"
    grid.write_text(
        'instances = ["example", "random:0..1"]\n'
        "time_limit = 60\n"
        '[[methods]]\nmethod = "bigm"\n'
        '[[methods]]\nmethod = "benders"\npct = 20\nstrategy = "Distinct"\n'
    )
    report = tmp_path / "rep.csv"
    assert main(["bench", str(grid), "-o", str(report)]) == 0
    lines = report.read_text().splitlines()
    assert len(lines) == 1 + 3 * 2
    assert main(["aggregate", str(report)]) == 0
    assert "bigm,all,3,100.0" in capsys.readouterr().out
    assert main(["profile", str(report)]) == 0


def test_enzyme_pipeline(tmp_path, capsys):
    data = tmp_path / "enz.json"
    sol = tmp_path / "sol.json"
    assert main(["enzyme-data", "example", str(data), "--seed", "4"]) == 0
    assert main(["solve", "example", "--enzyme", str(data), "-o", str(sol)]) == 0
    assert main(["verify", "example", str(sol)]) == 0


def test_lp_dump(tmp_path):
    path = tmp_path / "m.lp"
    main(["solve", "example", "--method", "hull", "--lp-dump", str(path)])
    assert "Binaries" in path.read_text()


def test_missing_model_file(capsys):
    assert main(["solve", "/nonexistent/model.json"]) == 3


def test_expand_instances():
    assert expand_instances(["random:2..4", "x.json"]) == ["random:2", "random:3", "random:4", "x.json"]
