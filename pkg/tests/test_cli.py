import pytest

from distcond.cli import main, parse_grid, parse_params
from distcond.graph import read_edgelist
from distcond.report import ReportRecord, read_records, write_records


def test_generate_barbell(tmp_path, capsys):
    out = tmp_path / "b.edges"
    assert main(["generate", "barbell", "4", "--out", str(out)]) == 0
    g = read_edgelist(out)
    assert (g.n, g.m) == (8, 13)
    assert "conductance=0.0769231" in capsys.readouterr().out


def test_generate_cycle_and_parity_error(tmp_path, capsys):
    out = tmp_path / "c.edges"
    assert main(["generate", "cycle", "8", "--out", str(out)]) == 0
    g = read_edgelist(out)
    assert (g.n, g.m) == (8, 8)
    assert main(["generate", "random_regular", "n=7", "d=3", "--out", str(tmp_path / "x")]) == 2
    assert "even" in capsys.readouterr().err


def test_default_out_dir_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("DISTCOND_OUT_DIR", str(tmp_path))
    assert main(["generate", "complete", "5"]) == 0
    assert (tmp_path / "complete.edges").exists()


def test_test_command_two_components(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    argv = ["test", "--kind", "disjoint_union", "of=complete", "base_n=4", "--reps", "4", "--out", str(out)]
    assert main(argv) == 0
    recs = read_records(out)
    assert len(recs) == 4 and all(r.verdict == 0 and r.reject_reason == "bfs_incomplete" for r in recs)
    assert [r.seed for r in recs] == [0, 1, 2, 3]
    assert "accept_rate=0.0000" in capsys.readouterr().out


def test_test_command_reproducible_and_parallel(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    base = ["test", "--kind", "complete", "10", "--reps", "3", "--seed", "5"]
    assert main(base + ["--out", str(a)]) == 0
    assert main(base + ["--out", str(b), "--jobs", "2"]) == 0
    ra, rb = read_records(a), read_records(b)
    assert [r.without_timing() for r in ra] == [r.without_timing() for r in rb]


def test_test_command_records_congestion_violation(tmp_path):
    out = tmp_path / "v.jsonl"
    argv = ["test", "--kind", "complete", "8", "--sample-scale", "100", "--set-cap", "8",
            "--congest-lanes", "2", "--strict-congestion", "--out", str(out)]
    assert main(argv) == 0
    (rec,) = read_records(out)
    assert rec.reject_reason == "congestion_violation" and rec.error


def test_config_file(tmp_path):
    from distcond.protocols.tester import TesterConfig

    cfg_path = tmp_path / "cfg.txt"
    cfg_path.write_text(TesterConfig.desk(6, 0.5, walk_length=3).to_text())
    out = tmp_path / "o.jsonl"
    assert main(["test", "--kind", "complete", "6", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert read_records(out)[0].verdict in (0, 1)


def test_oracle_command(capsys):
    assert main(["oracle", "--kind", "cycle", "8", "--steps", "4"]) == 0
    text = capsys.readouterr().out
    assert text.count("PASS") == 5
    assert main(["oracle", "--kind", "barbell", "5", "--steps", "3"]) == 0
    assert "weak_set       PASS" in capsys.readouterr().out
    assert main(["oracle", "--kind", "complete", "2", "--steps", "0"]) == 0


def test_oracle_skips_over_caps(capsys):
    assert main(["oracle", "--kind", "cycle", "30", "--steps", "2"]) == 0
    assert "SKIP" in capsys.readouterr().out


def test_sweep(tmp_path, capsys):
    out = tmp_path / "sweep.tsv"
    argv = ["sweep", "--kind", "cycle_of_cliques", "size=4", "--vary", "cliques=3,4", "--phi", "0.3", "--out", str(out)]
    assert main(argv) == 0
    lines = out.read_text().splitlines()
    assert lines[0].split("\t")[:2] == ["n", "m"] and len(lines) == 3
    assert main(["sweep", "--kind", "cycle", "8"]) == 2


def test_single_point_sweep_matches_test(tmp_path, capsys):
    assert main(["sweep", "--kind", "complete", "--vary", "n=8", "--reps", "2"]) == 0
    row = capsys.readouterr().out.splitlines()[1].split("\t")
    assert main(["test", "--kind", "complete", "8", "--reps", "2", "--out", str(tmp_path / "t.jsonl")]) == 0
    recs = read_records(tmp_path / "t.jsonl")
    assert int(row[4]) == max(r.rounds for r in recs)
    assert float(row[6]) == sum(r.verdict for r in recs) / 2


def test_grid_and_params():
    assert parse_grid(["n=1,2", "phi=0.5"]) == [{"n": 1, "phi": 0.5}, {"n": 2, "phi": 0.5}]
    with pytest.raises(ValueError):
        parse_grid([])
    assert parse_params("random_regular", ["64", "d=3"]) == {"n": 64, "d": 3}
    with pytest.raises(ValueError):
        parse_params("cycle", ["4", "5"])


def test_report_round_trip(tmp_path):
    rec = ReportRecord(seed=1, graph="g", n=3, m=2, mode="exact", phi=0.5, eps=0.5, verdict=0,
                       reject_reason="discrepancy_large", rounds=10, congestion=40, budget_bits=512,
                       sample_size=2, log_s=[-3.5, float("-inf")], wall_time=0.25)
    path = tmp_path / "r.jsonl"
    write_records([rec, rec], path)
    assert read_records(path) == [rec, rec]
    with pytest.raises(ValueError):
        ReportRecord.from_json('{"schema_version": 99}')
