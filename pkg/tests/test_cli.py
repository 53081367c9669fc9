import json
import subprocess
import sys

import pytest

from conftest import flip_pattern_log
from hteselect import cli
from hteselect.data import write_csv


@pytest.fixture
def flip_csv(tmp_path):
    path = tmp_path / "flip.csv"
    write_csv(flip_pattern_log(), path)
    return path


def test_score_ranks_flip_feature_first(flip_csv, tmp_path, capsys):
    out = tmp_path / "scores.json"
    assert cli.main(["score", "--input", str(flip_csv), "--output", str(out), "--csv", str(tmp_path / "s.csv")]) == 0
    reports = json.loads(out.read_text())
    assert [r["feature"] for r in reports] == ["A", "B"]
    assert set(reports[0]) == {"feature", "hie", "hdd", "hie_norm", "hdd_norm", "combined", "bins_used", "merges", "flags"}
    assert "rank" in capsys.readouterr().out
    assert (tmp_path / "s.csv").read_text().splitlines()[0].startswith("feature,hie,hdd")


def test_hie_only_weights(tmp_path):
    sim = tmp_path / "sim.csv"
    assert cli.main(["simulate", "--n", "3000", "--seed", "5", "--output", str(sim)]) == 0
    out = tmp_path / "s.json"
    assert cli.main(["score", "--input", str(sim), "--output", str(out), "--alpha1", "1", "--alpha2", "0"]) == 0
    reports = json.loads(out.read_text())
    assert [r["feature"] for r in reports] == [r["feature"] for r in sorted(reports, key=lambda r: -r["hie"])]


def test_missing_input(tmp_path, capsys):
    code = cli.main(["score", "--input", str(tmp_path / "absent.csv"), "--output", str(tmp_path / "o.json")])
    assert code == cli.EXIT_DATA
    err = capsys.readouterr().err.strip()
    assert "absent.csv" in err and len(err.splitlines()) == 1


def test_bad_reward_is_validation_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("arm,reward,x\n0,1,1\n1,2,2\n")
    assert cli.main(["score", "--input", str(bad), "--output", str(tmp_path / "o.json")]) == cli.EXIT_DATA
    assert "row 2: reward must be 0 or 1" in capsys.readouterr().err


def test_usage_errors_exit_1(tmp_path):
    with pytest.raises(SystemExit) as e:
        cli.main(["score", "--output", "x.json"])
    assert e.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as e:
        cli.main(["frobnicate"])
    assert e.value.code == cli.EXIT_USAGE
    assert cli.main(["simulate", "--effect", "0.9", "--output", str(tmp_path / "s.csv")]) == cli.EXIT_USAGE


def test_runtime_failure_exit_3(flip_csv, tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(cli, "score_all_features", boom)
    assert cli.main(["score", "--input", str(flip_csv), "--output", str(tmp_path / "o.json")]) == cli.EXIT_RUNTIME


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    sim = tmp_path / "sim.csv"
    cfg.write_text(json.dumps({"n": 500, "seed": 9, "output": str(sim), "d-irrel": 1}))
    args = cli.parse_args(["simulate", "--config", str(cfg), "--seed", "3"])
    assert (args.n, args.seed, args.d_irrel, args.output) == (500, 3, 1, sim)
    assert cli.main(["simulate", "--config", str(cfg)]) == 0
    assert len(sim.read_text().splitlines()) == 501
    cfg.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(SystemExit) as e:
        cli.parse_args(["simulate", "--config", str(cfg), "--output", "x"])
    assert e.value.code == cli.EXIT_USAGE


def test_simulate_writes_truth(tmp_path):
    sim = tmp_path / "sim.csv"
    assert cli.main(["simulate", "--n", "200", "--output", str(sim)]) == 0
    truth = json.loads((tmp_path / "sim.truth.json").read_text())
    assert truth["labels"]["x0"] == "hte" and len(truth["best_arm"]) == 200


def test_replay_output(tmp_path):
    sim = tmp_path / "sim.csv"
    cli.main(["simulate", "--n", "2000", "--output", str(sim)])
    out = tmp_path / "r.json"
    code = cli.main(
        ["replay", "--input", str(sim), "--policy", "linucb", "--feature", "x0", "--feature", "x1",
         "--alpha-ucb", "0.5", "--output", str(out), "--timing"]
    )
    assert code == 0
    r = json.loads(out.read_text())
    assert r["features"] == ["x0", "x1"] and 0 < r["matched_count"] <= 2000 and r["duration_s"] > 0
    assert cli.main(["replay", "--input", str(sim), "--policy", "linucb", "--feature", "nope",
                     "--output", str(out)]) == cli.EXIT_DATA


def test_bench_smoke(tmp_path):
    out = tmp_path / "bench.json"
    assert cli.main(["bench", "--trials", "1", "--n", "1000", "--output", str(out)]) == 0
    report = json.loads(out.read_text())
    scores = report["trials"][0]["scores"]
    assert len(scores) == 10
    assert set(report["labels"].values()) == {"hte", "correlational", "irrelevant"}
    timing = json.loads((tmp_path / "bench_timing.json").read_text())
    assert all(v > 0 for v in timing["seconds"].values())
    rows = (tmp_path / "bench.csv").read_text().splitlines()
    assert rows[0].split(",")[:6] == ["trial", "feature", "class", "hie", "hdd", "combined"] and len(rows) == 11


def _run_twice(tmp_path, argv, outname):
    blobs = []
    for i in range(2):
        d = tmp_path / f"run{i}"
        d.mkdir()
        full = [a.replace("{d}", str(d)) for a in argv]
        assert cli.main(full) == 0
        blobs.append((d / outname).read_bytes())
    return blobs


@pytest.mark.parametrize(
    "argv, outname",
    [
        (["simulate", "--n", "800", "--seed", "21", "--output", "{d}/sim.csv"], "sim.csv"),
        (["bench", "--trials", "2", "--n", "900", "--seed", "4", "--output", "{d}/b.json"], "b.json"),
    ],
)
def test_seeded_determinism(tmp_path, argv, outname):
    a, b = _run_twice(tmp_path, argv, outname)
    assert a == b


def test_score_and_replay_determinism(tmp_path):
    sim = tmp_path / "sim.csv"
    cli.main(["simulate", "--n", "1500", "--seed", "2", "--output", str(sim)])
    for argv, outname in [
        (["score", "--input", str(sim), "--output", "{d}/s.json"], "s.json"),
        (["replay", "--input", str(sim), "--policy", "cohort-ts", "--feature", "x2", "--seed", "8",
          "--output", "{d}/r.json"], "r.json"),
    ]:
        sub = tmp_path / argv[0]
        sub.mkdir()
        a, b = _run_twice(sub, argv, outname)
        assert a == b


def test_module_entry_point(flip_csv, tmp_path):
    out = tmp_path / "o.json"
    proc = subprocess.run(
        [sys.executable, "-m", "hteselect", "score", "--input", str(flip_csv), "--output", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())[0]["feature"] == "A"
