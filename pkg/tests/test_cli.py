import json

import pytest

from socnet.cli import SCHEMA, main, substream

EDGES = "a b\nb c\nc d\nd a\na c\nd e\n"


@pytest.fixture
def files(tmp_path):
    (tmp_path / "g.edges").write_text(EDGES)
    (tmp_path / "star.edges").write_text("".join(f"0 {i}\n" for i in range(1, 7)))
    (tmp_path / "pairs.csv").write_text("i,j,mu,sigma\n0,1,0.2,0.1\n1,2,0.3,0.1\n2,3,0.1,0.05\n"
                                        "3,0,0.2,0.1\n0,2,0.4,0.1\n3,4,0.3,0.1\n")
    (tmp_path / "profile.csv").write_text("0,1,2\n1,2,0\n0,2,1\n")
    return tmp_path


def run(*argv):
    return main([str(a) for a in argv])


def test_ged_star_and_manifest(files, capsys):
    out = files / "out"
    assert run("ged", "--graph", files / "star.edges", "--target", "kstar", "--k", "1",
               "--out", out) == 0
    body = json.loads((out / "ged.json").read_text())
    assert body["distance"] == 0
    man = json.loads((out / "ged.json.manifest.json").read_text())
    assert man["subcommand"] == "ged"
    assert {"config", "seed", "versions", "wall_time_s"} <= set(man)


def test_refuses_to_overwrite(files):
    out = files / "out"
    args = ["aggregate", "--profile", files / "profile.csv", "--rule", "borda", "--out", out]
    assert run(*args) == 0
    assert run(*args) == 2
    assert run(*args, "--overwrite") == 0


def test_usage_errors_exit_one(files, capsys):
    assert run("bogus") == 1
    assert run("aggregate", "--nope") == 1
    assert run("diffuse", "--graph", files / "g.edges", "--seeds", "0", "--out", files / "o") == 1
    assert "seed" in capsys.readouterr().err


def test_contract_error_exits_two(files):
    assert run("aggregate", "--profile", files / "missing.csv", "--rule", "borda",
               "--out", files / "o") == 2


def test_cap_refusal_exits_three(files):
    (files / "big.csv").write_text("0,1,2,3,4,5,6\n")
    assert run("aggregate", "--profile", files / "big.csv", "--rule", "kemeny",
               "--out", files / "o") == 3


def test_schema_dump(capsys):
    assert run("--schema") == 0
    assert json.loads(capsys.readouterr().out) == SCHEMA


def test_output_dir_from_environment(files, monkeypatch):
    monkeypatch.setenv("SOCNET_OUTPUT_DIR", str(files / "env"))
    assert run("aggregate", "--profile", files / "profile.csv", "--rule", "plurality") == 0
    assert (files / "env" / "aggregate.csv").exists()


def test_config_supplies_required_options_and_flags_win(files):
    conf = files / "conf.json"
    conf.write_text(json.dumps({"profile": str(files / "profile.csv"), "rule": "plurality"}))
    assert run("aggregate", "--config", conf, "--out", files / "a") == 0
    assert run("aggregate", "--config", conf, "--rule", "borda", "--out", files / "b") == 0
    man = json.loads((files / "b" / "aggregate.csv.manifest.json").read_text())
    assert man["config"]["rule"] == "borda"
    conf.write_text(json.dumps({"nonsense": 1}))
    assert run("aggregate", "--config", conf, "--out", files / "c") == 1


def test_seeded_reruns_are_byte_identical(files):
    for name in ("x", "y"):
        assert run("prefs-generate", "--graph", files / "g.edges", "--pairs", files / "pairs.csv",
                   "--kind", "s-random", "--topics", 50, "--seed", 3, "--out", files / name) == 0
        assert run("diffuse", "--graph", files / "g.edges", "--model", "wc", "--seeds", "0",
                   "--iterations", 500, "--seed", 3, "--out", files / name) == 0
    for f in ("corpus.csv", "spread.csv"):
        assert (files / "x" / f).read_bytes() == (files / "y" / f).read_bytes()


def test_substreams_are_independent_and_repeatable():
    a = substream(7, "phase1").random(3)
    assert (a == substream(7, "phase1").random(3)).all()
    assert not (a == substream(7, "phase2").random(3)).all()


def test_tu_game_exact(files):
    sim = files / "sim.csv"
    sim.write_text("1,0.5,0.2\n0.5,1,0.4\n0.2,0.4,1\n")
    assert run("tu-game", "--similarity", sim, "--exact", "--out", files / "t") == 0
    rows = (files / "t" / "tu-game.csv").read_text().splitlines()
    assert rows[0] == "node,shapley,gately,tau"
    assert rows[1].startswith("0,0.35,0.35,0.35")
    man = json.loads((files / "t" / "tu-game.csv.manifest.json").read_text())
    assert man["tau_lambda"] == "1/2"


def test_formation_run_writes_curve(files):
    assert run("formation", "--topology", "star", "--n-max", 6, "--seed", 1,
               "--out", files / "f") == 0
    lines = (files / "f" / "formation.csv").read_text().splitlines()
    assert lines[0] == "run,n,distance,stable"
    assert lines[-1].split(",")[2] == "0"
