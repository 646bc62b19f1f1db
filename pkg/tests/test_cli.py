import json
import subprocess
import sys

import pytest

from rumorlab.cli import main, parse_graph, separation_verdict, tightness_verdict


def test_simulate_star(capsys):
    assert main(["simulate", "--graph", "star:1000", "--protocol", "rpull-random", "--seed", "7"]) == 0
    assert capsys.readouterr().out.strip() == "broadcast_time=999"


def test_simulate_writes_trace(tmp_path, capsys):
    out = tmp_path / "run.csv"
    assert main(["simulate", "--graph", "path:5", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# rumorlab-csv schema=1 experiment=simulate")
    assert lines[1] == "run_id,t,S_t,new_count"
    assert lines[-1].split(",")[2] == "5"
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["protocol_spec"]["protocol"] == "pull" and meta["n"] == 5


def test_simulate_many_trials(capsys):
    assert main(["simulate", "--graph", "star:20", "--protocol", "rpull-adversarial", "--trials", "4"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["mean"] == 19 and summary["timeouts"] == 0


def test_stalling_needs_separation(capsys):
    assert main(["simulate", "--graph", "star:5", "--protocol", "rpull-adversarial",
                 "--adversary", "stalling"]) == 1
    assert main(["simulate", "--graph", "separation:8", "--protocol", "rpull-adversarial",
                 "--adversary", "stalling"]) == 0


def test_gen_graph(tmp_path, capsys):
    out = tmp_path / "lct.txt"
    assert main(["gen-graph", "lct:4", "--out", str(out)]) == 0
    assert "nodes=7 edges=12" in capsys.readouterr().out
    assert len(out.read_text().splitlines()) == 13
    side = json.loads((tmp_path / "lct.layout.json").read_text())
    assert side["layout"]["type"] == "lct" and side["edges"] == 12


@pytest.mark.parametrize("argv", [
    ["simulate", "--graph", "blob:3"],
    ["simulate", "--graph", "star:x"],
    ["simulate", "--graph", "star:5", "--protocol", "gossip"],
    ["gen-graph", "lct:3"],
    ["nonsense"],
    ["exp-coupling", "--suite", "huge"],
])
def test_config_errors_exit_one(argv, capsys):
    assert main(argv) == 1


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"graph": "star:30", "protocol": "rpull-random"}))
    assert main(["simulate", "--graph", "path:3", "--config", str(cfg)]) == 0
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["simulate", "--graph", "path:3", "--config", str(cfg)]) == 1
    cfg.write_text("{not json")
    assert main(["simulate", "--graph", "path:3", "--config", str(cfg)]) == 1


def test_checks_pass(tmp_path, capsys):
    assert main(["chernoff", "--samples", "20000", "--check"]) == 0
    assert main(["chernoff", "--p", "0.1", "--t", "0", "--samples", "20000", "--check"]) == 0
    assert main(["exp-coupling", "--trials", "30", "--check", "--out", str(tmp_path / "c.csv")]) == 0
    assert (tmp_path / "c.json").exists()
    assert main(["exp-tree", "--q", "3", "--trials", "2000", "--check"]) == 0


def test_verdicts():
    rows = [{"l": 16, "ratio": 3.2, "random": {"median": 10}, "random_bound": 100},
            {"l": 32, "ratio": 3.5, "random": {"median": 12}, "random_bound": 120}]
    assert separation_verdict(rows)[0]
    rows[1]["ratio"] = 3.1
    ok, why = separation_verdict(rows)
    assert not ok and "does not grow" in why
    trows = [{"k": 4, "m_star": 10, "pull_one_round_fraction": 1.0},
             {"k": 8, "m_star": 40, "pull_one_round_fraction": 1.0}]
    ok, why = tightness_verdict(trows)
    assert not ok and "outside" in why


def test_check_failure_exit_two(capsys):
    # with a negative threshold even a zero deficit counts as a failure
    assert main(["exp-dominance", "--samples", "500", "--sigma", "-1", "--check"]) == 2


def test_parse_graph_variants():
    g, lay = parse_graph("separation:8:1:doubled")
    assert lay.twin is not None
    g, lay = parse_graph("cbt:3")
    assert g.n == 15 and lay is None


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rumorlab", "gen-graph", "lct:2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "nodes=3 edges=3" in proc.stdout
