import csv
import io
import json
import subprocess
import sys

import pytest

from dihplab import __version__
from dihplab.cli import main
from dihplab.dihp import load_instance
from dihplab.maxcut import load_graph, maxcut_exact, reduce_to_graph


def run(capsys, *argv: str) -> tuple[int, str]:
    code = main(list(argv))
    return code, capsys.readouterr().out


def parse_csv(text: str) -> tuple[dict, list[dict]]:
    head, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            head[key] = value
        else:
            body.append(line)
    return head, list(csv.DictReader(io.StringIO("\n".join(body))))


def usage_exit(*argv: str) -> int:
    with pytest.raises(SystemExit) as exc:
        main(list(argv))
    return exc.value.code


# ---- headers and formats ----------------------------------------------------------


def test_csv_header_records_run(capsys):
    code, out = run(capsys, "spectrum", "--n", "8", "--seed", "11")
    assert code == 0
    head, rows = parse_csv(out)
    assert head["dihplab"] == __version__ and head["command"] == "spectrum" and head["seed"] == "11"
    assert "Philox" in head["rng"]
    conf = json.loads(head["config"])
    assert conf["n"] == 8 and conf["source"] == "single"
    assert [int(r["level"]) for r in rows] == [0, 1, 2, 3, 4]


def test_json_output(capsys):
    code, out = run(capsys, "potential", "--n", "1000", "--alpha-n", "20", "--T", "3", "--s", "5",
                    "--trials", "10", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["dihplab"] == __version__ and doc["seed"] == 0 and doc["config"]["T"] == 3
    assert len(doc["rows"]) == 3 and doc["summary"]["ratio_ok"]


def test_seed_changes_output(capsys):
    a = run(capsys, "gen", "--n", "12", "--alpha-n", "3", "--T", "3", "--seed", "1")[1]
    b = run(capsys, "gen", "--n", "12", "--alpha-n", "3", "--T", "3", "--seed", "2")[1]
    assert a != b
    assert a == run(capsys, "gen", "--n", "12", "--alpha-n", "3", "--T", "3", "--seed", "1")[1]


# ---- usage errors --------------------------------------------------------------------


def test_plot_needs_out():
    assert usage_exit("spectrum", "--plot") == 2


def test_unknown_option():
    assert usage_exit("gap", "--bogus") == 2


def test_bad_params_exit_2(capsys):
    assert main(["audit", "--which", "s1", "--params", "1e40,1e7"]) == 2
    assert main(["audit", "--which", "s1", "--params", "x,1,2,3"]) == 2
    assert "bad --params" in capsys.readouterr().err


def test_invalid_instance_sizes_exit_2(capsys):
    assert main(["gen", "--n", "6", "--alpha-n", "4"]) == 2
    assert "error" in capsys.readouterr().err


def test_config_file(tmp_path, capsys):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"n": 14, "alpha_n": 2, "T": 2}))
    code, out = run(capsys, "gen", "--config", str(conf), "--T", "3")
    assert code == 0
    inst = load_instance(out)
    assert (inst.n, inst.alpha_n, inst.T) == (14, 2, 3)  # explicit flags win


def test_config_rejects_unknown_keys(tmp_path):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"nope": 1}))
    assert usage_exit("gen", "--config", str(conf)) == 2
    conf.write_text("[1, 2]")
    assert usage_exit("gen", "--config", str(conf)) == 2


# ---- subcommands ---------------------------------------------------------------------


def test_gen_and_cut_roundtrip(tmp_path, capsys):
    inst_file, graph_file = tmp_path / "inst.txt", tmp_path / "g.txt"
    code = main(["gen", "--n", "16", "--alpha-n", "4", "--T", "6", "--case", "yes",
                 "--out", str(inst_file), "--graph-out", str(graph_file)])
    assert code == 0
    inst = load_instance(inst_file.read_text())
    G = load_graph(graph_file.read_text())
    assert G == reduce_to_graph(inst)
    code, out = run(capsys, "cut", "--graph", str(graph_file))
    assert code == 0
    row = parse_csv(out)[1][0]
    assert int(row["maxcut"]) == G.m == maxcut_exact(G)[0] and row["exact"] == "true"
    code, out = run(capsys, "cut", "--graph", str(graph_file), "--heuristic")
    assert code == 0 and int(parse_csv(out)[1][0]["maxcut"]) == G.m


def test_cut_rejects_bad_graph(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 0 1\n")
    assert main(["cut", "--graph", str(bad)]) == 2


def test_audit_s0_passes(capsys):
    code, out = run(capsys, "audit", "--which", "s0", "--levels", "1,3,10")
    head, rows = parse_csv(out)
    assert code == 0 and json.loads(head["summary"])["passed"]
    assert rows and all(r["passed"] == "true" and r["check"] == "s0" for r in rows)


def test_audit_reports_unasserted_tuple(capsys):
    # the size preconditions fail, so a failing S3 row is reported but does not fail the run
    code, out = run(capsys, "audit", "--which", "s3", "--params", "1e10,1e7,10,1e-11", "--levels", "1")
    rows = parse_csv(out)[1]
    assert code == 0
    assert rows[0]["asserted"] == "false" and rows[0]["passed"] == "false"


def test_random_protocol_near_half(capsys):
    code, out = run(capsys, "advantage", "--protocol", "random", "--n", "8", "--alpha-n", "2", "--T", "2",
                    "--s", "2", "--trials", "100000")
    row = parse_csv(out)[1][0]
    assert code == 0 and abs(float(row["success_rate"]) - 0.5) <= 0.01


def test_gap_exits_zero_with_bipartite_yes(capsys):
    code, out = run(capsys, "gap", "--n", "16", "--alpha-n", "4", "--T", "10", "--trials", "5")
    head, rows = parse_csv(out)
    summary = json.loads(head["summary"])
    assert code == 0 and summary["all_yes_bipartite"] and summary["exact"]
    assert len(rows) == 5


def test_spectrum_require_bounded_fails_on_singleton(capsys):
    code, out = run(capsys, "spectrum", "--n", "10", "--source", "singleton", "--require-bounded")
    assert code == 1
    assert json.loads(parse_csv(out)[0]["summary"])["bounded"] is False


def test_plot_written(tmp_path):
    out = tmp_path / "adv.csv"
    assert main(["advantage", "--trials", "50", "--out", str(out), "--plot"]) == 0
    png = out.with_suffix(".png").read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "dihplab", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == f"dihplab {__version__}"
