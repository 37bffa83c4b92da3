import json
import os
from pathlib import Path

import pytest

from armsolver.cli import main

GOLDEN = Path(__file__).parent / "golden"
UNREACHABLE = json.dumps([[1, 0, 0, 5], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def check_golden(name, text):
    path = GOLDEN / name
    if os.environ.get("ARMSOLVER_UPDATE_GOLDEN"):
        path.write_text(text, encoding="utf-8")
    assert text == path.read_text(encoding="utf-8")


@pytest.fixture
def ets_file(tmp_path):
    p = tmp_path / "arm.ets"
    p.write_text("Rz(q3) tx(L1) Ry(-q7) tz(d2)\n")
    return p


def test_ets_parse_json(capsys, ets_file):
    code, out, _ = run(capsys, "ets", "parse", ets_file, "--json")
    assert code == 0
    check_golden("ets_parse.json", out)


def test_ets_parse_text(capsys, ets_file):
    code, out, _ = run(capsys, "ets", "parse", ets_file)
    assert code == 0 and "3 joints" in out


def test_ets_parse_stdin(capsys, monkeypatch):
    import io
    monkeypatch.setattr("sys.stdin", io.StringIO("Rz(q1)"))
    code, out, _ = run(capsys, "ets", "parse", "-", "--json")
    assert code == 0 and json.loads(out)["n"] == 1


@pytest.mark.parametrize("argv", [
    ("ets", "parse", "/nonexistent.ets"),
    ("fk", "--ets", "Qx(1)"),
    ("fk", "--ets", "Rz(q1) tx(L1)", "--q", "0.1"),
    ("fk", "--ets", "Rz(q1)", "--q", "a,b"),
    ("jac", "--robot", "frankie", "--q", "qr"),
    ("ik", "--robot", "ur3", "--target", "[[1,2],[3,4]]"),
    ("bench", "run", "--suite", "bench2-images", "--out", "/tmp/never"),
])
def test_usage_errors_exit_1(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and "error" in err


def test_bad_subcommand_exits_1(capsys):
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code == 1


def test_fk_symbolic_golden(capsys):
    code, out, _ = run(capsys, "fk", "--ets", "Rz(q1) tx(L1) Ry(-q2) tx(L2)", "--symbolic", "--json")
    assert code == 0
    check_golden("fk_symbolic.json", out)


def test_fk_numeric(capsys):
    code, out, _ = run(capsys, "fk", "--ets", "Rz(q1) tx(L1)", "--q", "0.5", "--const", "L1=2", "--json")
    assert code == 0
    m = json.loads(out)["matrix"]
    assert m[0][3] == pytest.approx(2 * 0.8775825618903728)


def test_jac_json(capsys):
    code, out, _ = run(capsys, "jac", "--robot", "ur3", "--q", "qr", "--frame", "ee", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["frame"] == "end-effector" and len(doc["jacobian"]) == 6


def test_ik_success(capsys):
    from armsolver.ets import builtin_model
    T = builtin_model("ur3").compiled().fk(builtin_model("ur3").config("qr") + 0.1)
    code, out, _ = run(capsys, "ik", "--robot", "ur3", "--target", json.dumps(T.tolist()), "--json")
    doc = json.loads(out)
    assert code == 0 and doc["success"] and doc["residual"] < 1e-6


def test_ik_unreachable_reports_failure_with_exit_0(capsys):
    code, out, _ = run(capsys, "ik", "--robot", "ur3", "--target", UNREACHABLE, "--restarts", "3", "--json")
    doc = json.loads(out)
    assert code == 0
    assert doc["success"] is False and doc["residual"] > 1


def test_servo_writes_files(capsys, tmp_path):
    from armsolver.ets import builtin_model
    m = builtin_model("panda")
    T = m.compiled().fk(m.config("qr") + 0.2)
    code, out, _ = run(capsys, "servo", "--robot", "panda", "--target", json.dumps(T.tolist()), "--gain", "3",
                       "--out", tmp_path / "s.csv", "--svg", tmp_path / "s.svg", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["arrived"]
    assert (tmp_path / "s.csv").exists() and (tmp_path / "s.svg").exists()


def test_traj_quintic_golden(capsys):
    code, out, _ = run(capsys, "traj", "quintic", "--robot", "ur3", "--to", "qr", "--json")
    assert code == 0
    check_golden("traj_quintic.json", out)


def test_agent_ask_writes_log(capsys, tmp_path):
    q = tmp_path / "q.txt"
    q.write_text("Create a ur3 robot and compute the Jacobian.")
    code, out, _ = run(capsys, "agent", "ask", "--query", q, "--log", tmp_path / "log.json", "--seed", "1")
    assert code == 0 and out.startswith("[accepted]")
    log = json.loads((tmp_path / "log.json").read_text())
    assert log["plan"]["tools"] == ["create_robotictoolbox_robot", "compute_Jacobian"]


def test_agent_ask_failure_exits_2(capsys, tmp_path):
    q = tmp_path / "q.txt"
    q.write_text("Search the web for the latest news on robot arms.")
    code, out, _ = run(capsys, "agent", "ask", "--query", q)
    assert code == 2 and out.startswith("[failed]")


def test_agent_ask_remote_without_config_exits_1(capsys, tmp_path, monkeypatch):
    monkeypatch.delenv("ARMSOLVER_LLM_ENDPOINT", raising=False)
    q = tmp_path / "q.txt"
    q.write_text("Create a ur3 robot.")
    code, _, err = run(capsys, "agent", "ask", "--backend", "remote", "--query", q)
    assert code == 1 and "ARMSOLVER_LLM_ENDPOINT" in err


def test_bench_run_and_score_bench1(capsys, tmp_path):
    out_dir = tmp_path / "b1"
    code, out, _ = run(capsys, "bench", "run", "--suite", "bench1-text", "--out", out_dir, "--repeats", "1")
    assert code == 0
    code, out, _ = run(capsys, "bench", "score", "--in", out_dir, "--report", tmp_path / "r.json", "--table")
    assert code == 0
    header, _, row = out.splitlines()[:3]
    cols = dict(zip(header.split(), row.split()))
    assert cols["M_C"] == "1.00" and cols["M_T"] == "1.00"
    assert "scripted/scripted" in out
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["display"]["M_C"] == "1.00"


def test_bench_score_missing_manifest_exits_1(capsys, tmp_path):
    code, _, err = run(capsys, "bench", "score", "--in", tmp_path)
    assert code == 1 and "bench run" in err
