import json
from pathlib import Path

import pytest

from weakclosure import cli

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "golden" / "verify_seed0.json"
GROUP_FILE = ROOT / "data" / "extraspecial_v1.txt"


def run(*args):
    return cli.run(list(args))


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for var in ("WEAKCLOSURE_SEED", "WEAKCLOSURE_JOBS", "WEAKCLOSURE_OUT", "WEAKCLOSURE_FAULT",
                "WEAKCLOSURE_OMEGA_SIZE", "WEAKCLOSURE_TIMINGS"):
        monkeypatch.delenv(var, raising=False)


def test_verify_matches_golden(tmp_path):
    out = tmp_path / "r.json"
    assert run("verify", "--out", str(out)) == 0
    assert out.read_bytes() == GOLDEN.read_bytes()


def test_verify_jobs_do_not_change_report(tmp_path):
    out = tmp_path / "r.json"
    assert run("verify", "--jobs", "4", "--out", str(out)) == 0
    assert out.read_bytes() == GOLDEN.read_bytes()


def test_seed_changes_report(tmp_path):
    out = tmp_path / "r.json"
    assert run("verify", "--seed", "5", "--out", str(out)) == 0
    assert out.read_bytes() != GOLDEN.read_bytes()
    assert json.loads(out.read_text())["config"]["seed"] == 5


def test_env_override_and_flag_precedence(tmp_path, monkeypatch):
    out = tmp_path / "r.json"
    monkeypatch.setenv("WEAKCLOSURE_SEED", "7")
    assert run("props", "--omega-size", "2", "--out", str(out)) == 0
    assert json.loads(out.read_text())["config"]["seed"] == 7
    assert run("props", "--omega-size", "2", "--seed", "3", "--out", str(out)) == 0
    assert json.loads(out.read_text())["config"]["seed"] == 3


def test_timings_opt_in(tmp_path):
    out = tmp_path / "r.json"
    assert run("props", "--omega-size", "2", "--timings", "--out", str(out)) == 0
    report = json.loads(out.read_text())
    assert all("seconds" in c for c in report["claims"])
    assert run("props", "--omega-size", "2", "--out", str(out)) == 0
    assert not any("seconds" in c for c in json.loads(out.read_text())["claims"])


def test_stdout_report(capsys):
    assert run("props", "--omega-size", "2", "--out", "-") == 0
    captured = capsys.readouterr()
    report = json.loads(captured.out)
    assert report["command"] == "props"
    assert "PASS" in captured.err or "pass" in captured.err


@pytest.mark.parametrize("args", [
    ("verify", "--omega-size", "4"),
    ("props", "--omega-size", "9"),
    ("frobnicate",),
    ("verify", "--jobs", "0"),
    ("verify", "--out", "/nonexistent/dir/r.json"),
    ("analyze", "/nonexistent/group.txt"),
])
def test_usage_errors(args):
    assert run(*args) == 64


def test_unknown_fault_is_usage_error(monkeypatch):
    monkeypatch.setenv("WEAKCLOSURE_FAULT", "no-such-fault")
    assert run("verify") == 64


def test_fault_env_flips_a_claim(tmp_path, monkeypatch):
    monkeypatch.setenv("WEAKCLOSURE_FAULT", "collection-sign")
    out = tmp_path / "r.json"
    assert run("verify", "--out", str(out)) == 1
    failed = [c["id"] for c in json.loads(out.read_text())["claims"] if c["status"] == "fail"]
    assert "v0-homomorphism" in failed


def test_analyze_group_file(tmp_path):
    out = tmp_path / "a.json"
    assert run("analyze", str(GROUP_FILE), "--out", str(out)) == 0
    claim = json.loads(out.read_text())["claims"][0]
    assert claim["id"] == "analyze-offenders"
    assert claim["status"] == "pass"


def test_analyze_empty_generator_list(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("3 3 0\n")
    assert run("analyze", str(f)) == 0


@pytest.mark.parametrize("text", [
    "5 3 1\n3 3\n1 0 0\n0 1 0\n0 0 1\n",          # wrong characteristic
    "3 3 1\n3 3\n1 1 0\n1 1 0\n0 0 1\n",          # singular
    "3 3 1\n2 2\n1 1\n0 1\n",                     # wrong shape
    "3 3 1\n3 3\n1 0 0\n0 1 0\n",                 # truncated
    "3 3 1\n3 3\n1 0 0\n0 1 0\n0 0 1\n9 9\n",     # trailing content
    "garbage\n",
])
def test_analyze_parse_errors(tmp_path, text):
    f = tmp_path / "g.txt"
    f.write_text(text)
    assert run("analyze", str(f)) == 64


def test_version(capsys):
    assert run("--version") == 0
    assert "version" in capsys.readouterr().out
