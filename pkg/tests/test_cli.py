"""The command-line surface: exit codes, JSON schema, stream discipline."""

import json
import os

import pytest

from lqlang.cli import main

from conftest import CORPUS


def run_cli(capsys, *args):
    code = main(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_check_accepts(capsys):
    code, out, err = run_cli(capsys, "check", str(CORPUS / "swap.lq"))
    assert code == 0
    assert err == ""


def test_check_rejects_with_diagnostics_on_stderr(capsys):
    code, out, err = run_cli(capsys, "check",
                             str(CORPUS / "reject" / "dup_linear.lq"))
    assert code == 1
    assert "LinearityMismatch" in err
    assert "LinearityMismatch" not in out


def test_check_missing_file(capsys):
    code, out, err = run_cli(capsys, "check", "no-such-file.lq")
    assert code == 2


def test_bad_usage(capsys):
    assert main(["frobnicate"]) == 2


def test_run_prints_value(capsys):
    code, out, err = run_cli(capsys, "run", str(CORPUS / "array7.lq"),
                             "--sem=both")
    assert code == 0
    lines = [l for l in out.splitlines() if l.strip()]
    assert any(l.endswith("7") for l in lines)


def test_run_json_schema(capsys):
    code, out, err = run_cli(capsys, "run", str(CORPUS / "array7.lq"),
                             "--json", "--trace")
    assert code == 0
    blob = json.loads(out)
    assert blob["outcome"] == "value"
    assert blob["value"] == "7"
    assert blob["semantics"] == "ordinary"
    assert isinstance(blob["steps"], int)
    assert all(set(r) == {"rule", "redex"} for r in blob["trace"])


def test_run_both_json_is_pair(capsys):
    code, out, err = run_cli(capsys, "run", str(CORPUS / "sharing.lq"),
                             "--sem=both", "--json")
    assert code == 0
    blobs = json.loads(out)
    assert [b["semantics"] for b in blobs] == ["ordinary", "pure"]
    assert blobs[0]["value"] == blobs[1]["value"] == "6"


def test_run_fuel_flag(capsys):
    code, out, err = run_cli(capsys, "run", str(CORPUS / "special" / "loop.lq"),
                             "--fuel=500", "--json")
    assert code == 1
    assert json.loads(out)["outcome"] == "fuel"


def test_run_blackhole(capsys):
    code, out, err = run_cli(capsys, "run",
                             str(CORPUS / "special" / "blackhole.lq"),
                             "--sem=both", "--json")
    blobs = json.loads(out)
    assert {b["outcome"] for b in blobs} == {"blackhole"}


def test_no_typecheck_requires_ordinary(capsys):
    code, out, err = run_cli(capsys, "run",
                             str(CORPUS / "reject" / "write_after_freeze.lq"),
                             "--no-typecheck", "--sem=pure")
    assert code == 2


def test_no_typecheck_typestate_block(capsys):
    code, out, err = run_cli(capsys, "run",
                             str(CORPUS / "reject" / "write_after_freeze.lq"),
                             "--no-typecheck", "--json")
    blob = json.loads(out)
    assert blob["outcome"] == "blocked"


def test_no_prelude(tmp_path, capsys):
    f = tmp_path / "standalone.lq"
    f.write_text("data B where { T : B ; F : B }\nmain = T\n")
    code, out, err = run_cli(capsys, "run", str(f), "--no-prelude")
    assert code == 0 and out.strip() == "T"


def test_prelude_override_env_var(tmp_path, capsys, monkeypatch):
    alt = tmp_path / "alt_prelude.lq"
    alt.write_text("data Tri where { Yes : Tri ; No : Tri ; Dunno : Tri }\n")
    prog = tmp_path / "prog.lq"
    prog.write_text("main = Dunno\n")
    monkeypatch.setenv("LLQ_PRELUDE", str(alt))
    code, out, err = run_cli(capsys, "run", str(prog))
    assert code == 0 and out.strip() == "Dunno"


def test_fuzz_subcommand(tmp_path, capsys):
    code, out, err = run_cli(capsys, "fuzz", "--count=3", "--seed=2",
                             "--json", f"--repro-dir={tmp_path}")
    assert code == 0
    blob = json.loads(out)
    assert blob["count"] == 3
    assert blob["disagreements"] == 0


def test_trace_rule_names_match_figures(capsys):
    code, out, err = run_cli(capsys, "run", str(CORPUS / "array7.lq"),
                             "--json", "--trace")
    rules = {r["rule"] for r in json.loads(out)["trace"]}
    assert {"newMArray", "write", "freeze", "index",
            "mutable cell", "variable"} <= rules
    code, out, err = run_cli(capsys, "run", str(CORPUS / "array7.lq"),
                             "--sem=pure", "--json", "--trace")
    rules = {r["rule"] for r in json.loads(out)["trace"]}
    assert {"newMArray", "write", "freeze", "index",
            "linear variable", "shared variable"} <= rules
