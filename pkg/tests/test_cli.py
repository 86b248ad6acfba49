import json

import pytest

from bushydnc.cli import main


def test_family_table(capsys):
    assert main(["family", "--m", "3", "--exact", "--kmax", "2"]) == 0
    out = capsys.readouterr().out
    assert "65536" in out and "2^65559" in out
    assert "PASS family-audit" in out


def test_family_exact_kmax_limit(capsys):
    assert main(["family", "--exact", "--kmax", "3"]) == 2
    assert "kmax" in capsys.readouterr().err


def test_lemmas_pass(capsys):
    assert main(["lemmas", "--trials", "30", "--seed", "4"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] and report["kind"] == "lemma-suite"


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["walk", "--bogus"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_bad_config_reports_fields(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "walk-bound", "config": {"depth": "x"}}))
    assert main(["walk", "--config", str(cfg)]) == 2
    assert "config.depth" in capsys.readouterr().err


def test_kind_mismatch_and_broken_json(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "walk-bound"}))
    assert main(["fireworks", "--config", str(cfg)]) == 2
    cfg.write_text("{not json")
    assert main(["walk", "--config", str(cfg)]) == 2


def test_flags_override_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "walk-bound", "trials": 5, "seed": 1}))
    out = tmp_path / "r.json"
    assert main(["walk", "--config", str(cfg), "--trials", "17", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["trials"] == 17 and report["seed"] == 1
    assert "PASS walk-bound/avoidance" in capsys.readouterr().out


def test_trace_then_audit(tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    assert main(["dnc", "--trials", "3", "--trace", str(trace)]) in (0, 1)
    capsys.readouterr()
    assert main(["audit", "--trace", str(trace)]) == 0
    assert json.loads(capsys.readouterr().out)["valid"]
    lines = trace.read_text().splitlines()
    trace.write_text("\n".join(lines[:-1] + ["{broken"]) + "\n")
    assert main(["audit", "--trace", str(trace)]) == 2


def test_unbounded_trace_audits(tmp_path, capsys):
    trace = tmp_path / "u.jsonl"
    assert main(["dnc-unbounded", "--trials", "2", "--trace", str(trace)]) == 0
    assert main(["audit", "--trace", str(trace)]) == 0


def test_diag_csv(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["diag", "--limit", "5", "--format", "csv", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "e,value" and len(lines) == 6
    assert lines[1] == "0,0"


def test_csv_report(capsys):
    assert main(["walk", "--trials", "20", "--format", "csv"]) == 0
    header = capsys.readouterr().out.splitlines()[0]
    assert header.startswith("kind,seed,name,direction")
