import json
from pathlib import Path

import pytest

from claimsig.cli import EXIT_CONFIG, EXIT_LEDGER, EXIT_MISMATCH, EXIT_OK, main

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def test_demo(capsys):
    assert main(["demo"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "state Closed" in out and "chain intact" in out
    assert out.count("ClaimSubmitted") == 1


@pytest.mark.parametrize("name", ["PhantomBilling", "HappyPath", "IdentityTheft"])
def test_run_scenario(tmp_path, capsys, name):
    assert main(["run-scenario", "--name", name, "--seed", "3", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / f"{name}-3.ledger.jsonl").exists()
    outcome = json.loads((tmp_path / f"{name}-3.outcome.json").read_text())
    assert outcome["match"] is True


def test_run_suite_and_verify(tmp_path, capsys):
    assert main(["run-suite", "--config", str(FIXTURES / "suite.json"), "--out", str(tmp_path)]) == EXIT_OK
    assert "7/7 scenarios match" in capsys.readouterr().out
    for ledger in tmp_path.glob("*.ledger.jsonl"):
        assert main(["verify-ledger", "--file", str(ledger)]) == EXIT_OK


def test_suite_mismatch_exit_code(tmp_path):
    cfg = tmp_path / "s.json"
    cfg.write_text(json.dumps({"seed": 1, "scenarios": [{"name": "HappyPath", "expect": {"blocked": True}}]}))
    assert main(["run-suite", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_MISMATCH


def test_verify_detects_tamper(tmp_path, capsys):
    main(["run-scenario", "--name", "HappyPath", "--seed", "1", "--out", str(tmp_path)])
    path = tmp_path / "HappyPath-1.ledger.jsonl"
    lines = path.read_text().splitlines()
    rec = json.loads(lines[5])
    rec["payload_hex"] = rec["payload_hex"][:-2] + ("00" if rec["payload_hex"][-2:] != "00" else "01")
    lines[5] = json.dumps(rec)
    path.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["verify-ledger", "--file", str(path)]) == EXIT_LEDGER
    assert "first bad index 5" in capsys.readouterr().out


def test_audit(tmp_path, capsys):
    main(["run-scenario", "--name", "HappyPath", "--seed", "1", "--out", str(tmp_path)])
    cid = json.loads((tmp_path / "HappyPath-1.outcome.json").read_text())["actual"]["claim_id"]
    capsys.readouterr()
    assert main(["audit", "--ledger", str(tmp_path / "HappyPath-1.ledger.jsonl"), "--claim", cid]) == EXIT_OK
    out = capsys.readouterr().out
    assert [k in out for k in ("ClaimSubmitted", "ClaimApproved", "PaymentReceived", "AckRecorded")] == [True] * 4
    assert main(["audit", "--ledger", str(tmp_path / "HappyPath-1.ledger.jsonl"), "--claim", "zz"]) == EXIT_CONFIG


def test_report_costs(capsys):
    args = ["report-costs", "--prices", str(FIXTURES / "prices.csv"), "--format", "csv"]
    assert main(args + ["--schedule", str(FIXTURES / "schedule.json")]) == EXIT_OK
    with_schedule = capsys.readouterr().out
    assert main(args) == EXIT_OK
    assert capsys.readouterr().out == with_schedule
    assert [l.split(",")[0] for l in with_schedule.splitlines()] == ["operation", "Deploy", "Submit", "MultiSig"]


def test_report_costs_bad_csv(tmp_path, capsys):
    bad = tmp_path / "p.csv"
    bad.write_text("day,gas_price_gwei,token_usd\n2024-01-01,x,1\n")
    assert main(["report-costs", "--prices", str(bad)]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err
    assert main(["report-costs", "--prices", str(tmp_path / "missing.csv")]) == EXIT_CONFIG


def test_missing_files(tmp_path):
    assert main(["verify-ledger", "--file", str(tmp_path / "nope")]) == EXIT_CONFIG
    assert main(["run-suite", "--config", str(tmp_path / "nope"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_cli_determinism(tmp_path, capsys):
    for d in ("a", "b"):
        main(["run-suite", "--config", str(FIXTURES / "suite.json"), "--out", str(tmp_path / d)])
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
