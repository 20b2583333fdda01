import json
import random
from collections import Counter

import pytest

from claimsig.errors import ConfigError, UnknownFraudType
from claimsig.identity import Role
from claimsig.ledger import EventKind
from claimsig.protocol import ClaimState, audit_signatures
from claimsig.scenarios import (
    CATALOG,
    HONEST,
    MALICIOUS_TACTICS,
    ActorAgent,
    Behavior,
    CaseRunner,
    Expectation,
    FraudScenario,
    Phase,
    ScenarioName,
    classify_impact,
    parse_suite_config,
    random_case,
    run_scenario,
    run_suite,
)
from tests.conftest import L

EXPECTED = {
    "PhantomBilling": (True, Phase.PHASE1, "PatientRefusedSign"),
    "Upcoding": (True, Phase.PHASE1, "PatientRefusedSign"),
    "Unbundling": (True, Phase.PHASE1, "Unbundling"),
    "IdentityTheft": (True, Phase.PHASE1, "SignatureInvalid"),
    "PolicyholderMismatch": (True, Phase.PHASE1, "PolicyBindingMismatch"),
    "HappyPath": (False, None, None),
}


def test_catalog_contents():
    assert {n.value: (e.blocked, e.blocked_at, e.reason) for n, e in CATALOG.items()} == EXPECTED


@pytest.mark.parametrize("name", [n.value for n in ScenarioName])
@pytest.mark.parametrize("seed", [1, 7, 12345])
def test_catalog_scenario_meets_expectation(name, seed):
    run = run_scenario(FraudScenario.from_catalog(name), seed)
    assert run.matches, run.outcome
    assert run.ledger.verify() is None
    assert audit_signatures(run.ledger.records) == []
    trail_kinds = [r.kind for r in run.engine.audit_trail(bytes.fromhex(run.outcome.claim_id))]
    if run.outcome.blocked:
        assert EventKind.CLAIM_SUBMITTED not in trail_kinds
        assert trail_kinds[-1] is EventKind.SCENARIO_NOTE
        assert run.outcome.evidence[-1] == len(run.ledger) - 1
    else:
        assert run.outcome.final_state == "Closed"
        assert len(trail_kinds) == 4


def test_scenario_is_deterministic():
    a = run_scenario(FraudScenario.from_catalog("Upcoding"), 99)
    b = run_scenario(FraudScenario.from_catalog("Upcoding"), 99)
    assert a.ledger.to_jsonl() == b.ledger.to_jsonl()
    c = run_scenario(FraudScenario.from_catalog("Upcoding"), 100)
    assert a.ledger.to_jsonl() != c.ledger.to_jsonl()


def test_unknown_scenario():
    with pytest.raises(ConfigError):
        FraudScenario.from_catalog("Kickbacks")


def test_classify_impact():
    assert classify_impact("PhantomBilling") == {Role.PROVIDER: "Malicious", Role.INSURER: "NonMalicious",
                                                 Role.PATIENT: "NonMalicious"}
    assert classify_impact("IdentityTheft")[Role.PATIENT] == "Malicious"
    assert classify_impact("PolicyholderMismatch") == classify_impact("PolicyholderFraud")
    for fraud in ("Upcoding", "Unbundling", "Kickbacks", "PharmacyFraud"):
        assert classify_impact(fraud)[Role.PROVIDER] == "Malicious"
    with pytest.raises(UnknownFraudType):
        classify_impact("Arson")


def test_honest_patient_multiset_rule(patient):
    agent = ActorAgent(patient, ground_truth=(L("E100", 100), L("E100", 100), L("E200", 5)))
    assert agent.endorses_claim([L("E100", 100)])
    assert agent.endorses_claim([L("E100", 100), L("E100", 100)])
    assert not agent.endorses_claim([L("E100", 100)] * 3)
    assert not agent.endorses_claim([L("E100", 101)])
    assert not agent.endorses_claim([L("E300", 5)])
    assert ActorAgent(patient, Behavior.MALICIOUS).endorses_claim([L("E300", 5)])


def deviates(case) -> bool:
    """Independent check that a malicious case differs from what the patient lived."""
    if case.tactic in ("identity_theft", "policy_mismatch"):
        return True
    return Counter((l.encounter_code, l.amount) for l in case.lines) != Counter(
        (l.encounter_code, l.amount) for l in case.ground_truth)


def test_random_cases_no_false_accept_or_reject():
    rng = random.Random(4242)
    runner = CaseRunner(4242)
    for n in range(150):
        malicious = n % 2 == 0
        case = random_case(rng, malicious, n)
        assert (case.tactic != HONEST) == malicious
        result = runner.run(case)
        if malicious:
            assert deviates(case)
            assert result.blocked and result.blocked_at is Phase.PHASE1, case.tactic
            assert result.claim.state in (ClaimState.DRAFT, ClaimState.REVIEWED)
        else:
            assert not result.blocked and result.claim.state is ClaimState.CLOSED
    assert runner.engine.ledger.verify() is None
    assert audit_signatures(runner.engine.ledger.records) == []


def test_every_tactic_is_exercised():
    rng = random.Random(1)
    seen = {random_case(rng, True, n).tactic for n in range(200)}
    assert seen == set(MALICIOUS_TACTICS)


def test_suite_config_parsing(tmp_path):
    entries, seed = parse_suite_config({"seed": 3, "scenarios": ["HappyPath", {"name": "Upcoding", "seed": 9}]})
    assert seed == 3 and [(e.scenario.name.value, e.seed) for e in entries] == [("HappyPath", 3), ("Upcoding", 9)]
    with pytest.raises(ConfigError):
        parse_suite_config({"scenarios": [{"seed": 1}]})
    with pytest.raises(ConfigError):
        parse_suite_config({"seed": "x"})
    with pytest.raises(ConfigError):
        parse_suite_config([])


def test_suite_expectation_override_reports_mismatch(tmp_path):
    entries, seed = parse_suite_config(
        {"seed": 1, "scenarios": [{"name": "HappyPath", "expect": {"blocked": True, "blocked_at": "Phase1",
                                                                   "reason": "PatientRefusedSign"}}]})
    report = run_suite(entries, tmp_path, seed)
    assert not report.ok and len(report.mismatches) == 1
    assert "MISMATCH" in (tmp_path / "summary.txt").read_text()


def test_run_suite_outputs(tmp_path):
    entries, seed = parse_suite_config({"seed": 5, "scenarios": [n.value for n in ScenarioName]})
    report = run_suite(entries, tmp_path, seed)
    assert report.ok
    files = sorted(p.name for p in tmp_path.iterdir())
    assert "summary.json" in files and "summary.txt" in files
    assert "PhantomBilling-5.ledger.jsonl" in files
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["matched"] == summary["total"] == 6


def test_empty_suite_warns(tmp_path, caplog):
    report = run_suite([], tmp_path, None)
    assert report.ok and report.results == []
    assert "no scenarios" in caplog.text


def test_expectation_json_round_trip():
    e = Expectation(True, Phase.PHASE2, "ClaimRejected")
    assert Expectation.from_json(e.to_json()) == e
