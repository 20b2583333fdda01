"""Honest and malicious actors, the fraud-scenario catalog, and suite runs.

Patients know what services they actually received (their *ground truth*)
and an honest patient co-signs only claims drawn from it. Ground truth is
always generated first and the provider's claim derived from it, so the
patient's decision never consults protocol code.
"""

from __future__ import annotations

import json
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from claimsig.errors import (
    ConfigError,
    GatedStepError,
    NotSubmitted,
    PolicyError,
    Reason,
    ReviewError,
    UnbundlingError,
    UnknownFraudType,
)
from claimsig.identity import Identity, Role, generate_identity, make_envelope
from claimsig.ledger import EventKind, Ledger, LogicalClock
from claimsig.policy import BundleRule, ClaimLineItem, InsurancePolicy, detect_unbundling
from claimsig.protocol import (
    ACK_ROLES,
    APPROVE_ROLES,
    SUBMIT_ROLES,
    ApprovalDecision,
    Claim,
    ClaimEngine,
    ClaimState,
    ack_digest,
)

log = logging.getLogger(__name__)

CLOCK_START_MS = 1_700_000_000_000


class Behavior(str, Enum):
    HONEST = "Honest"
    MALICIOUS = "Malicious"


class Phase(str, Enum):
    PHASE1 = "Phase1"
    PHASE2 = "Phase2"
    PHASE3 = "Phase3"


class ScenarioName(str, Enum):
    PHANTOM_BILLING = "PhantomBilling"
    UPCODING = "Upcoding"
    UNBUNDLING = "Unbundling"
    IDENTITY_THEFT = "IdentityTheft"
    POLICYHOLDER_MISMATCH = "PolicyholderMismatch"
    HAPPY_PATH = "HappyPath"


@dataclass
class ActorAgent:
    identity: Identity
    behavior: Behavior = Behavior.HONEST
    tactic: Optional[str] = None
    ground_truth: tuple[ClaimLineItem, ...] = ()

    def endorses_claim(self, lines: Sequence[ClaimLineItem]) -> bool:
        """Would this patient co-sign a claim made of ``lines``?

        Honest: only if every billed line is one of its own encounters, at
        the same amount, counted with multiplicity. Malicious: always.
        """
        if self.behavior is Behavior.MALICIOUS:
            return True
        billed = Counter((l.encounter_code, l.amount) for l in lines)
        received = Counter((l.encounter_code, l.amount) for l in self.ground_truth)
        return all(received[k] >= n for k, n in billed.items())

    def endorses_decision(self, claim: Claim, decision: ApprovalDecision) -> bool:
        if self.behavior is Behavior.MALICIOUS:
            return True
        submitted = [(d.encounter_code, d.submitted) for d in decision.lines]
        return submitted == [(l.encounter_code, l.amount) for l in claim.lines]

    def endorses_receipt(self, claim: Claim, received: int) -> bool:
        if self.behavior is Behavior.MALICIOUS:
            return True
        return claim.decision is not None and received == claim.decision.total_approved


@dataclass(frozen=True)
class ScenarioOutcome:
    blocked: bool
    blocked_at: Optional[Phase] = None
    reason: Optional[str] = None
    evidence: tuple[int, ...] = ()
    final_state: Optional[str] = None
    claim_id: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "blocked": self.blocked,
            "blocked_at": self.blocked_at.value if self.blocked_at else None,
            "reason": self.reason,
            "evidence": list(self.evidence),
            "final_state": self.final_state,
            "claim_id": self.claim_id,
        }


@dataclass(frozen=True)
class Expectation:
    blocked: bool
    blocked_at: Optional[Phase] = None
    reason: Optional[str] = None

    def matches(self, outcome: ScenarioOutcome) -> bool:
        return (self.blocked, self.blocked_at, self.reason) == (
            outcome.blocked,
            outcome.blocked_at,
            outcome.reason,
        )

    def to_json(self) -> dict:
        return {
            "blocked": self.blocked,
            "blocked_at": self.blocked_at.value if self.blocked_at else None,
            "reason": self.reason,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Expectation":
        phase = obj.get("blocked_at")
        return cls(bool(obj["blocked"]), Phase(phase) if phase else None, obj.get("reason"))


CATALOG: dict[ScenarioName, Expectation] = {
    ScenarioName.PHANTOM_BILLING: Expectation(True, Phase.PHASE1, Reason.PATIENT_REFUSED_SIGN.value),
    ScenarioName.UPCODING: Expectation(True, Phase.PHASE1, Reason.PATIENT_REFUSED_SIGN.value),
    ScenarioName.UNBUNDLING: Expectation(True, Phase.PHASE1, Reason.UNBUNDLING.value),
    ScenarioName.IDENTITY_THEFT: Expectation(True, Phase.PHASE1, Reason.SIGNATURE_INVALID.value),
    ScenarioName.POLICYHOLDER_MISMATCH: Expectation(True, Phase.PHASE1, Reason.POLICY_BINDING_MISMATCH.value),
    ScenarioName.HAPPY_PATH: Expectation(False),
}


@dataclass
class FraudScenario:
    name: ScenarioName
    expected: Expectation
    policy: InsurancePolicy = field(default_factory=lambda: default_policy())

    @classmethod
    def from_catalog(cls, name: str | ScenarioName, policy: Optional[InsurancePolicy] = None) -> "FraudScenario":
        try:
            name = ScenarioName(name)
        except ValueError:
            raise ConfigError(f"unknown scenario {name!r}") from None
        return cls(name, CATALOG[name], policy or default_policy())


# Stakeholder impact of each fraud type: who is the malicious party.
_M, _N = "Malicious", "NonMalicious"
IMPACT_TABLE: dict[str, dict[Role, str]] = {
    "PhantomBilling": {Role.PROVIDER: _M, Role.INSURER: _N, Role.PATIENT: _N},
    "Upcoding": {Role.PROVIDER: _M, Role.INSURER: _N, Role.PATIENT: _N},
    "Unbundling": {Role.PROVIDER: _M, Role.INSURER: _N, Role.PATIENT: _N},
    "Kickbacks": {Role.PROVIDER: _M, Role.INSURER: _N, Role.PATIENT: _N},
    "IdentityTheft": {Role.PROVIDER: _N, Role.INSURER: _N, Role.PATIENT: _M},
    "PolicyholderFraud": {Role.PROVIDER: _N, Role.INSURER: _N, Role.PATIENT: _M},
    "PharmacyFraud": {Role.PROVIDER: _M, Role.INSURER: _N, Role.PATIENT: _N},
}
_IMPACT_ALIASES = {"PolicyholderMismatch": "PolicyholderFraud"}


def classify_impact(fraud: str) -> dict[Role, str]:
    key = _IMPACT_ALIASES.get(fraud, fraud)
    try:
        return dict(IMPACT_TABLE[key])
    except KeyError:
        raise UnknownFraudType(f"unknown fraud type {fraud!r}") from None


def default_policy() -> InsurancePolicy:
    return InsurancePolicy(
        policy_id="POL-0001",
        patient_id="patient-alice",
        insurer_id="insurer-acme",
        coverage={
            "E100": 15_000,
            "E200": 40_000,
            "E300": 90_000,
            "L110": 6_000,
            "L120": 8_000,
            "L130": 5_000,
            "LPANEL": 12_000,
        },
        copay=2_000,
        bundles=(BundleRule("LPANEL", frozenset({"L110", "L120", "L130"}), 12_000),),
    )


# Running claims

@dataclass
class DriveResult:
    claim: Optional[Claim]
    blocked_at: Optional[Phase] = None
    reason: Optional[Reason] = None

    @property
    def blocked(self) -> bool:
        return self.blocked_at is not None


def drive_claim(
    engine: ClaimEngine,
    provider: ActorAgent,
    patient: ActorAgent,
    insurer: ActorAgent,
    policy_id: str,
    lines: Sequence[ClaimLineItem],
    claim_patient_id: Optional[str] = None,
) -> DriveResult:
    """Push one claim through all three phases, stopping at the first block.

    ``patient`` is whoever holds the signing key presented as the patient;
    ``claim_patient_id`` is the patient the claim names (defaults to the
    signer's id).
    """
    claim = engine.create_claim(
        policy_id, provider.identity.id, claim_patient_id or patient.identity.id, lines
    )
    cid = claim.claim_id

    # Phase 1
    try:
        engine.review(cid)
    except (ReviewError, UnbundlingError) as exc:
        return DriveResult(claim, Phase.PHASE1, exc.reason)
    signers = [provider.identity]
    refused = not patient.endorses_claim(claim.lines)
    if not refused:
        signers.append(patient.identity)
    envelope = make_envelope(cid, SUBMIT_ROLES, *signers)
    try:
        engine.submit(cid, envelope)
    except NotSubmitted as exc:
        reason = Reason.PATIENT_REFUSED_SIGN if refused else exc.reason
        return DriveResult(claim, Phase.PHASE1, reason)

    # Phase 2
    decision = engine.decide(cid)
    signers = [insurer.identity]
    refused = not patient.endorses_decision(claim, decision)
    if not refused:
        signers.append(patient.identity)
    try:
        engine.approve(cid, make_envelope(decision.digest(), APPROVE_ROLES, *signers))
    except GatedStepError as exc:
        return DriveResult(claim, Phase.PHASE2, Reason.PATIENT_REFUSED_SIGN if refused else exc.reason)
    if claim.state is ClaimState.REJECTED:
        return DriveResult(claim, Phase.PHASE2, Reason.CLAIM_REJECTED)
    engine.disburse_payment(cid)

    # Phase 3
    received = claim.payment
    signers = [provider.identity]
    refused = not patient.endorses_receipt(claim, received)
    if not refused:
        signers.append(patient.identity)
    try:
        engine.acknowledge(cid, make_envelope(ack_digest(cid, received), ACK_ROLES, *signers), received)
    except GatedStepError as exc:
        return DriveResult(claim, Phase.PHASE3, Reason.PATIENT_REFUSED_SIGN if refused else exc.reason)
    return DriveResult(claim)


@dataclass
class ScenarioRun:
    scenario: FraudScenario
    seed: int
    outcome: ScenarioOutcome
    engine: ClaimEngine

    @property
    def ledger(self) -> Ledger:
        return self.engine.ledger

    @property
    def matches(self) -> bool:
        return self.scenario.expected.matches(self.outcome)


def _pick_lines(rng: random.Random, policy: InsurancePolicy, count: int,
                codes: Optional[Sequence[str]] = None) -> list[ClaimLineItem]:
    """Draw ``count`` encounters at or under cap that never complete a bundle."""
    pool = sorted(codes if codes is not None else policy.coverage)
    lines: list[ClaimLineItem] = []
    for _ in range(count * 4):
        if len(lines) == count:
            break
        code = rng.choice(pool)
        cap = policy.coverage[code]
        cand = lines + [ClaimLineItem(code, rng.randint(max(1, cap // 4), cap))]
        if not detect_unbundling(cand, policy):
            lines = cand
    return lines


def _bundle_free(policy: InsurancePolicy, lines: Sequence[ClaimLineItem]) -> bool:
    return not detect_unbundling(lines, policy)


def run_scenario(scenario: FraudScenario, seed: int) -> ScenarioRun:
    """Execute one catalog scenario in a private engine and ledger.

    Keys, chosen encounters and amounts all derive from ``seed``; timestamps
    come from a logical clock, so the same (scenario, seed) always produces
    the same ledger bytes.
    """
    rng = random.Random(seed)
    policy = scenario.policy
    components = {c for b in policy.bundles for c in b.components}
    plain_codes = sorted(c for c in policy.coverage if c not in components)
    if len(plain_codes) < 2:
        raise ConfigError("policy needs at least two codes outside every bundle")

    engine = ClaimEngine(ledger=Ledger(LogicalClock(CLOCK_START_MS)))

    def agent(role: Role, id: str, behavior=Behavior.HONEST, tactic=None) -> ActorAgent:
        return ActorAgent(generate_identity(role, rng.randbytes(32), id), behavior, tactic)

    patient = agent(Role.PATIENT, policy.patient_id)
    provider = agent(Role.PROVIDER, "provider-01")
    insurer = agent(Role.INSURER, policy.insurer_id)
    for a in (patient, provider, insurer):
        engine.register_identity(a.identity)
    engine.register_policy(policy)

    # the costliest plain code is never in the ground truth: it is what a
    # phantom line or an upcoded line bills
    top = max(plain_codes, key=lambda c: (policy.coverage[c], c))
    truth_codes = [c for c in plain_codes if c != top]
    patient.ground_truth = tuple(_pick_lines(rng, policy, rng.randint(1, 2), truth_codes))
    signer = patient
    name = scenario.name
    gt = list(patient.ground_truth)

    if name is ScenarioName.HAPPY_PATH:
        lines = gt
    elif name is ScenarioName.PHANTOM_BILLING:
        provider.behavior, provider.tactic = Behavior.MALICIOUS, "add-unrendered-service"
        lines = gt + [ClaimLineItem(top, rng.randint(1, policy.coverage[top]))]
    elif name is ScenarioName.UPCODING:
        provider.behavior, provider.tactic = Behavior.MALICIOUS, "bill-costlier-code"
        i = rng.randrange(len(gt))
        lines = gt[:i] + [ClaimLineItem(top, policy.coverage[top])] + gt[i + 1:]
    elif name is ScenarioName.UNBUNDLING:
        rules = [b for b in policy.bundles if b.bundle_code in policy.coverage]
        if not rules:
            raise ConfigError("Unbundling needs a bundle rule whose bundle code is covered")
        rule = rules[0]
        provider.behavior, provider.tactic = Behavior.MALICIOUS, "split-bundle"
        cap = min(policy.coverage[rule.bundle_code], rule.bundled_cap)
        patient.ground_truth = (ClaimLineItem(rule.bundle_code, rng.randint(max(1, cap // 2), cap)),)
        lines = [ClaimLineItem(c, policy.coverage[c]) for c in sorted(rule.components)]
    elif name is ScenarioName.IDENTITY_THEFT:
        # impostor presents the victim's id but can only sign with its own key
        signer = agent(Role.PATIENT, patient.identity.id, Behavior.MALICIOUS, "impersonate-patient")
        signer.ground_truth = tuple(_pick_lines(rng, policy, 1, truth_codes))
        lines = list(signer.ground_truth)
    elif name is ScenarioName.POLICYHOLDER_MISMATCH:
        signer = agent(Role.PATIENT, "patient-unbound", Behavior.MALICIOUS, "claim-on-foreign-policy")
        engine.register_identity(signer.identity)
        signer.ground_truth = tuple(_pick_lines(rng, policy, 1, truth_codes))
        lines = list(signer.ground_truth)
    else:  # pragma: no cover
        raise ConfigError(f"unhandled scenario {name}")

    result = drive_claim(engine, provider, signer, insurer, policy.policy_id, lines)
    claim = result.claim
    cid = claim.claim_id
    if result.blocked:
        note = engine.ledger.append_event(
            EventKind.SCENARIO_NOTE,
            {
                "claim_id": cid,
                "scenario": name.value,
                "seed": seed,
                "phase": result.blocked_at.value,
                "reason": result.reason.value,
                "lines": [l.as_pair() for l in claim.lines],
            },
        )
        evidence = tuple(r.index for r in engine.audit_trail(cid) if r.index != note.index) + (note.index,)
    else:
        evidence = tuple(r.index for r in engine.audit_trail(cid))
    outcome = ScenarioOutcome(
        blocked=result.blocked,
        blocked_at=result.blocked_at,
        reason=result.reason.value if result.reason else None,
        evidence=evidence,
        final_state=claim.state.value,
        claim_id=cid.hex(),
    )
    return ScenarioRun(scenario, seed, outcome, engine)


# Randomized case generation

HONEST = "honest"
MALICIOUS_TACTICS = (
    "phantom",
    "upcode",
    "inflate",
    "duplicate",
    "unbundle",
    "identity_theft",
    "policy_mismatch",
)


@dataclass
class RandomCase:
    policy: InsurancePolicy
    ground_truth: list[ClaimLineItem]
    lines: list[ClaimLineItem]
    tactic: str
    patient_seed: bytes
    impostor_seed: Optional[bytes] = None


def random_policy(rng: random.Random, policy_id: str, patient_id: str, insurer_id: str) -> InsurancePolicy:
    n = rng.randint(3, 10)
    codes = rng.sample(range(100, 1000), n)
    coverage = {f"E{c}": rng.randint(1_000, 50_000) for c in codes}
    bundles = []
    if rng.random() < 0.6:
        comps = rng.sample(sorted(coverage), rng.randint(2, min(3, n)))
        total = sum(coverage[c] for c in comps)
        bcap = rng.randint(max(1, total // 3), total - 1)
        bcode = f"B{rng.randint(100, 999)}"
        coverage[bcode] = bcap
        bundles.append(BundleRule(bcode, frozenset(comps), bcap))
    return InsurancePolicy(
        policy_id, patient_id, insurer_id, coverage,
        copay=rng.choice((0, 500, 1_000, 2_500)), bundles=tuple(bundles),
    )


def random_encounters(rng: random.Random, policy: InsurancePolicy, count: int) -> list[ClaimLineItem]:
    """``count`` in-cap encounters (repeats allowed) that never complete a bundle."""
    codes = sorted(policy.coverage)
    lines: list[ClaimLineItem] = []
    while len(lines) < count:
        code = rng.choice(codes)
        cand = lines + [ClaimLineItem(code, rng.randint(1, policy.coverage[code]))]
        if _bundle_free(policy, cand):
            lines = cand
    return lines


def mutate(rng: random.Random, policy: InsurancePolicy, truth: list[ClaimLineItem], tactic: str) -> list[ClaimLineItem]:
    """Derive a fraudulent claim from the patient's true encounters."""
    lines = list(truth)
    codes = sorted(policy.coverage)
    i = rng.randrange(len(lines))
    if tactic == "phantom":
        code = rng.choice(codes)
        lines.insert(rng.randint(0, len(lines)), ClaimLineItem(code, rng.randint(1, policy.coverage[code])))
    elif tactic == "upcode":
        others = [c for c in codes if c != lines[i].encounter_code]
        code = rng.choice(others)
        lines[i] = ClaimLineItem(code, rng.randint(1, policy.coverage[code]))
    elif tactic == "inflate":
        cap = policy.coverage[lines[i].encounter_code]
        lines[i] = ClaimLineItem(lines[i].encounter_code, lines[i].amount + rng.randint(1, cap))
    elif tactic == "duplicate":
        lines.insert(i, lines[i])
    elif tactic == "unbundle":
        if not policy.bundles:
            return mutate(rng, policy, truth, "phantom")
        rule = rng.choice(policy.bundles)
        lines.extend(ClaimLineItem(c, rng.randint(1, policy.coverage[c])) for c in sorted(rule.components))
    elif tactic in ("identity_theft", "policy_mismatch"):
        pass  # the claim content is the signer's own; the fraud is who signs
    else:
        raise ConfigError(f"unknown tactic {tactic!r}")
    return lines


def random_case(rng: random.Random, malicious: bool, case_no: int = 0) -> RandomCase:
    policy = random_policy(rng, f"POL-{case_no:05d}", f"patient-{case_no:05d}", "insurer-main")
    truth = random_encounters(rng, policy, rng.randint(1, 10))
    tactic = rng.choice(MALICIOUS_TACTICS) if malicious else HONEST
    lines = mutate(rng, policy, truth, tactic) if malicious else list(truth)
    impostor = rng.randbytes(32) if tactic in ("identity_theft", "policy_mismatch") else None
    return RandomCase(policy, truth, lines, tactic, rng.randbytes(32), impostor)


class CaseRunner:
    """Runs many random cases through one shared engine, provider and insurer."""

    def __init__(self, seed: int) -> None:
        self.rng = random.Random(seed)
        self.engine = ClaimEngine(ledger=Ledger(LogicalClock(CLOCK_START_MS)))
        self.provider = ActorAgent(generate_identity(Role.PROVIDER, self.rng.randbytes(32), "provider-main"))
        self.insurer = ActorAgent(generate_identity(Role.INSURER, self.rng.randbytes(32), "insurer-main"))
        self.engine.register_identity(self.provider.identity)
        self.engine.register_identity(self.insurer.identity)

    def run(self, case: RandomCase) -> DriveResult:
        policy = case.policy
        patient = ActorAgent(
            generate_identity(Role.PATIENT, case.patient_seed, policy.patient_id),
            ground_truth=tuple(case.ground_truth),
        )
        self.engine.register_identity(patient.identity)
        self.engine.register_policy(policy)
        signer = patient
        if case.tactic == "identity_theft":
            signer = ActorAgent(
                generate_identity(Role.PATIENT, case.impostor_seed, patient.identity.id),
                Behavior.MALICIOUS, "impersonate-patient", tuple(case.lines),
            )
        elif case.tactic == "policy_mismatch":
            signer = ActorAgent(
                generate_identity(Role.PATIENT, case.impostor_seed, f"{policy.patient_id}-other"),
                Behavior.MALICIOUS, "claim-on-foreign-policy", tuple(case.lines),
            )
            self.engine.register_identity(signer.identity)
        elif case.tactic != HONEST:
            self.provider.behavior = Behavior.MALICIOUS
        try:
            return drive_claim(
                self.engine, self.provider, signer, self.insurer, policy.policy_id,
                case.lines,
            )
        finally:
            self.provider.behavior = Behavior.HONEST


# Suites

@dataclass
class SuiteEntry:
    scenario: FraudScenario
    seed: int


@dataclass
class SuiteResult:
    entry: SuiteEntry
    run: ScenarioRun
    ledger_file: str

    @property
    def matches(self) -> bool:
        return self.run.matches


@dataclass
class SuiteReport:
    results: list[SuiteResult]
    config_seed: Optional[int]

    @property
    def mismatches(self) -> list[SuiteResult]:
        return [r for r in self.results if not r.matches]

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_json(self) -> dict:
        return {
            "seed": self.config_seed,
            "total": len(self.results),
            "matched": len(self.results) - len(self.mismatches),
            "results": [
                {
                    "scenario": r.entry.scenario.name.value,
                    "seed": r.entry.seed,
                    "expected": r.entry.scenario.expected.to_json(),
                    "actual": r.run.outcome.to_json(),
                    "match": r.matches,
                    "ledger": r.ledger_file,
                    "ledger_head": r.run.ledger.head_hash.hex(),
                }
                for r in self.results
            ],
        }

    def table(self) -> str:
        rows = [("scenario", "seed", "expected", "actual", "match")]
        for r in self.results:
            exp, out = r.entry.scenario.expected, r.run.outcome
            rows.append((
                r.entry.scenario.name.value,
                str(r.entry.seed),
                _fmt(exp.blocked, exp.blocked_at, exp.reason),
                _fmt(out.blocked, out.blocked_at, out.reason),
                "ok" if r.matches else "MISMATCH",
            ))
        widths = [max(len(row[i]) for row in rows) for i in range(5)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
        matched = len(self.results) - len(self.mismatches)
        lines.append(f"{matched}/{len(self.results)} scenarios match expectations")
        return "\n".join(lines) + "\n"


def _fmt(blocked: bool, phase: Optional[Phase], reason: Optional[str]) -> str:
    if not blocked:
        return "accepted"
    return f"blocked@{phase.value if phase else '?'}:{reason}"


DEFAULT_SUITE = {
    "seed": 20240601,
    "scenarios": [n.value for n in CATALOG],
}


def load_suite_config(path: str | Path) -> tuple[list[SuiteEntry], Optional[int]]:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read suite config {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_suite_config(cfg, path.parent)


def parse_suite_config(cfg: dict, base_dir: Path = Path(".")) -> tuple[list[SuiteEntry], Optional[int]]:
    """Config keys: ``seed`` (default for all scenarios), optional ``policy``
    fixture path (relative to the config file), and ``scenarios``: a list of
    names or of objects with ``name``, optional ``seed`` and ``expect``.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("suite config must be a JSON object")
    base_seed = cfg.get("seed", 0)
    if not isinstance(base_seed, int):
        raise ConfigError("seed must be an integer")
    policy = None
    if cfg.get("policy"):
        ppath = base_dir / cfg["policy"]
        try:
            policy = InsurancePolicy.load(ppath)
        except OSError as exc:
            raise ConfigError(f"cannot read policy fixture {ppath}: {exc}") from exc
        except (ValueError, PolicyError) as exc:
            raise ConfigError(f"{ppath}: {exc}") from exc
    entries = []
    for item in cfg.get("scenarios", []):
        if isinstance(item, str):
            item = {"name": item}
        if not isinstance(item, dict) or "name" not in item:
            raise ConfigError(f"bad scenario entry {item!r}")
        scen = FraudScenario.from_catalog(item["name"], policy)
        if "expect" in item:
            try:
                scen.expected = Expectation.from_json(item["expect"])
            except (KeyError, ValueError, TypeError) as exc:
                raise ConfigError(f"bad expectation for {item['name']}: {exc}") from exc
        seed = item.get("seed", base_seed)
        if not isinstance(seed, int):
            raise ConfigError(f"seed for {item['name']} must be an integer")
        entries.append(SuiteEntry(scen, seed))
    return entries, base_seed


def ledger_filename(name: ScenarioName, seed: int) -> str:
    return f"{name.value}-{seed}.ledger.jsonl"


def run_suite(entries: Sequence[SuiteEntry], out_dir: str | Path, config_seed: Optional[int] = None) -> SuiteReport:
    """Run every entry, write one ledger per scenario plus summary files."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    if not entries:
        log.warning("suite has no scenarios; nothing to run")
    results = []
    for entry in entries:
        run = run_scenario(entry.scenario, entry.seed)
        fname = ledger_filename(entry.scenario.name, entry.seed)
        _write(out / fname, run.ledger.to_jsonl())
        results.append(SuiteResult(entry, run, fname))
    report = SuiteReport(results, config_seed)
    _write(out / "summary.json", json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    _write(out / "summary.txt", report.table())
    return report


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc
