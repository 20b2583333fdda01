"""Three-phase claim workflow: submission, approval, acknowledgment.

Every phase transition that changes who owes what is gated by a two-party
multisig envelope and written to the ledger:

* Phase 1, submit: provider + patient sign the claim id.
* Phase 2, approve: insurer + patient sign the approval decision.
* Phase 3, acknowledge: provider + patient sign the received amount.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

from claimsig.encoding import digest
from claimsig.errors import (
    EncodingError,
    GatedStepError,
    InvalidTransition,
    NotAcknowledged,
    NotApproved,
    NotSubmitted,
    PolicyError,
    PreconditionError,
    Reason,
    RegistryError,
    ReviewError,
    UnbundlingError,
    UnknownClaim,
    UnknownSigner,
)
from claimsig.identity import Identity, IdentityRegistry, MultiSigEnvelope, Role
from claimsig.ledger import EventKind, Ledger, LedgerRecord
from claimsig.policy import (
    ClaimLineItem,
    InsurancePolicy,
    check_money,
    compute_copay_split,
    detect_unbundling,
    money_sum,
    zeta_check,
)

SUBMIT_ROLES = (Role.PROVIDER, Role.PATIENT)
APPROVE_ROLES = (Role.INSURER, Role.PATIENT)
ACK_ROLES = (Role.PROVIDER, Role.PATIENT)


class ClaimState(str, Enum):
    DRAFT = "Draft"
    REVIEWED = "Reviewed"
    SUBMITTED = "Submitted"
    APPROVED = "Approved"
    PAID = "Paid"
    ACKNOWLEDGED = "Acknowledged"
    CLOSED = "Closed"
    REJECTED = "Rejected"


class ClaimEvent(str, Enum):
    REVIEW = "Review"
    SUBMIT = "Submit"
    APPROVE = "Approve"
    PAY = "Pay"
    ACKNOWLEDGE = "Acknowledge"
    CLOSE = "Close"
    REJECT = "Reject"


TRANSITIONS: dict[tuple[ClaimState, ClaimEvent], ClaimState] = {
    (ClaimState.DRAFT, ClaimEvent.REVIEW): ClaimState.REVIEWED,
    (ClaimState.REVIEWED, ClaimEvent.SUBMIT): ClaimState.SUBMITTED,
    (ClaimState.SUBMITTED, ClaimEvent.APPROVE): ClaimState.APPROVED,
    (ClaimState.APPROVED, ClaimEvent.PAY): ClaimState.PAID,
    (ClaimState.PAID, ClaimEvent.ACKNOWLEDGE): ClaimState.ACKNOWLEDGED,
    (ClaimState.ACKNOWLEDGED, ClaimEvent.CLOSE): ClaimState.CLOSED,
    (ClaimState.REVIEWED, ClaimEvent.REJECT): ClaimState.REJECTED,
    (ClaimState.SUBMITTED, ClaimEvent.REJECT): ClaimState.REJECTED,
    (ClaimState.APPROVED, ClaimEvent.REJECT): ClaimState.REJECTED,
}


def next_state(state: ClaimState, event: ClaimEvent) -> ClaimState:
    try:
        return TRANSITIONS[(ClaimState(state), ClaimEvent(event))]
    except KeyError:
        raise InvalidTransition(ClaimState(state), ClaimEvent(event)) from None


def compute_claim_id(
    policy_id: str,
    provider_id: str,
    patient_id: str,
    lines: Sequence[ClaimLineItem],
    creation_nonce: int,
) -> bytes:
    return digest(
        {
            "policy_id": policy_id,
            "provider_id": provider_id,
            "patient_id": patient_id,
            "lines": [line.as_pair() for line in lines],
            "creation_nonce": creation_nonce,
        }
    )


@dataclass(frozen=True)
class LineDecision:
    encounter_code: str
    submitted: int
    approved: int

    @property
    def delta(self) -> int:
        return self.submitted - self.approved


@dataclass(frozen=True)
class ApprovalDecision:
    claim_id: bytes
    lines: tuple[LineDecision, ...]

    @property
    def total_approved(self) -> int:
        return money_sum(d.approved for d in self.lines)

    @property
    def total_submitted(self) -> int:
        return money_sum(d.submitted for d in self.lines)

    def canonical_lines(self) -> list:
        return [[d.encounter_code, d.submitted, d.approved, d.delta] for d in self.lines]

    def digest(self) -> bytes:
        return approval_digest(self.claim_id, self.canonical_lines(), self.total_approved)


@dataclass(frozen=True)
class Acknowledgment:
    claim_id: bytes
    received: int
    remaining: int
    overpayment_flag: bool


def approval_digest(claim_id: bytes, lines: list, total_approved: int) -> bytes:
    return digest(
        {"phase": "approval", "claim_id": claim_id, "lines": lines, "total_approved": total_approved}
    )


def ack_digest(claim_id: bytes, received: int) -> bytes:
    return digest({"phase": "acknowledgment", "claim_id": claim_id, "received": received})


@dataclass
class Claim:
    claim_id: bytes
    policy_id: str
    provider_id: str
    patient_id: str
    lines: tuple[ClaimLineItem, ...]
    creation_nonce: int
    consent: bool = True
    copay: int = 0
    state: ClaimState = ClaimState.DRAFT
    decision: Optional[ApprovalDecision] = None
    payment: Optional[int] = None
    acknowledgment: Optional[Acknowledgment] = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def total_submitted(self) -> int:
        return money_sum(line.amount for line in self.lines)

    def recompute_id(self) -> bytes:
        return compute_claim_id(
            self.policy_id, self.provider_id, self.patient_id, self.lines, self.creation_nonce
        )


# Pure phase logic. The engine below wraps these with state and ledger I/O.

def review_claim(lines: Sequence[ClaimLineItem], policy: InsurancePolicy) -> list[ClaimLineItem]:
    """Screen draft lines against the policy; return them all or raise."""
    lines = list(lines)
    if not lines:
        raise PreconditionError("a claim needs at least one line")
    for line in lines:
        if not zeta_check(line, policy):
            raise ReviewError(line.encounter_code, line.amount)
    violated = detect_unbundling(lines, policy)
    if violated:
        raise UnbundlingError(violated)
    return lines


def adjudicate(claim_id: bytes, lines: Sequence[ClaimLineItem], policy: InsurancePolicy) -> ApprovalDecision:
    """Approve each line as submitted if within coverage, else clamp it.

    A covered code over its cap is cut to the cap; an uncovered code gets 0.
    """
    out = []
    for line in lines:
        if zeta_check(line, policy):
            approved = line.amount
        else:
            cap = policy.cap(line.encounter_code)
            approved = 0 if cap is None else min(line.amount, cap)
        out.append(LineDecision(line.encounter_code, line.amount, approved))
    return ApprovalDecision(claim_id, tuple(out))


def settle(claim_id: bytes, total_submitted: int, received: int) -> Acknowledgment:
    check_money(received)
    return Acknowledgment(
        claim_id=claim_id,
        received=received,
        remaining=max(0, total_submitted - received),
        overpayment_flag=received > total_submitted,
    )


class ClaimEngine:
    """Holds identities, policies and claims; drives claims through the phases.

    One engine owns one ledger. Transitions on a single claim are serialized
    by that claim's lock; the ledger serializes its own appends.
    """

    def __init__(
        self,
        registry: Optional[IdentityRegistry] = None,
        ledger: Optional[Ledger] = None,
    ) -> None:
        self.registry = registry or IdentityRegistry()
        self.ledger = ledger or Ledger()
        self.policies: dict[str, InsurancePolicy] = {}
        self.claims: dict[bytes, Claim] = {}
        self._seq = 0
        self._lock = threading.Lock()

    # setup

    def register_identity(self, identity: Identity) -> Identity:
        pub = self.registry.register(identity)
        self.ledger.append_event(
            EventKind.IDENTITY_REGISTERED,
            {"id": pub.id, "role": pub.role.value, "public_key": pub.public_key, "nonce": pub.nonce},
        )
        return pub

    def register_policy(self, policy: InsurancePolicy) -> InsurancePolicy:
        if policy.policy_id in self.policies:
            raise PolicyError(f"duplicate policy id {policy.policy_id}")
        self._require_role(policy.patient_id, Role.PATIENT, PolicyError)
        self._require_role(policy.insurer_id, Role.INSURER, PolicyError)
        self.policies[policy.policy_id] = policy
        self.ledger.append_event(EventKind.POLICY_REGISTERED, policy.to_json())
        return policy

    def _require_role(self, identity_id: str, role: Role, exc=PreconditionError) -> None:
        try:
            ident = self.registry.get(identity_id)
        except UnknownSigner:
            raise exc(f"{identity_id} is not registered") from None
        if ident.role != role:
            raise exc(f"{identity_id} is a {ident.role.value}, not a {role.value}")

    def policy(self, policy_id: str) -> InsurancePolicy:
        try:
            return self.policies[policy_id]
        except KeyError:
            raise PreconditionError(f"unknown policy {policy_id}") from None

    def claim(self, claim_id: bytes) -> Claim:
        try:
            return self.claims[bytes(claim_id)]
        except KeyError:
            raise UnknownClaim(f"unknown claim {bytes(claim_id).hex()}") from None

    # claim lifecycle

    def create_claim(
        self,
        policy_id: str,
        provider_id: str,
        patient_id: str,
        lines: Iterable[ClaimLineItem],
        consent: bool = True,
    ) -> Claim:
        """Open a Draft claim. The copay is split off the billed total here."""
        policy = self.policy(policy_id)
        self._require_role(provider_id, Role.PROVIDER)
        self._require_role(patient_id, Role.PATIENT)
        lines = tuple(lines)
        copay, _ = compute_copay_split(money_sum(l.amount for l in lines), policy)
        with self._lock:
            while True:
                self._seq += 1
                cid = compute_claim_id(policy_id, provider_id, patient_id, lines, self._seq)
                if cid not in self.claims:
                    break
            claim = Claim(cid, policy_id, provider_id, patient_id, lines, self._seq, consent, copay)
            self.claims[cid] = claim
        return claim

    def transition(self, claim_id: bytes, event: ClaimEvent) -> ClaimState:
        claim = self.claim(claim_id)
        with claim._lock:
            claim.state = next_state(claim.state, event)
            return claim.state

    def _require_state(self, claim: Claim, event: ClaimEvent) -> None:
        next_state(claim.state, event)

    def _gate(
        self,
        envelope: Optional[MultiSigEnvelope],
        expected_digest: bytes,
        roles: tuple[Role, Role],
        parties: dict[Role, str],
        exc: type[GatedStepError],
    ) -> None:
        if envelope is None:
            raise exc(Reason.MISSING_SIGNATURE)
        if envelope.payload_digest != expected_digest:
            raise exc(Reason.DIGEST_MISMATCH)
        if tuple(envelope.required_roles) != roles:
            raise exc(Reason.ROLE_MISMATCH, f"expected roles {[r.value for r in roles]}")
        for sig in envelope.signatures:
            expected = parties.get(sig.signer_role)
            if expected is not None and sig.signer_id != expected:
                raise exc(Reason.SIGNER_MISMATCH, f"{sig.signer_id} cannot sign for {expected}")
        failure = self.registry.admit(envelope)
        if failure is not None:
            raise exc(failure)

    def review(self, claim_id: bytes) -> Claim:
        """Phase 1 review: every line must pass the coverage check, no bundle split."""
        claim = self.claim(claim_id)
        with claim._lock:
            self._require_state(claim, ClaimEvent.REVIEW)
            review_claim(claim.lines, self.policy(claim.policy_id))
            claim.state = next_state(claim.state, ClaimEvent.REVIEW)
        return claim

    def submit(self, claim_id: bytes, envelope: Optional[MultiSigEnvelope]) -> LedgerRecord:
        """Phase 1 submission, co-signed by the claim's provider and patient."""
        claim = self.claim(claim_id)
        with claim._lock:
            self._require_state(claim, ClaimEvent.SUBMIT)
            policy = self.policy(claim.policy_id)
            if policy.patient_id != claim.patient_id:
                raise NotSubmitted(
                    Reason.POLICY_BINDING_MISMATCH,
                    f"policy {policy.policy_id} does not cover {claim.patient_id}",
                )
            if not claim.consent:
                raise NotSubmitted(Reason.CONSENT_MISSING)
            self._gate(
                envelope,
                claim.claim_id,
                SUBMIT_ROLES,
                {Role.PROVIDER: claim.provider_id, Role.PATIENT: claim.patient_id},
                NotSubmitted,
            )
            claim.state = next_state(claim.state, ClaimEvent.SUBMIT)
            return self.ledger.append_event(
                EventKind.CLAIM_SUBMITTED,
                {
                    "claim_id": claim.claim_id,
                    "policy_id": claim.policy_id,
                    "provider_id": claim.provider_id,
                    "patient_id": claim.patient_id,
                    "creation_nonce": claim.creation_nonce,
                    "lines": [l.as_pair() for l in claim.lines],
                    "total_submitted": claim.total_submitted,
                    "copay": claim.copay,
                },
                envelope,
            )

    def decide(self, claim_id: bytes, policy: Optional[InsurancePolicy] = None) -> ApprovalDecision:
        """The insurer's adjudication of a claim, for the parties to co-sign."""
        claim = self.claim(claim_id)
        policy = self._approval_policy(claim, policy)
        return adjudicate(claim.claim_id, claim.lines, policy)

    def _approval_policy(self, claim: Claim, policy: Optional[InsurancePolicy]) -> InsurancePolicy:
        registered = self.policy(claim.policy_id)
        if policy is None:
            return registered
        if (policy.policy_id, policy.patient_id, policy.insurer_id) != (
            registered.policy_id,
            registered.patient_id,
            registered.insurer_id,
        ):
            raise PreconditionError("approval-time policy must be a version of the claim's policy")
        return policy

    def approve(
        self,
        claim_id: bytes,
        envelope: Optional[MultiSigEnvelope],
        policy: Optional[InsurancePolicy] = None,
    ) -> ApprovalDecision:
        """Phase 2: adjudicate and record, co-signed by insurer and patient.

        ``policy`` lets the insurer adjudicate under the policy terms in force
        at approval time; it defaults to the registered policy. A zero total
        rejects the claim instead of approving it.
        """
        claim = self.claim(claim_id)
        with claim._lock:
            self._require_state(claim, ClaimEvent.APPROVE)
            terms = self._approval_policy(claim, policy)
            decision = adjudicate(claim.claim_id, claim.lines, terms)
            self._gate(
                envelope,
                decision.digest(),
                APPROVE_ROLES,
                {Role.INSURER: terms.insurer_id, Role.PATIENT: claim.patient_id},
                NotApproved,
            )
            rejected = decision.total_approved == 0
            event = ClaimEvent.REJECT if rejected else ClaimEvent.APPROVE
            claim.state = next_state(claim.state, event)
            claim.decision = decision
            self.ledger.append_event(
                EventKind.CLAIM_APPROVED,
                {
                    "claim_id": claim.claim_id,
                    "insurer_id": terms.insurer_id,
                    "lines": decision.canonical_lines(),
                    "total_approved": decision.total_approved,
                    "outcome": "rejected" if rejected else "approved",
                },
                envelope,
            )
            return decision

    def disburse_payment(self, claim_id: bytes) -> LedgerRecord:
        """Release the approved total to the provider."""
        claim = self.claim(claim_id)
        with claim._lock:
            self._require_state(claim, ClaimEvent.PAY)
            if claim.decision is None or claim.decision.total_approved <= 0:
                raise PreconditionError("nothing approved to pay")
            claim.state = next_state(claim.state, ClaimEvent.PAY)
            claim.payment = claim.decision.total_approved
            return self.ledger.append_event(
                EventKind.PAYMENT_RECEIVED,
                {"claim_id": claim.claim_id, "received": claim.payment},
            )

    def acknowledge(
        self,
        claim_id: bytes,
        envelope: Optional[MultiSigEnvelope],
        received: Optional[int] = None,
    ) -> Acknowledgment:
        """Phase 3: provider and patient acknowledge what was received.

        The shortfall against the submitted total is billed to the patient;
        receiving more than was submitted is flagged, never absorbed.
        """
        claim = self.claim(claim_id)
        with claim._lock:
            self._require_state(claim, ClaimEvent.ACKNOWLEDGE)
            if received is None:
                received = claim.payment
            ack = settle(claim.claim_id, claim.total_submitted, received)
            self._gate(
                envelope,
                ack_digest(claim.claim_id, received),
                ACK_ROLES,
                {Role.PROVIDER: claim.provider_id, Role.PATIENT: claim.patient_id},
                NotAcknowledged,
            )
            claim.state = next_state(claim.state, ClaimEvent.ACKNOWLEDGE)
            claim.acknowledgment = ack
            self.ledger.append_event(
                EventKind.ACK_RECORDED,
                {
                    "claim_id": claim.claim_id,
                    "received": ack.received,
                    "remaining": ack.remaining,
                    "overpayment": ack.overpayment_flag,
                    "total_submitted": claim.total_submitted,
                },
                envelope,
            )
            claim.state = next_state(claim.state, ClaimEvent.CLOSE)
            return ack

    def reject(self, claim_id: bytes) -> ClaimState:
        return self.transition(claim_id, ClaimEvent.REJECT)

    def audit_trail(self, claim_id: bytes) -> list[LedgerRecord]:
        return self.ledger.audit_trail(claim_id)


def audit_signatures(records: Sequence[LedgerRecord]) -> list[str]:
    """Replay a ledger and re-verify every signature-gated event.

    The registry and policies are rebuilt from the ledger's own
    IdentityRegistered and PolicyRegistered records, nonces included, so the
    check depends on nothing outside the ledger. Returns a list of problems;
    empty means every gated event is properly co-signed.
    """
    registry = IdentityRegistry()
    policies: dict[str, dict] = {}
    claims: dict[bytes, dict] = {}
    problems: list[str] = []

    def check(rec, want_digest, roles, parties) -> None:
        env = rec.envelope
        if env is None:
            problems.append(f"record {rec.index}: {rec.kind.value} has no envelope")
            return
        if env.payload_digest != want_digest:
            problems.append(f"record {rec.index}: envelope digest does not match payload")
            return
        if tuple(env.required_roles) != roles:
            problems.append(f"record {rec.index}: wrong required roles")
            return
        for sig in env.signatures:
            if parties.get(sig.signer_role) not in (None, sig.signer_id):
                problems.append(f"record {rec.index}: {sig.signer_id} is not a party")
                return
        failure = registry.admit(env)
        if failure is not None:
            problems.append(f"record {rec.index}: {failure.value}")

    for rec in records:
        try:
            body = rec.body()
        except EncodingError:
            problems.append(f"record {rec.index}: undecodable payload")
            continue
        try:
            if rec.kind is EventKind.IDENTITY_REGISTERED:
                registry.register(
                    Identity(body["id"], Role(body["role"]), body["public_key"], body.get("nonce", 0))
                )
            elif rec.kind is EventKind.POLICY_REGISTERED:
                policies[body["policy_id"]] = body
            elif rec.kind is EventKind.CLAIM_SUBMITTED:
                lines = [ClaimLineItem(c, a) for c, a in body["lines"]]
                cid = compute_claim_id(
                    body["policy_id"], body["provider_id"], body["patient_id"], lines, body["creation_nonce"]
                )
                if cid != body["claim_id"]:
                    problems.append(f"record {rec.index}: claim id does not match content")
                    continue
                pol = policies.get(body["policy_id"])
                if pol is None or pol["patient_id"] != body["patient_id"]:
                    problems.append(f"record {rec.index}: claim not bound to its policy")
                    continue
                claims[cid] = body
                check(rec, cid, SUBMIT_ROLES,
                      {Role.PROVIDER: body["provider_id"], Role.PATIENT: body["patient_id"]})
            elif rec.kind is EventKind.CLAIM_APPROVED:
                sub = claims.get(body["claim_id"])
                if sub is None:
                    problems.append(f"record {rec.index}: approval of unsubmitted claim")
                    continue
                if body["insurer_id"] != policies[sub["policy_id"]]["insurer_id"]:
                    problems.append(f"record {rec.index}: approver is not the policy's insurer")
                    continue
                want = approval_digest(body["claim_id"], body["lines"], body["total_approved"])
                check(rec, want, APPROVE_ROLES,
                      {Role.INSURER: body["insurer_id"], Role.PATIENT: sub["patient_id"]})
            elif rec.kind is EventKind.ACK_RECORDED:
                sub = claims.get(body["claim_id"])
                if sub is None:
                    problems.append(f"record {rec.index}: acknowledgment of unsubmitted claim")
                    continue
                check(rec, ack_digest(body["claim_id"], body["received"]), ACK_ROLES,
                      {Role.PROVIDER: sub["provider_id"], Role.PATIENT: sub["patient_id"]})
        except (KeyError, TypeError, ValueError, PolicyError, RegistryError) as exc:
            problems.append(f"record {rec.index}: malformed {rec.kind.value} payload ({exc})")
    return problems
