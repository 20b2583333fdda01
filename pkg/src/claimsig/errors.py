"""Exception hierarchy and machine-readable reason codes."""

from __future__ import annotations

from enum import Enum


class Reason(str, Enum):
    """Why a protocol step or a scenario was blocked."""

    PATIENT_REFUSED_SIGN = "PatientRefusedSign"
    SIGNATURE_INVALID = "SignatureInvalid"
    COVERAGE_EXCEEDED = "CoverageExceeded"
    UNBUNDLING = "Unbundling"
    POLICY_BINDING_MISMATCH = "PolicyBindingMismatch"
    CONSENT_MISSING = "ConsentMissing"
    MISSING_SIGNATURE = "MissingSignature"
    UNEXPECTED_SIGNATURE = "UnexpectedSignature"
    DIGEST_MISMATCH = "DigestMismatch"
    ROLE_MISMATCH = "RoleMismatch"
    SIGNER_MISMATCH = "SignerMismatch"
    REPLAYED_NONCE = "ReplayedNonce"
    UNKNOWN_SIGNER = "UnknownSigner"
    DUPLICATE_ROLE = "DuplicateRole"
    CLAIM_REJECTED = "ClaimRejected"


class ClaimsigError(Exception):
    """Base class for every error raised by this package."""


# identity / crypto

class InvalidSeed(ClaimsigError):
    pass


class SigningFailure(ClaimsigError):
    pass


class MultisigError(ClaimsigError):
    reason: Reason

    def __init__(self, message: str) -> None:
        super().__init__(message)


class UnknownSigner(MultisigError):
    reason = Reason.UNKNOWN_SIGNER


class DuplicateRole(MultisigError):
    reason = Reason.DUPLICATE_ROLE


class RegistryError(ClaimsigError):
    """Duplicate identity id or public key, or a malformed registry file."""


# encoding / ledger

class EncodingError(ClaimsigError):
    pass


class LedgerIntegrityError(ClaimsigError):
    def __init__(self, message: str, first_bad_index: int) -> None:
        super().__init__(message)
        self.first_bad_index = first_bad_index


# policy

class PolicyError(ClaimsigError):
    """A policy, bundle rule, line item or money value violates its invariants."""


class MoneyOverflow(PolicyError):
    pass


# protocol

class InvalidTransition(ClaimsigError):
    def __init__(self, state, event) -> None:
        super().__init__(f"no transition from {state.value} on {event.value}")
        self.state = state
        self.event = event


class ReviewError(ClaimsigError):
    def __init__(self, code: str, amount: int) -> None:
        super().__init__(f"invalid line: code {code} amount {amount}")
        self.code = code
        self.amount = amount
        self.reason = Reason.COVERAGE_EXCEEDED


class UnbundlingError(ClaimsigError):
    def __init__(self, rules) -> None:
        names = ", ".join(r.bundle_code for r in rules)
        super().__init__(f"components billed separately for bundle(s): {names}")
        self.rules = list(rules)
        self.reason = Reason.UNBUNDLING


class GatedStepError(ClaimsigError):
    """A signature-gated step was refused; ``reason`` says why."""

    def __init__(self, reason: Reason, detail: str = "") -> None:
        msg = reason.value if not detail else f"{reason.value}: {detail}"
        super().__init__(msg)
        self.reason = reason


class NotSubmitted(GatedStepError):
    pass


class NotApproved(GatedStepError):
    pass


class NotAcknowledged(GatedStepError):
    pass


class PreconditionError(ClaimsigError):
    pass


class UnknownClaim(ClaimsigError):
    pass


# gas / harness

class EmptySeries(ClaimsigError):
    pass


class PriceSeriesError(ClaimsigError):
    pass


class UnknownFraudType(ClaimsigError):
    pass


class ConfigError(ClaimsigError):
    pass
