"""Multi-signature health-insurance claim processing over a hash-chained ledger."""

from claimsig.identity import (
    Identity,
    IdentityRegistry,
    MultiSigEnvelope,
    Role,
    Signature,
    generate_identity,
    sign,
    verify,
    verify_multisig,
)
from claimsig.ledger import EventKind, Ledger, LedgerRecord, verify_chain
from claimsig.policy import (
    BundleRule,
    ClaimLineItem,
    InsurancePolicy,
    compute_copay_split,
    detect_unbundling,
    zeta_check,
)
from claimsig.protocol import ClaimEngine, ClaimEvent, ClaimState

__version__ = "0.1.0"
