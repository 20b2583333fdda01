import pytest

from claimsig.identity import Role, generate_identity
from claimsig.ledger import Ledger, LogicalClock
from claimsig.policy import BundleRule, ClaimLineItem, InsurancePolicy
from claimsig.protocol import ClaimEngine


def seed(n: int) -> bytes:
    return bytes([n]) * 32


@pytest.fixture
def patient():
    return generate_identity(Role.PATIENT, seed(1), "patient-1")


@pytest.fixture
def provider():
    return generate_identity(Role.PROVIDER, seed(2), "provider-1")


@pytest.fixture
def insurer():
    return generate_identity(Role.INSURER, seed(3), "insurer-1")


@pytest.fixture
def policy():
    return InsurancePolicy(
        policy_id="POL-1",
        patient_id="patient-1",
        insurer_id="insurer-1",
        coverage={"E100": 15_000, "E200": 10_000, "A1": 3_000, "B1": 4_000, "C1": 5_000, "BNDL1": 9_000},
        copay=2_000,
        bundles=(BundleRule("BNDL1", frozenset({"A1", "B1", "C1"}), 9_000),),
    )


@pytest.fixture
def engine(patient, provider, insurer, policy):
    eng = ClaimEngine(ledger=Ledger(LogicalClock(1_700_000_000_000)))
    for ident in (patient, provider, insurer):
        eng.register_identity(ident)
    eng.register_policy(policy)
    return eng


def L(code, amount):
    return ClaimLineItem(code, amount)
