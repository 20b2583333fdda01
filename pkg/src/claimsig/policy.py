"""Insurance policies, the coverage predicate, bundle rules and copay.

All money is integer minor units (cents). Nothing in here touches floats.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from claimsig.errors import MoneyOverflow, PolicyError

MAX_MONEY = 2**63 - 1

_CODE_RE = re.compile(r"[A-Z][A-Z0-9]{1,15}")


def check_code(code: str) -> str:
    if not isinstance(code, str) or not _CODE_RE.fullmatch(code):
        raise PolicyError(f"malformed encounter code {code!r}")
    return code


def check_money(amount: int) -> int:
    if isinstance(amount, bool) or not isinstance(amount, int):
        raise PolicyError(f"money must be an integer number of cents, got {amount!r}")
    if not 0 <= amount <= MAX_MONEY:
        raise MoneyOverflow(f"money out of range: {amount}")
    return amount


def money_sum(amounts: Iterable[int]) -> int:
    total = 0
    for a in amounts:
        total += check_money(a)
        if total > MAX_MONEY:
            raise MoneyOverflow("money sum overflows")
    return total


@dataclass(frozen=True)
class ClaimLineItem:
    encounter_code: str
    amount: int

    def __post_init__(self) -> None:
        check_code(self.encounter_code)
        check_money(self.amount)
        if self.amount == 0:
            raise PolicyError(f"line {self.encounter_code} has zero amount")

    def as_pair(self) -> list:
        return [self.encounter_code, self.amount]


@dataclass(frozen=True)
class BundleRule:
    bundle_code: str
    components: frozenset[str]
    bundled_cap: int

    def __post_init__(self) -> None:
        check_code(self.bundle_code)
        comps = frozenset(check_code(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        check_money(self.bundled_cap)
        if len(comps) < 2:
            raise PolicyError(f"bundle {self.bundle_code} needs at least two components")
        if self.bundle_code in comps:
            raise PolicyError(f"bundle {self.bundle_code} lists itself as a component")

    def to_json(self) -> dict:
        return {
            "bundle_code": self.bundle_code,
            "components": sorted(self.components),
            "bundled_cap_cents": self.bundled_cap,
        }


@dataclass(frozen=True)
class InsurancePolicy:
    policy_id: str
    patient_id: str
    insurer_id: str
    coverage: Mapping[str, int]
    copay: int = 0
    bundles: tuple[BundleRule, ...] = field(default=())

    def __post_init__(self) -> None:
        cov = {check_code(c): check_money(cap) for c, cap in dict(self.coverage).items()}
        for code, cap in cov.items():
            if cap <= 0:
                raise PolicyError(f"coverage cap for {code} must be positive")
        object.__setattr__(self, "coverage", dict(sorted(cov.items())))
        check_money(self.copay)
        bundles = tuple(self.bundles)
        for rule in bundles:
            missing = sorted(rule.components - cov.keys())
            if missing:
                raise PolicyError(f"bundle {rule.bundle_code} components not covered: {missing}")
            if rule.bundled_cap >= sum(cov[c] for c in rule.components):
                raise PolicyError(
                    f"bundle {rule.bundle_code} cap is not below its components' combined caps"
                )
        object.__setattr__(self, "bundles", bundles)

    def cap(self, code: str) -> int | None:
        return self.coverage.get(code)

    def to_json(self) -> dict:
        return {
            "policy_id": self.policy_id,
            "patient_id": self.patient_id,
            "insurer_id": self.insurer_id,
            "copay_cents": self.copay,
            "coverage": dict(self.coverage),
            "bundles": [b.to_json() for b in self.bundles],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "InsurancePolicy":
        try:
            return cls(
                policy_id=str(obj["policy_id"]),
                patient_id=str(obj["patient_id"]),
                insurer_id=str(obj["insurer_id"]),
                coverage={str(k): v for k, v in obj["coverage"].items()},
                copay=obj.get("copay_cents", 0),
                bundles=tuple(
                    BundleRule(b["bundle_code"], frozenset(b["components"]), b["bundled_cap_cents"])
                    for b in obj.get("bundles", [])
                ),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise PolicyError(f"malformed policy fixture: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "InsurancePolicy":
        return cls.from_json(json.loads(Path(path).read_text()))


def zeta_check(line: ClaimLineItem, policy: InsurancePolicy) -> bool:
    """Is the line's code covered and its amount within the code's cap?"""
    cap = policy.coverage.get(line.encounter_code)
    return cap is not None and line.amount <= cap


def detect_unbundling(lines: Iterable[ClaimLineItem], policy: InsurancePolicy) -> list[BundleRule]:
    """Bundle rules whose complete component set is billed among ``lines``.

    A partial component set is legal and never reported.
    """
    billed = {line.encounter_code for line in lines}
    return [rule for rule in policy.bundles if rule.components <= billed]


def compute_copay_split(total: int, policy: InsurancePolicy) -> tuple[int, int]:
    """Split ``total`` into (patient_share, claimable); copay is clamped at the total."""
    check_money(total)
    patient_share = min(policy.copay, total)
    return patient_share, total - patient_share
