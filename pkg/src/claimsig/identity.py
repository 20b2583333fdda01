"""Stakeholder identities, Ed25519 signing and two-party multisig envelopes.

Signatures inside an envelope are taken over a *binding message* that ties
the payload digest to the signer's id, role and nonce, so a captured
signature cannot be replayed under a fresh nonce or a different role.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from claimsig.encoding import encode
from claimsig.errors import (
    DuplicateRole,
    InvalidSeed,
    Reason,
    RegistryError,
    SigningFailure,
    UnknownSigner,
)

SEED_LEN = 32
PUBLIC_KEY_LEN = 32
SIGNATURE_LEN = 64
DIGEST_LEN = 32

_BINDING_DOMAIN = b"claimsig/envelope/v1"


class Role(str, Enum):
    PATIENT = "patient"
    PROVIDER = "provider"
    INSURER = "insurer"

    @property
    def rank(self) -> int:
        return _ROLE_ORDER[self]


_ROLE_ORDER = {Role.PATIENT: 0, Role.PROVIDER: 1, Role.INSURER: 2}


@dataclass
class Identity:
    """A protocol participant.

    ``nonce`` is the signer-side counter of the last nonce this identity used.
    ``secret`` is only present on the holder's own copy; registries never
    store it.
    """

    id: str
    role: Role
    public_key: bytes
    nonce: int = 0
    secret: Optional[bytes] = field(default=None, repr=False, compare=False)

    def public(self) -> "Identity":
        return Identity(self.id, self.role, self.public_key, self.nonce)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "role": self.role.value,
            "public_key": self.public_key.hex(),
            "nonce": self.nonce,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Identity":
        try:
            key = bytes.fromhex(obj["public_key"])
            ident = cls(str(obj["id"]), Role(obj["role"]), key, int(obj.get("nonce", 0)))
        except (KeyError, ValueError, TypeError) as exc:
            raise RegistryError(f"malformed identity entry: {obj!r}") from exc
        if len(key) != PUBLIC_KEY_LEN or ident.nonce < 0:
            raise RegistryError(f"malformed identity entry: {obj!r}")
        return ident


@dataclass(frozen=True)
class Signature:
    signer_id: str
    signer_role: Role
    nonce: int
    bytes: bytes

    def to_json(self) -> dict:
        return {
            "signer_id": self.signer_id,
            "signer_role": self.signer_role.value,
            "nonce": self.nonce,
            "signature": self.bytes.hex(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Signature":
        return cls(
            obj["signer_id"],
            Role(obj["signer_role"]),
            int(obj["nonce"]),
            bytes.fromhex(obj["signature"]),
        )


def _sig_sort_key(sig: Signature) -> tuple:
    return (sig.signer_role.rank, sig.signer_id, sig.nonce, sig.bytes)


@dataclass(frozen=True)
class MultiSigEnvelope:
    """Payload digest plus the role-attributed signatures authorizing it.

    Signatures are stored in canonical order (role rank, then signer id) no
    matter what order they were supplied in.
    """

    payload_digest: bytes
    required_roles: tuple[Role, Role]
    signatures: tuple[Signature, ...] = ()

    def __post_init__(self) -> None:
        if len(self.payload_digest) != DIGEST_LEN:
            raise ValueError("payload digest must be 32 bytes")
        roles = tuple(Role(r) for r in self.required_roles)
        if len(roles) != 2 or roles[0] == roles[1]:
            raise ValueError("an envelope requires exactly two distinct roles")
        object.__setattr__(self, "required_roles", roles)
        object.__setattr__(self, "signatures", tuple(sorted(self.signatures, key=_sig_sort_key)))

    def with_signature(self, sig: Signature) -> "MultiSigEnvelope":
        return MultiSigEnvelope(self.payload_digest, self.required_roles, self.signatures + (sig,))

    def canonical(self) -> list:
        return [
            self.payload_digest,
            [r.value for r in self.required_roles],
            [[s.signer_id, s.signer_role.value, s.nonce, s.bytes] for s in self.signatures],
        ]

    def to_bytes(self) -> bytes:
        return encode(self.canonical())

    def to_json(self) -> dict:
        return {
            "payload_digest": self.payload_digest.hex(),
            "required_roles": [r.value for r in self.required_roles],
            "signatures": [s.to_json() for s in self.signatures],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MultiSigEnvelope":
        return cls(
            bytes.fromhex(obj["payload_digest"]),
            tuple(Role(r) for r in obj["required_roles"]),
            tuple(Signature.from_json(s) for s in obj["signatures"]),
        )


def generate_identity(role: Role, seed: bytes, id: Optional[str] = None) -> Identity:
    """Derive an identity deterministically from a 32-byte seed.

    The seed is the Ed25519 secret key, so the same seed always gives the
    same public key regardless of role.
    """
    if not isinstance(seed, (bytes, bytearray)) or len(seed) != SEED_LEN:
        raise InvalidSeed(f"seed must be exactly {SEED_LEN} bytes")
    role = Role(role)
    sk = Ed25519PrivateKey.from_private_bytes(bytes(seed))
    pk = sk.public_key().public_bytes_raw()
    if id is None:
        id = f"{role.value}-{pk[:6].hex()}"
    return Identity(id=id, role=role, public_key=pk, nonce=0, secret=bytes(seed))


def _private_key(signer: Identity) -> Ed25519PrivateKey:
    if signer.secret is None or len(signer.secret) != SEED_LEN:
        raise SigningFailure(f"{signer.id} holds no usable secret key")
    sk = Ed25519PrivateKey.from_private_bytes(signer.secret)
    if sk.public_key().public_bytes_raw() != signer.public_key:
        raise SigningFailure(f"secret key of {signer.id} does not match its public key")
    return sk


def sign(payload: bytes, signer: Identity) -> Signature:
    """Sign ``payload`` as-is and advance the signer's nonce by one."""
    sk = _private_key(signer)
    sig = sk.sign(bytes(payload))
    signer.nonce += 1
    return Signature(signer.id, signer.role, signer.nonce, sig)


def verify(signature: Signature, payload: bytes, public_key: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature.bytes, bytes(payload))
    except (InvalidSignature, ValueError):
        return False
    return True


def binding_message(digest: bytes, signer_id: str, role: Role, nonce: int) -> bytes:
    return encode([_BINDING_DOMAIN, digest, signer_id, Role(role).value, nonce])


def cosign(digest: bytes, signer: Identity) -> Signature:
    """Produce an envelope signature over ``digest`` using the next nonce."""
    _private_key(signer)
    msg = binding_message(digest, signer.id, signer.role, signer.nonce + 1)
    return sign(msg, signer)


def make_envelope(digest: bytes, roles: tuple[Role, Role], *signers: Identity) -> MultiSigEnvelope:
    env = MultiSigEnvelope(digest, roles)
    for s in signers:
        env = env.with_signature(cosign(digest, s))
    return env


class IdentityRegistry:
    """Public identities plus the last nonce accepted from each signer.

    Nonce checks and advancement happen under one lock, so concurrent
    verifications of envelopes from the same signer are serialized.
    """

    def __init__(self, identities: Iterable[Identity] = ()) -> None:
        self._by_id: dict[str, Identity] = {}
        self._by_key: dict[bytes, str] = {}
        self._last_nonce: dict[str, int] = {}
        self._lock = threading.RLock()
        for ident in identities:
            self.register(ident)

    def register(self, identity: Identity) -> Identity:
        with self._lock:
            if identity.id in self._by_id:
                raise RegistryError(f"duplicate identity id {identity.id}")
            if identity.public_key in self._by_key:
                raise RegistryError(
                    f"public key of {identity.id} already registered to "
                    f"{self._by_key[identity.public_key]}"
                )
            pub = identity.public()
            self._by_id[pub.id] = pub
            self._by_key[pub.public_key] = pub.id
            self._last_nonce[pub.id] = pub.nonce
            return pub

    def __contains__(self, identity_id: str) -> bool:
        return identity_id in self._by_id

    def __len__(self) -> int:
        return len(self._by_id)

    def get(self, identity_id: str) -> Identity:
        try:
            return self._by_id[identity_id]
        except KeyError:
            raise UnknownSigner(f"unknown signer {identity_id}") from None

    def last_nonce(self, identity_id: str) -> int:
        self.get(identity_id)
        return self._last_nonce[identity_id]

    def identities(self) -> list[Identity]:
        return [
            Identity(i.id, i.role, i.public_key, self._last_nonce[i.id])
            for i in self._by_id.values()
        ]

    def snapshot(self) -> "IdentityRegistry":
        """A copy sharing no mutable state, nonces included."""
        return IdentityRegistry(self.identities())

    def diagnose(self, envelope: MultiSigEnvelope) -> Optional[Reason]:
        """Return why ``envelope`` would be refused, or None if it is valid.

        Never mutates nonce state.
        """
        with self._lock:
            seen_roles: set[Role] = set()
            for sig in envelope.signatures:
                self.get(sig.signer_id)
                if sig.signer_role in seen_roles:
                    return Reason.DUPLICATE_ROLE
                seen_roles.add(sig.signer_role)
            for sig in envelope.signatures:
                ident = self._by_id[sig.signer_id]
                if ident.role != sig.signer_role:
                    return Reason.ROLE_MISMATCH
                if sig.signer_role not in envelope.required_roles:
                    return Reason.UNEXPECTED_SIGNATURE
            if any(r not in seen_roles for r in envelope.required_roles):
                return Reason.MISSING_SIGNATURE
            for sig in envelope.signatures:
                ident = self._by_id[sig.signer_id]
                msg = binding_message(envelope.payload_digest, sig.signer_id, sig.signer_role, sig.nonce)
                if not verify(sig, msg, ident.public_key):
                    return Reason.SIGNATURE_INVALID
            for sig in envelope.signatures:
                if sig.nonce <= self._last_nonce[sig.signer_id]:
                    return Reason.REPLAYED_NONCE
            return None

    def admit(self, envelope: MultiSigEnvelope) -> Optional[Reason]:
        """Check ``envelope`` and, if valid, consume its nonces atomically.

        Unknown signers and duplicate roles are reported as reasons here
        rather than raised.
        """
        with self._lock:
            try:
                failure = self.diagnose(envelope)
            except UnknownSigner:
                return Reason.UNKNOWN_SIGNER
            if failure is None:
                for sig in envelope.signatures:
                    self._last_nonce[sig.signer_id] = sig.nonce
            return failure

    def to_json(self) -> list[dict]:
        return [i.to_json() for i in self.identities()]

    @classmethod
    def from_json(cls, entries: list[dict]) -> "IdentityRegistry":
        if not isinstance(entries, list):
            raise RegistryError("registry file must hold a JSON array")
        return cls(Identity.from_json(e) for e in entries)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "IdentityRegistry":
        return cls.from_json(json.loads(Path(path).read_text()))


def verify_multisig(envelope: MultiSigEnvelope, registry: IdentityRegistry) -> bool:
    """True iff both required roles are covered by fresh, verifying signatures.

    On success the signers' last-seen nonces advance. Raises
    :class:`UnknownSigner` for an unregistered signer id and
    :class:`DuplicateRole` when a role is covered more than once.
    """
    with registry._lock:
        failure = registry.diagnose(envelope)
        if failure is Reason.DUPLICATE_ROLE:
            raise DuplicateRole("role covered by more than one signature")
        if failure is not None:
            return False
        return registry.admit(envelope) is None
