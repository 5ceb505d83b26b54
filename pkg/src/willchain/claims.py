"""Claim evidence model and the verification dispatch.

Each claim type pairs a stored expectation (set at will creation) with
an evidence variant (submitted by the claimant):

    direct          beneficiary address   <- signature over the claim message
    pedersen-claim  stored commitment     <- opening (m, r)
    schnorr-claim   signer public keys    <- aggregate signature
    gnark-claim     statement element P   <- discrete-log knowledge proof
    signature-proof stored hash + key     <- revealed pre-signed challenge

The claim message binds evidence to one claim site: it hashes the will
DID, component id, claimant address, and chain id, so evidence cannot
be replayed against another component or chain.
"""

from __future__ import annotations

from dataclasses import dataclass

from .codec import from_hex, to_hex
from .crypto.dlog import DlogProof, dlog_verify
from .crypto.group import Group, tagged_hash
from .crypto.pedersen import (
    Commitment,
    PedersenParams,
    pedersen_verify_opening,
)
from .crypto.schnorr import (
    AggregateSignature,
    SchnorrSignature,
    encode_signature,
    schnorr_aggregate_verify,
    schnorr_verify,
)
from .errors import EvidenceTypeError, UnsupportedClaimError, ValidationError

CLAIM_TYPES = ("direct", "schnorr-claim", "pedersen-claim", "gnark-claim", "signature-proof")

ADDRESS_BYTES = 20
ADDRESS_TAG = b"willchain/address/v1"
CLAIM_MSG_TAG = b"willchain/claim-msg/v1"
SIGNATURE_PROOF_CHALLENGE = b"willchain signature-proof challenge v1"
SIGNATURE_HASH_TAG = b"willchain/signature-proof/hash/v1"


def derive_address(group: Group, pk: int) -> bytes:
    """Account address: truncated hash of the public key."""
    return tagged_hash(ADDRESS_TAG, group.encode_element(pk))[:ADDRESS_BYTES]


def claim_message(did: str, component_id: str, claimant: bytes, chain_id: str) -> bytes:
    return tagged_hash(
        CLAIM_MSG_TAG, did.encode(), component_id.encode(), claimant, chain_id.encode()
    )


def signature_hash(group: Group, sig: SchnorrSignature) -> bytes:
    return tagged_hash(SIGNATURE_HASH_TAG, encode_signature(group, sig))


@dataclass(frozen=True)
class AccessControl:
    visibility: str  # "public" | "private"
    allowed: tuple[bytes, ...] = ()

    def __post_init__(self) -> None:
        if self.visibility not in ("public", "private"):
            raise ValidationError(f"unknown visibility {self.visibility!r}")
        if self.visibility == "private" and not self.allowed:
            raise ValidationError("private access requires a nonempty allow list")


# -- stored expectations, one per claim type ------------------------------


@dataclass(frozen=True)
class DirectExpectation:
    beneficiary: bytes


@dataclass(frozen=True)
class CommitmentExpectation:
    commitment: Commitment


@dataclass(frozen=True)
class SignerSetExpectation:
    signer_pks: tuple[int, ...]


@dataclass(frozen=True)
class StatementExpectation:
    statement_pk: int


@dataclass(frozen=True)
class SignatureHashExpectation:
    sig_hash: bytes
    signer_pk: int


Expectation = (
    DirectExpectation
    | CommitmentExpectation
    | SignerSetExpectation
    | StatementExpectation
    | SignatureHashExpectation
)

_EXPECTED_FOR_TYPE = {
    "direct": DirectExpectation,
    "pedersen-claim": CommitmentExpectation,
    "schnorr-claim": SignerSetExpectation,
    "gnark-claim": StatementExpectation,
    "signature-proof": SignatureHashExpectation,
}


@dataclass(frozen=True)
class ClaimRequirement:
    claim_type: str
    expected: Expectation
    access: AccessControl

    def __post_init__(self) -> None:
        if self.claim_type not in CLAIM_TYPES:
            raise UnsupportedClaimError(f"unknown claim type {self.claim_type!r}")
        want = _EXPECTED_FOR_TYPE[self.claim_type]
        if not isinstance(self.expected, want):
            raise ValidationError(
                f"claim type {self.claim_type!r} requires {want.__name__}"
            )


# -- submitted evidence ----------------------------------------------------


@dataclass(frozen=True)
class DirectSig:
    sig: SchnorrSignature
    pk: int


@dataclass(frozen=True)
class PedersenOpening:
    m: int
    r: int


@dataclass(frozen=True)
class Aggregate:
    agg: AggregateSignature


@dataclass(frozen=True)
class KnowledgeProof:
    proof: DlogProof


@dataclass(frozen=True)
class SignatureReveal:
    sig: SchnorrSignature


ClaimEvidence = DirectSig | PedersenOpening | Aggregate | KnowledgeProof | SignatureReveal

_EVIDENCE_FOR_TYPE = {
    "direct": DirectSig,
    "pedersen-claim": PedersenOpening,
    "schnorr-claim": Aggregate,
    "gnark-claim": KnowledgeProof,
    "signature-proof": SignatureReveal,
}


@dataclass(frozen=True)
class CryptoContext:
    """Chain-wide verification context shared by all claim checks."""

    group: Group
    pedersen: PedersenParams
    chain_id: str


def check_access(req: ClaimRequirement, caller: bytes) -> bool:
    if req.access.visibility == "public":
        return True
    return caller in req.access.allowed


def verify_claim(
    ctx: CryptoContext,
    req: ClaimRequirement,
    ev: ClaimEvidence,
    claim_msg: bytes,
) -> bool:
    """Dispatch evidence to the check its claim type demands.

    Raises on structural problems (wrong variant, unknown type);
    returns False only for evidence that simply fails its check.
    """
    if req.claim_type not in CLAIM_TYPES:
        raise UnsupportedClaimError(f"unknown claim type {req.claim_type!r}")
    want = _EVIDENCE_FOR_TYPE[req.claim_type]
    if not isinstance(ev, want):
        raise EvidenceTypeError(
            f"claim type {req.claim_type!r} takes {want.__name__}, got {type(ev).__name__}"
        )
    group = ctx.group

    if isinstance(ev, DirectSig):
        expected = req.expected
        assert isinstance(expected, DirectExpectation)
        if derive_address(group, ev.pk) != expected.beneficiary:
            return False
        return schnorr_verify(group, ev.pk, claim_msg, ev.sig)

    if isinstance(ev, PedersenOpening):
        expected = req.expected
        assert isinstance(expected, CommitmentExpectation)
        return pedersen_verify_opening(ctx.pedersen, expected.commitment, ev.m, ev.r)

    if isinstance(ev, Aggregate):
        expected = req.expected
        assert isinstance(expected, SignerSetExpectation)
        if sorted(ev.agg.signer_pks) != sorted(expected.signer_pks):
            return False
        return schnorr_aggregate_verify(group, ev.agg, claim_msg)

    if isinstance(ev, KnowledgeProof):
        expected = req.expected
        assert isinstance(expected, StatementExpectation)
        return dlog_verify(group, expected.statement_pk, claim_msg, ev.proof)

    expected = req.expected
    assert isinstance(expected, SignatureHashExpectation)
    if signature_hash(group, ev.sig) != expected.sig_hash:
        return False
    return schnorr_verify(group, expected.signer_pk, SIGNATURE_PROOF_CHALLENGE, ev.sig)


# -- canonical (de)serialization, used by packets and the CLI --------------


def access_to_dict(access: AccessControl) -> dict:
    out: dict = {"visibility": access.visibility}
    if access.visibility == "private":
        out["allowed"] = [to_hex(a) for a in access.allowed]
    return out


def access_from_dict(data: dict) -> AccessControl:
    return AccessControl(
        visibility=data["visibility"],
        allowed=tuple(from_hex(a) for a in data.get("allowed", [])),
    )


def requirement_to_dict(group: Group, req: ClaimRequirement) -> dict:
    expected = req.expected
    out: dict = {"claim_type": req.claim_type, "access": access_to_dict(req.access)}
    if isinstance(expected, DirectExpectation):
        out["beneficiary"] = to_hex(expected.beneficiary)
    elif isinstance(expected, CommitmentExpectation):
        out["commitment"] = to_hex(group.encode_element(expected.commitment.point))
    elif isinstance(expected, SignerSetExpectation):
        out["signer_pks"] = [to_hex(group.encode_element(pk)) for pk in expected.signer_pks]
    elif isinstance(expected, StatementExpectation):
        out["statement_pk"] = to_hex(group.encode_element(expected.statement_pk))
    else:
        out["sig_hash"] = to_hex(expected.sig_hash)
        out["signer_pk"] = to_hex(group.encode_element(expected.signer_pk))
    return out


def requirement_from_dict(group: Group, data: dict) -> ClaimRequirement:
    ctype = data["claim_type"]
    access = access_from_dict(data["access"])
    expected: Expectation
    if ctype == "direct":
        expected = DirectExpectation(beneficiary=from_hex(data["beneficiary"]))
    elif ctype == "pedersen-claim":
        expected = CommitmentExpectation(
            commitment=Commitment(point=group.decode_element(from_hex(data["commitment"])))
        )
    elif ctype == "schnorr-claim":
        expected = SignerSetExpectation(
            signer_pks=tuple(group.decode_element(from_hex(pk)) for pk in data["signer_pks"])
        )
    elif ctype == "gnark-claim":
        expected = StatementExpectation(
            statement_pk=group.decode_element(from_hex(data["statement_pk"]))
        )
    elif ctype == "signature-proof":
        expected = SignatureHashExpectation(
            sig_hash=from_hex(data["sig_hash"]),
            signer_pk=group.decode_element(from_hex(data["signer_pk"])),
        )
    else:
        raise UnsupportedClaimError(f"unknown claim type {ctype!r}")
    return ClaimRequirement(claim_type=ctype, expected=expected, access=access)


def evidence_to_dict(group: Group, ev: ClaimEvidence) -> dict:
    if isinstance(ev, DirectSig):
        return {
            "kind": "direct",
            "nonce_point": to_hex(group.encode_element(ev.sig.nonce_point)),
            "response": to_hex(group.encode_scalar(ev.sig.response)),
            "pk": to_hex(group.encode_element(ev.pk)),
        }
    if isinstance(ev, PedersenOpening):
        return {
            "kind": "pedersen-opening",
            "m": to_hex(group.encode_scalar(ev.m)),
            "r": to_hex(group.encode_scalar(ev.r)),
        }
    if isinstance(ev, Aggregate):
        return {
            "kind": "aggregate",
            "nonce_points": [to_hex(group.encode_element(r)) for r in ev.agg.nonce_points],
            "response_sum": to_hex(group.encode_scalar(ev.agg.response_sum)),
            "signer_pks": [to_hex(group.encode_element(pk)) for pk in ev.agg.signer_pks],
        }
    if isinstance(ev, KnowledgeProof):
        return {
            "kind": "knowledge-proof",
            "commitment": to_hex(group.encode_element(ev.proof.commitment)),
            "response": to_hex(group.encode_scalar(ev.proof.response)),
        }
    return {
        "kind": "signature-reveal",
        "nonce_point": to_hex(group.encode_element(ev.sig.nonce_point)),
        "response": to_hex(group.encode_scalar(ev.sig.response)),
    }


def evidence_from_dict(group: Group, data: dict) -> ClaimEvidence:
    kind = data.get("kind")
    if kind == "direct":
        return DirectSig(
            sig=SchnorrSignature(
                nonce_point=group.decode_element(from_hex(data["nonce_point"])),
                response=group.decode_scalar(from_hex(data["response"])),
            ),
            pk=group.decode_element(from_hex(data["pk"])),
        )
    if kind == "pedersen-opening":
        return PedersenOpening(
            m=group.decode_scalar(from_hex(data["m"])),
            r=group.decode_scalar(from_hex(data["r"])),
        )
    if kind == "aggregate":
        return Aggregate(
            agg=AggregateSignature(
                nonce_points=tuple(
                    group.decode_element(from_hex(r)) for r in data["nonce_points"]
                ),
                response_sum=group.decode_scalar(from_hex(data["response_sum"])),
                signer_pks=tuple(
                    group.decode_element(from_hex(pk)) for pk in data["signer_pks"]
                ),
            )
        )
    if kind == "knowledge-proof":
        return KnowledgeProof(
            proof=DlogProof(
                commitment=group.decode_element(from_hex(data["commitment"])),
                response=group.decode_scalar(from_hex(data["response"])),
            )
        )
    if kind == "signature-reveal":
        return SignatureReveal(
            sig=SchnorrSignature(
                nonce_point=group.decode_element(from_hex(data["nonce_point"])),
                response=group.decode_scalar(from_hex(data["response"])),
            )
        )
    raise EvidenceTypeError(f"unknown evidence kind {kind!r}")
