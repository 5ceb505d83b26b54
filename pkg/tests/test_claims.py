"""Claim evidence dispatch, access control, and serialization."""

import pytest

from willchain.claims import (
    AccessControl,
    Aggregate,
    CLAIM_TYPES,
    ClaimRequirement,
    CommitmentExpectation,
    CryptoContext,
    DirectExpectation,
    DirectSig,
    KnowledgeProof,
    PedersenOpening,
    SIGNATURE_PROOF_CHALLENGE,
    SignatureHashExpectation,
    SignatureReveal,
    SignerSetExpectation,
    StatementExpectation,
    check_access,
    claim_message,
    derive_address,
    evidence_from_dict,
    evidence_to_dict,
    requirement_from_dict,
    requirement_to_dict,
    signature_hash,
    verify_claim,
)
from willchain.crypto import (
    PopRegistry,
    dlog_prove,
    keypair_from_seed,
    pedersen_commit,
    prove_possession,
    schnorr_aggregate,
    schnorr_sign,
)
from willchain.errors import (
    EvidenceTypeError,
    UnsupportedClaimError,
    ValidationError,
)


@pytest.fixture(scope="module")
def ctx(prod, prod_params):
    return CryptoContext(group=prod, pedersen=prod_params, chain_id="will-1")


@pytest.fixture(scope="module")
def actors(prod):
    return {name: keypair_from_seed(prod, name.encode()) for name in
            ("address1", "address2", "address3", "address4")}


def make_access(*allowed):
    if not allowed:
        return AccessControl(visibility="public")
    return AccessControl(visibility="private", allowed=tuple(allowed))


def msg_for(ctx, claimant):
    return claim_message("did:will:" + "0" * 64, "did:will:" + "0" * 64 + "/1", claimant, ctx.chain_id)


def test_dispatch_totality_every_tag_has_one_path(ctx, actors):
    """Enumerating the closed tag set: each type verifies its own evidence
    and raises EvidenceTypeError for every other variant."""
    kp = actors["address1"]
    addr = derive_address(ctx.group, kp.pk)
    registry = PopRegistry(ctx.group)
    registry.register(kp.pk, prove_possession(ctx.group, kp))
    msg = msg_for(ctx, addr)
    presigned = schnorr_sign(ctx.group, kp, SIGNATURE_PROOF_CHALLENGE)

    requirements = {
        "direct": ClaimRequirement("direct", DirectExpectation(addr), make_access(addr)),
        "pedersen-claim": ClaimRequirement(
            "pedersen-claim",
            CommitmentExpectation(pedersen_commit(ctx.pedersen, 3, 4)),
            make_access(addr),
        ),
        "schnorr-claim": ClaimRequirement(
            "schnorr-claim", SignerSetExpectation((kp.pk,)), make_access(addr)
        ),
        "gnark-claim": ClaimRequirement(
            "gnark-claim", StatementExpectation(kp.pk), make_access(addr)
        ),
        "signature-proof": ClaimRequirement(
            "signature-proof",
            SignatureHashExpectation(signature_hash(ctx.group, presigned), kp.pk),
            make_access(addr),
        ),
    }
    evidences = {
        "direct": DirectSig(sig=schnorr_sign(ctx.group, kp, msg), pk=kp.pk),
        "pedersen-claim": PedersenOpening(m=3, r=4),
        "schnorr-claim": Aggregate(
            agg=schnorr_aggregate(
                ctx.group, [(schnorr_sign(ctx.group, kp, msg), kp.pk)], msg, registry
            )
        ),
        "gnark-claim": KnowledgeProof(proof=dlog_prove(ctx.group, kp, msg)),
        "signature-proof": SignatureReveal(sig=presigned),
    }
    assert set(requirements) == set(CLAIM_TYPES)
    for ctype in CLAIM_TYPES:
        assert verify_claim(ctx, requirements[ctype], evidences[ctype], msg), ctype
        for other, ev in evidences.items():
            if other != ctype:
                with pytest.raises(EvidenceTypeError):
                    verify_claim(ctx, requirements[ctype], ev, msg)


def test_direct_claim_address_must_match(ctx, actors):
    kp, other = actors["address1"], actors["address2"]
    addr = derive_address(ctx.group, kp.pk)
    req = ClaimRequirement("direct", DirectExpectation(addr), make_access(addr))
    msg = msg_for(ctx, addr)
    assert verify_claim(ctx, req, DirectSig(schnorr_sign(ctx.group, kp, msg), kp.pk), msg)
    # valid signature from the wrong key: address comparison fails
    assert not verify_claim(
        ctx, req, DirectSig(schnorr_sign(ctx.group, other, msg), other.pk), msg
    )


def test_pedersen_claim_semantics(ctx, actors):
    addr = derive_address(ctx.group, actors["address1"].pk)
    commitment = pedersen_commit(ctx.pedersen, 31337, 99)
    req = ClaimRequirement("pedersen-claim", CommitmentExpectation(commitment), make_access(addr))
    msg = msg_for(ctx, addr)
    assert verify_claim(ctx, req, PedersenOpening(31337, 99), msg)
    assert not verify_claim(ctx, req, PedersenOpening(31337, 98), msg)


def test_aggregate_claim_over_paper_signer_set(ctx, actors):
    """The three-address access list of the schnorr-claim example: true
    when all members sign, false for the wrong signer set."""
    group = ctx.group
    members = [actors[f"address{i}"] for i in (1, 2, 3)]
    registry = PopRegistry(group)
    for kp in members + [actors["address4"]]:
        registry.register(kp.pk, prove_possession(group, kp))
    addrs = tuple(derive_address(group, kp.pk) for kp in members)
    req = ClaimRequirement(
        "schnorr-claim",
        SignerSetExpectation(tuple(kp.pk for kp in members)),
        make_access(*addrs),
    )
    msg = msg_for(ctx, addrs[0])
    sigs = [(schnorr_sign(group, kp, msg), kp.pk) for kp in members]
    assert verify_claim(ctx, req, Aggregate(schnorr_aggregate(group, sigs, msg, registry)), msg)
    wrong_set = [
        (schnorr_sign(group, kp, msg), kp.pk)
        for kp in (members[0], members[1], actors["address4"])
    ]
    agg = schnorr_aggregate(group, wrong_set, msg, registry)
    assert not verify_claim(ctx, req, Aggregate(agg), msg)


def test_evidence_is_bound_to_one_claim_message(ctx, actors):
    """Direct, aggregate, and knowledge evidence for message M fails for
    any other message."""
    kp = actors["address1"]
    group = ctx.group
    addr = derive_address(group, kp.pk)
    registry = PopRegistry(group)
    registry.register(kp.pk, prove_possession(group, kp))
    msg = msg_for(ctx, addr)
    other_msg = claim_message("did:will:" + "1" * 64, "x/0", addr, ctx.chain_id)

    direct_req = ClaimRequirement("direct", DirectExpectation(addr), make_access(addr))
    direct = DirectSig(schnorr_sign(group, kp, msg), kp.pk)
    assert verify_claim(ctx, direct_req, direct, msg)
    assert not verify_claim(ctx, direct_req, direct, other_msg)

    agg_req = ClaimRequirement("schnorr-claim", SignerSetExpectation((kp.pk,)), make_access(addr))
    agg = Aggregate(
        schnorr_aggregate(group, [(schnorr_sign(group, kp, msg), kp.pk)], msg, registry)
    )
    assert verify_claim(ctx, agg_req, agg, msg)
    assert not verify_claim(ctx, agg_req, agg, other_msg)

    dlog_req = ClaimRequirement("gnark-claim", StatementExpectation(kp.pk), make_access(addr))
    proof = KnowledgeProof(dlog_prove(group, kp, msg))
    assert verify_claim(ctx, dlog_req, proof, msg)
    assert not verify_claim(ctx, dlog_req, proof, other_msg)


def test_signature_proof_reveal(ctx, actors):
    kp = actors["address3"]
    group = ctx.group
    addr = derive_address(group, kp.pk)
    presigned = schnorr_sign(group, kp, SIGNATURE_PROOF_CHALLENGE)
    req = ClaimRequirement(
        "signature-proof",
        SignatureHashExpectation(signature_hash(group, presigned), kp.pk),
        make_access(addr),
    )
    msg = msg_for(ctx, addr)
    assert verify_claim(ctx, req, SignatureReveal(presigned), msg)
    # a different signature hashes elsewhere
    other = schnorr_sign(group, kp, b"something else entirely")
    assert not verify_claim(ctx, req, SignatureReveal(other), msg)


def test_requirement_variant_mismatch_rejected():
    with pytest.raises(ValidationError):
        ClaimRequirement("direct", StatementExpectation(1), AccessControl("public"))


def test_unknown_claim_type_rejected():
    with pytest.raises(UnsupportedClaimError):
        ClaimRequirement("quantum-claim", DirectExpectation(b"\x00" * 20), AccessControl("public"))


def test_check_access_paper_cases(ctx, actors):
    """private ["address1"]: only address1; public: anyone."""
    a1 = derive_address(ctx.group, actors["address1"].pk)
    a2 = derive_address(ctx.group, actors["address2"].pk)
    private_req = ClaimRequirement("direct", DirectExpectation(a1), make_access(a1))
    assert check_access(private_req, a1)
    assert not check_access(private_req, a2)
    public_req = ClaimRequirement("direct", DirectExpectation(a1), make_access())
    assert check_access(public_req, a1)
    assert check_access(public_req, a2)


def test_private_access_requires_allow_list():
    with pytest.raises(ValidationError):
        AccessControl(visibility="private", allowed=())


def test_address_derivation_is_twenty_bytes_and_stable(prod):
    kp = keypair_from_seed(prod, b"addr")
    addr = derive_address(prod, kp.pk)
    assert len(addr) == 20
    assert derive_address(prod, kp.pk) == addr


def test_evidence_serialization_round_trips(ctx, actors):
    kp = actors["address1"]
    group = ctx.group
    registry = PopRegistry(group)
    registry.register(kp.pk, prove_possession(group, kp))
    msg = b"round trip"
    samples = [
        DirectSig(schnorr_sign(group, kp, msg), kp.pk),
        PedersenOpening(5, 6),
        Aggregate(schnorr_aggregate(group, [(schnorr_sign(group, kp, msg), kp.pk)], msg, registry)),
        KnowledgeProof(dlog_prove(group, kp, msg)),
        SignatureReveal(schnorr_sign(group, kp, SIGNATURE_PROOF_CHALLENGE)),
    ]
    for ev in samples:
        assert evidence_from_dict(group, evidence_to_dict(group, ev)) == ev
    with pytest.raises(EvidenceTypeError):
        evidence_from_dict(group, {"kind": "unknown"})


def test_requirement_serialization_round_trips(ctx, actors):
    group = ctx.group
    kp = actors["address2"]
    addr = derive_address(group, kp.pk)
    presigned = schnorr_sign(group, kp, SIGNATURE_PROOF_CHALLENGE)
    samples = [
        ClaimRequirement("direct", DirectExpectation(addr), make_access(addr)),
        ClaimRequirement(
            "pedersen-claim",
            CommitmentExpectation(pedersen_commit(ctx.pedersen, 1, 2)),
            make_access(addr),
        ),
        ClaimRequirement("schnorr-claim", SignerSetExpectation((kp.pk,)), make_access(addr)),
        ClaimRequirement("gnark-claim", StatementExpectation(kp.pk), make_access()),
        ClaimRequirement(
            "signature-proof",
            SignatureHashExpectation(signature_hash(group, presigned), kp.pk),
            make_access(addr),
        ),
    ]
    for req in samples:
        assert requirement_from_dict(group, requirement_to_dict(group, req)) == req
