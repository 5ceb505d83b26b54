"""Schnorr signatures and aggregation, with toy-group exhaustive oracles."""

import random

import pytest

from willchain.crypto import (
    AggregateSignature,
    NonceStream,
    PopRegistry,
    SchnorrSignature,
    decode_signature,
    encode_signature,
    keypair_from_scalar,
    keypair_from_seed,
    prove_possession,
    schnorr_aggregate,
    schnorr_aggregate_verify,
    schnorr_sign,
    schnorr_verify,
)
from willchain.crypto.schnorr import _challenge
from willchain.errors import AggregationError, EncodingError

from conftest import slow_exp, subgroup_elements


def _registry_for(group, keypairs):
    registry = PopRegistry(group)
    for kp in keypairs:
        registry.register(kp.pk, prove_possession(group, kp))
    return registry


def test_sign_verify_round_trip(prod, prod_signer):
    sig = schnorr_sign(prod, prod_signer, b"hello")
    assert schnorr_verify(prod, prod_signer.pk, b"hello", sig)


def test_message_binding(prod, prod_signer):
    sig = schnorr_sign(prod, prod_signer, b"hello")
    assert not schnorr_verify(prod, prod_signer.pk, b"other", sig)


def test_tampered_response_rejected(prod, prod_signer):
    sig = schnorr_sign(prod, prod_signer, b"hello")
    bad = SchnorrSignature(sig.nonce_point, (sig.response + 1) % prod.q)
    assert not schnorr_verify(prod, prod_signer.pk, b"hello", bad)


def test_deterministic_signatures_for_fixed_seed(prod, prod_signer):
    s1 = schnorr_sign(prod, prod_signer, b"msg", NonceStream(prod, b"fixed"))
    s2 = schnorr_sign(prod, prod_signer, b"msg", NonceStream(prod, b"fixed"))
    assert s1 == s2
    # default derivation is also repeatable
    assert schnorr_sign(prod, prod_signer, b"msg") == schnorr_sign(prod, prod_signer, b"msg")


def test_signature_encoding_round_trips(prod, prod_signer):
    sig = schnorr_sign(prod, prod_signer, b"abc")
    assert decode_signature(prod, encode_signature(prod, sig)) == sig
    with pytest.raises(EncodingError):
        decode_signature(prod, b"\x00" * 5)


def test_toy_exhaustive_verification_equation_oracle(toy, toy_signer):
    """verify() agrees with the repeated-multiplication oracle over every
    (R, s) pair of the toy group."""
    msg = b"toy message"
    elements = subgroup_elements(toy)
    for nonce_point in elements:
        c = _challenge(toy, nonce_point, toy_signer.pk, msg)
        rhs = nonce_point * slow_exp(toy, toy_signer.pk, c) % toy.p
        for s in range(toy.q):
            expected = slow_exp(toy, toy.g, s) == rhs
            got = schnorr_verify(
                toy, toy_signer.pk, msg, SchnorrSignature(nonce_point, s)
            )
            assert got == expected


def test_aggregate_of_one_equals_the_signature(prod, prod_signer):
    registry = _registry_for(prod, [prod_signer])
    sig = schnorr_sign(prod, prod_signer, b"claim")
    agg = schnorr_aggregate(prod, [(sig, prod_signer.pk)], b"claim", registry)
    assert agg.nonce_points == (sig.nonce_point,)
    assert agg.response_sum == sig.response
    assert schnorr_aggregate_verify(prod, agg, b"claim")


def test_three_signer_aggregate_verifies_iff_members_do(prod):
    signers = [keypair_from_seed(prod, f"s{i}".encode()) for i in range(3)]
    registry = _registry_for(prod, signers)
    msg = b"claim"
    sigs = [(schnorr_sign(prod, kp, msg), kp.pk) for kp in signers]
    assert all(schnorr_verify(prod, pk, msg, sig) for sig, pk in sigs)
    agg = schnorr_aggregate(prod, sigs, msg, registry)
    assert schnorr_aggregate_verify(prod, agg, msg)


def test_forged_member_rejected_at_aggregation(prod):
    signers = [keypair_from_seed(prod, f"f{i}".encode()) for i in range(3)]
    registry = _registry_for(prod, signers)
    msg = b"claim"
    sigs = [(schnorr_sign(prod, kp, msg), kp.pk) for kp in signers]
    forged = SchnorrSignature(sigs[1][0].nonce_point, (sigs[1][0].response + 1) % prod.q)
    sigs[1] = (forged, signers[1].pk)
    with pytest.raises(AggregationError):
        schnorr_aggregate(prod, sigs, msg, registry)


def test_unregistered_key_rejected_at_aggregation(prod):
    signer = keypair_from_seed(prod, b"unregistered")
    registry = PopRegistry(prod)
    sig = schnorr_sign(prod, signer, b"m")
    with pytest.raises(AggregationError):
        schnorr_aggregate(prod, [(sig, signer.pk)], b"m", registry)


def test_pop_registration_rejects_proofs_for_foreign_keys(prod):
    holder = keypair_from_seed(prod, b"holder")
    other = keypair_from_seed(prod, b"other")
    registry = PopRegistry(prod)
    with pytest.raises(AggregationError):
        registry.register(other.pk, prove_possession(prod, holder))


def test_reordered_aggregate_still_verifies(prod):
    signers = [keypair_from_seed(prod, f"r{i}".encode()) for i in range(3)]
    registry = _registry_for(prod, signers)
    msg = b"claim"
    sigs = [(schnorr_sign(prod, kp, msg), kp.pk) for kp in signers]
    agg = schnorr_aggregate(prod, list(reversed(sigs)), msg, registry)
    assert schnorr_aggregate_verify(prod, agg, msg)


def test_length_mismatch_is_an_encoding_error(prod, prod_signer):
    registry = _registry_for(prod, [prod_signer])
    sig = schnorr_sign(prod, prod_signer, b"m")
    agg = schnorr_aggregate(prod, [(sig, prod_signer.pk)], b"m", registry)
    from dataclasses import replace

    broken = replace(agg, signer_pks=agg.signer_pks + (prod_signer.pk,))
    with pytest.raises(EncodingError):
        schnorr_aggregate_verify(prod, broken, b"m")


def test_aggregate_completeness_up_to_sixteen_signers(prod):
    msg = b"many signers"
    signers = [keypair_from_seed(prod, f"c{i}".encode()) for i in range(16)]
    registry = _registry_for(prod, signers)
    for n in range(1, 17):
        sigs = [(schnorr_sign(prod, kp, msg), kp.pk) for kp in signers[:n]]
        agg = schnorr_aggregate(prod, sigs, msg, registry)
        assert schnorr_aggregate_verify(prod, agg, msg), f"n={n}"


def test_toy_exhaustive_aggregate_soundness(toy):
    """No (R2, s2) other than the one valid member signature can complete
    an accepting 2-of-2 aggregate."""
    msg = b"agg soundness"
    kp1 = keypair_from_scalar(toy, 17)
    kp2 = keypair_from_scalar(toy, 29)
    sig1 = schnorr_sign(toy, kp1, msg)
    assert schnorr_verify(toy, kp1.pk, msg, sig1)
    accepted = []
    for nonce_point in subgroup_elements(toy):
        for s2 in range(toy.q):
            # build the aggregate directly, bypassing the member checks
            agg = AggregateSignature(
                nonce_points=(sig1.nonce_point, nonce_point),
                response_sum=(sig1.response + s2) % toy.q,
                signer_pks=(kp1.pk, kp2.pk),
            )
            if schnorr_aggregate_verify(toy, agg, msg):
                accepted.append(SchnorrSignature(nonce_point, s2))
    # every accepting completion is itself a valid member signature:
    # exactly one response per nonce point, never an invalid one
    assert all(schnorr_verify(toy, kp2.pk, msg, c) for c in accepted)
    assert len(accepted) == toy.q
