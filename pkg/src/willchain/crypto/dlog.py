"""Fiat-Shamir proofs of discrete-log knowledge.

Non-interactive sigma protocol for the statement "I know sk with
P = g^sk". The proof is (R, z) with R = g^w and z = w + c*sk where the
challenge c binds R, P, and a caller-supplied context string. These
proofs stand in for circuit-based proving: same statement, same
dispatch surface, no trusted setup.
"""

from __future__ import annotations

from dataclasses import dataclass

from .group import Group, KeyPair, NonceStream

CHALLENGE_TAG = b"willchain/dlog/challenge/v1"


@dataclass(frozen=True)
class DlogProof:
    commitment: int  # R = g^w
    response: int  # z = w + c*sk mod q


def _challenge(group: Group, commitment: int, statement: int, context: bytes) -> int:
    return group.hash_to_scalar(
        CHALLENGE_TAG,
        group.encode_element(commitment),
        group.encode_element(statement),
        context,
    )


def dlog_prove(
    group: Group,
    kp: KeyPair,
    context: bytes,
    nonce_source: NonceStream | None = None,
) -> DlogProof:
    if nonce_source is None:
        nonce_source = NonceStream(group, b"dlog", group.encode_scalar(kp.sk), context)
    w = nonce_source.next_scalar()
    commitment = group.exp(group.g, w)
    c = _challenge(group, commitment, kp.pk, context)
    z = group.scalar_add(w, group.scalar_mul(c, kp.sk))
    return DlogProof(commitment=commitment, response=z)


def dlog_verify(group: Group, statement: int, context: bytes, proof: DlogProof) -> bool:
    if not (group.is_element(proof.commitment) and group.is_element(statement)):
        return False
    if not 0 <= proof.response < group.q:
        return False
    c = _challenge(group, proof.commitment, statement, context)
    lhs = group.exp(group.g, proof.response)
    rhs = group.mul(proof.commitment, group.exp(statement, c))
    return lhs == rhs
