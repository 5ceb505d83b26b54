"""Schnorr signatures and n-of-n aggregation.

A signature is (R, s) with R = g^k and s = k + c*sk for the challenge
c = H(R, pk, msg). Aggregation sums the responses and keeps the nonce
points: the aggregate verifies through the product equation

    g^(sum s_i) == prod(R_i * pk_i^{c_i})

with a *per-signer* challenge c_i = H(R_i, pk_i, msg). Plain
summed-challenge aggregation is open to rogue-key attacks, so signer
keys must additionally be registered with a proof of possession (a
self-signed discrete-log proof) before they are accepted into an
aggregate.

Nonces derive deterministically from H(sk, msg, counter): reruns with
identical inputs reproduce identical signatures, and a nonce is never
reused across distinct messages.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import AggregationError, EncodingError
from .dlog import DlogProof, dlog_prove, dlog_verify
from .group import Group, KeyPair, NonceStream

CHALLENGE_TAG = b"willchain/schnorr/challenge/v1"
POP_CONTEXT_TAG = b"willchain/schnorr/pop/v1"

MAX_AGGREGATE_SIGNERS = 16


@dataclass(frozen=True)
class SchnorrSignature:
    nonce_point: int  # R = g^k
    response: int  # s = k + c*sk mod q


@dataclass(frozen=True)
class AggregateSignature:
    nonce_points: tuple[int, ...]
    response_sum: int
    signer_pks: tuple[int, ...]


def _challenge(group: Group, nonce_point: int, pk: int, msg: bytes) -> int:
    return group.hash_to_scalar(
        CHALLENGE_TAG,
        group.encode_element(nonce_point),
        group.encode_element(pk),
        msg,
    )


def schnorr_sign(
    group: Group,
    kp: KeyPair,
    msg: bytes,
    nonce_source: NonceStream | None = None,
) -> SchnorrSignature:
    if nonce_source is None:
        nonce_source = NonceStream(group, b"schnorr", group.encode_scalar(kp.sk), msg)
    k = nonce_source.next_scalar()
    nonce_point = group.exp(group.g, k)
    c = _challenge(group, nonce_point, kp.pk, msg)
    s = group.scalar_add(k, group.scalar_mul(c, kp.sk))
    return SchnorrSignature(nonce_point=nonce_point, response=s)


def schnorr_verify(group: Group, pk: int, msg: bytes, sig: SchnorrSignature) -> bool:
    if not (group.is_element(pk) and group.is_element(sig.nonce_point)):
        return False
    if not 0 <= sig.response < group.q:
        return False
    c = _challenge(group, sig.nonce_point, pk, msg)
    lhs = group.exp(group.g, sig.response)
    rhs = group.mul(sig.nonce_point, group.exp(pk, c))
    return lhs == rhs


def encode_signature(group: Group, sig: SchnorrSignature) -> bytes:
    return group.encode_element(sig.nonce_point) + group.encode_scalar(sig.response)


def decode_signature(group: Group, data: bytes) -> SchnorrSignature:
    eb = group.element_bytes
    if len(data) != eb + group.scalar_bytes:
        raise EncodingError("signature has wrong length")
    return SchnorrSignature(
        nonce_point=group.decode_element(data[:eb]),
        response=group.decode_scalar(data[eb:]),
    )


class PopRegistry:
    """Public keys admitted to aggregation, gated by proof of possession.

    Registration verifies a discrete-log proof over the key itself, so
    an attacker cannot register pk' = pk_rogue / pk_victim style keys
    they hold no secret for.
    """

    def __init__(self, group: Group) -> None:
        self._group = group
        self._registered: set[int] = set()

    def register(self, pk: int, proof: DlogProof) -> None:
        context = POP_CONTEXT_TAG + self._group.encode_element(pk)
        if not dlog_verify(self._group, pk, context, proof):
            raise AggregationError("proof of possession failed verification")
        self._registered.add(pk)

    def is_registered(self, pk: int) -> bool:
        return pk in self._registered

    def registered_keys(self) -> list[int]:
        return sorted(self._registered)

    def restore_registered(self, pks: list[int]) -> None:
        """Reload keys whose PoPs were verified before a snapshot."""
        self._registered.update(pks)


def prove_possession(group: Group, kp: KeyPair) -> DlogProof:
    context = POP_CONTEXT_TAG + group.encode_element(kp.pk)
    return dlog_prove(group, kp, context)


def schnorr_aggregate(
    group: Group,
    sigs: list[tuple[SchnorrSignature, int]],
    msg: bytes,
    registry: PopRegistry,
) -> AggregateSignature:
    """Sum member signatures into one object, rejecting any invalid member."""
    if not sigs:
        raise AggregationError("cannot aggregate zero signatures")
    if len(sigs) > MAX_AGGREGATE_SIGNERS:
        raise AggregationError(f"at most {MAX_AGGREGATE_SIGNERS} signers supported")
    response_sum = 0
    nonce_points: list[int] = []
    signer_pks: list[int] = []
    for i, (sig, pk) in enumerate(sigs):
        if not registry.is_registered(pk):
            raise AggregationError(f"signer {i} has no registered proof of possession")
        if not schnorr_verify(group, pk, msg, sig):
            raise AggregationError(f"member signature {i} is invalid")
        response_sum = group.scalar_add(response_sum, sig.response)
        nonce_points.append(sig.nonce_point)
        signer_pks.append(pk)
    return AggregateSignature(
        nonce_points=tuple(nonce_points),
        response_sum=response_sum,
        signer_pks=tuple(signer_pks),
    )


def schnorr_aggregate_verify(group: Group, agg: AggregateSignature, msg: bytes) -> bool:
    if len(agg.nonce_points) != len(agg.signer_pks):
        raise EncodingError("nonce point and signer key lists differ in length")
    if not agg.nonce_points:
        raise EncodingError("empty aggregate")
    if not 0 <= agg.response_sum < group.q:
        return False
    rhs = group.identity
    for nonce_point, pk in zip(agg.nonce_points, agg.signer_pks):
        if not (group.is_element(nonce_point) and group.is_element(pk)):
            return False
        c = _challenge(group, nonce_point, pk, msg)
        rhs = group.mul(rhs, group.mul(nonce_point, group.exp(pk, c)))
    return group.exp(group.g, agg.response_sum) == rhs
