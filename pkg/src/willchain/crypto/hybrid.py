"""Two-layer hybrid encryption for key revelation.

Each layer is a KEM by group exponentiation: an ephemeral scalar e
yields the encapsulation epk = g^e and the shared point pk^e, from
which a hash-derived keystream encrypts the body and a hash tag
authenticates it. The inner layer targets the beneficiary's key, the
outer a temporary key held back until release conditions are met:

    c1 = seal(pk_beneficiary, data)       c2 = seal(pk_temporary, c1)

Removing the outer layer with the temporary secret publishes c1, which
only the beneficiary can open. Any flipped bit in body or tag fails
authentication.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import DecryptionError, EncodingError
from .group import Group, NonceStream, tagged_hash

KEYSTREAM_TAG = b"willchain/hybrid/keystream/v1"
MAC_TAG = b"willchain/hybrid/tag/v1"
TAG_BYTES = 32


@dataclass(frozen=True)
class LayeredCiphertext:
    outer_kem: int  # ephemeral public element of the outer layer
    outer_body: bytes
    tag: bytes


def _keystream(shared: bytes, kem: bytes, length: int) -> bytes:
    out = b""
    counter = 0
    while len(out) < length:
        out += tagged_hash(KEYSTREAM_TAG, shared, kem, counter.to_bytes(8, "little"))
        counter += 1
    return out[:length]


def _mac(shared: bytes, kem: bytes, body: bytes) -> bytes:
    return tagged_hash(MAC_TAG, shared, kem, body)


def seal(group: Group, pk: int, plaintext: bytes, rng: NonceStream) -> tuple[int, bytes, bytes]:
    """One KEM layer: returns (ephemeral element, body, tag)."""
    e = rng.next_scalar()
    kem_point = group.exp(group.g, e)
    shared = group.encode_element(group.exp(pk, e))
    kem = group.encode_element(kem_point)
    body = bytes(a ^ b for a, b in zip(plaintext, _keystream(shared, kem, len(plaintext))))
    return kem_point, body, _mac(shared, kem, body)


def unseal(group: Group, sk: int, kem_point: int, body: bytes, tag: bytes) -> bytes:
    shared = group.encode_element(group.exp(kem_point, sk))
    kem = group.encode_element(kem_point)
    if _mac(shared, kem, body) != tag:
        raise DecryptionError("authentication tag mismatch")
    return bytes(a ^ b for a, b in zip(body, _keystream(shared, kem, len(body))))


def _pack_layer(group: Group, kem_point: int, body: bytes, tag: bytes) -> bytes:
    return group.encode_element(kem_point) + tag + body


def _unpack_layer(group: Group, data: bytes) -> tuple[int, bytes, bytes]:
    eb = group.element_bytes
    if len(data) < eb + TAG_BYTES:
        raise EncodingError("ciphertext too short for KEM header and tag")
    kem_point = group.decode_element(data[:eb])
    tag = data[eb : eb + TAG_BYTES]
    return kem_point, data[eb + TAG_BYTES :], tag


def layered_encrypt(
    group: Group,
    data: bytes,
    k_b: int,
    k_t: int,
    rng: NonceStream | None = None,
) -> LayeredCiphertext:
    """Encrypt to the beneficiary key k_b, then wrap under the temporary key k_t."""
    if rng is None:
        rng = NonceStream(
            group,
            b"hybrid",
            group.encode_element(k_b),
            group.encode_element(k_t),
            tagged_hash(b"willchain/hybrid/data/v1", data),
        )
    inner_kem, inner_body, inner_tag = seal(group, k_b, data, rng)
    c1 = _pack_layer(group, inner_kem, inner_body, inner_tag)
    outer_kem, outer_body, outer_tag = seal(group, k_t, c1, rng)
    return LayeredCiphertext(outer_kem=outer_kem, outer_body=outer_body, tag=outer_tag)


def layered_decrypt_outer(group: Group, c: LayeredCiphertext, sk_t: int) -> bytes:
    """Strip the temporary-key layer; returns the inner ciphertext c1."""
    return unseal(group, sk_t, c.outer_kem, c.outer_body, c.tag)


def layered_decrypt_inner(group: Group, c1: bytes, sk_b: int) -> bytes:
    kem_point, body, tag = _unpack_layer(group, c1)
    return unseal(group, sk_b, kem_point, body, tag)


def encode_ciphertext(group: Group, c: LayeredCiphertext) -> bytes:
    return _pack_layer(group, c.outer_kem, c.outer_body, c.tag)


def decode_ciphertext(group: Group, data: bytes) -> LayeredCiphertext:
    kem_point, body, tag = _unpack_layer(group, data)
    return LayeredCiphertext(outer_kem=kem_point, outer_body=body, tag=tag)
