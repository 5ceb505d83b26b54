"""Layered hybrid encryption: round trips and authentication."""

import pytest

from willchain.crypto import (
    NonceStream,
    decode_ciphertext,
    encode_ciphertext,
    keypair_from_seed,
    layered_decrypt_inner,
    layered_decrypt_outer,
    layered_encrypt,
)
from willchain.crypto.hybrid import LayeredCiphertext, seal, unseal
from willchain.errors import DecryptionError


@pytest.fixture(scope="module")
def keys(prod):
    return keypair_from_seed(prod, b"beneficiary"), keypair_from_seed(prod, b"temporary")


def test_round_trip(prod, keys):
    beneficiary, temporary = keys
    plaintext = b"the quick brown fox jumps over the lazy dog"
    ct = layered_encrypt(prod, plaintext, beneficiary.pk, temporary.pk)
    inner = layered_decrypt_outer(prod, ct, temporary.sk)
    assert layered_decrypt_inner(prod, inner, beneficiary.sk) == plaintext


def test_wrong_temporary_secret_fails_authentication(prod, keys):
    beneficiary, temporary = keys
    wrong = keypair_from_seed(prod, b"impostor")
    ct = layered_encrypt(prod, b"secret", beneficiary.pk, temporary.pk)
    with pytest.raises(DecryptionError):
        layered_decrypt_outer(prod, ct, wrong.sk)


def test_wrong_inner_secret_fails_authentication(prod, keys):
    beneficiary, temporary = keys
    wrong = keypair_from_seed(prod, b"impostor")
    ct = layered_encrypt(prod, b"secret", beneficiary.pk, temporary.pk)
    inner = layered_decrypt_outer(prod, ct, temporary.sk)
    with pytest.raises(DecryptionError):
        layered_decrypt_inner(prod, inner, wrong.sk)


def test_two_stage_oracle_inner_ciphertext_decrypts_alone(prod, keys):
    """Oracle: sealing directly to the beneficiary must equal what the
    outer-layer removal exposes."""
    beneficiary, temporary = keys
    plaintext = b"deed contents"
    rng = NonceStream(prod, b"fixed-ephemeral")
    kem, body, tag = seal(prod, beneficiary.pk, plaintext, rng)
    assert unseal(prod, beneficiary.sk, kem, body, tag) == plaintext

    ct = layered_encrypt(prod, plaintext, beneficiary.pk, temporary.pk)
    c1 = layered_decrypt_outer(prod, ct, temporary.sk)
    assert layered_decrypt_inner(prod, c1, beneficiary.sk) == plaintext


def test_every_single_byte_flip_fails_authentication(prod, keys):
    beneficiary, temporary = keys
    ct = layered_encrypt(prod, b"short msg", beneficiary.pk, temporary.pk)
    for i in range(len(ct.outer_body)):
        body = bytearray(ct.outer_body)
        body[i] ^= 0x01
        tampered = LayeredCiphertext(ct.outer_kem, bytes(body), ct.tag)
        with pytest.raises(DecryptionError):
            layered_decrypt_outer(prod, tampered, temporary.sk)
    for i in range(len(ct.tag)):
        tag = bytearray(ct.tag)
        tag[i] ^= 0x01
        tampered = LayeredCiphertext(ct.outer_kem, ct.outer_body, bytes(tag))
        with pytest.raises(DecryptionError):
            layered_decrypt_outer(prod, tampered, temporary.sk)


def test_ciphertext_encoding_round_trips(prod, keys):
    beneficiary, temporary = keys
    ct = layered_encrypt(prod, b"encode me", beneficiary.pk, temporary.pk)
    assert decode_ciphertext(prod, encode_ciphertext(prod, ct)) == ct


def test_empty_plaintext_round_trips(prod, keys):
    beneficiary, temporary = keys
    ct = layered_encrypt(prod, b"", beneficiary.pk, temporary.pk)
    inner = layered_decrypt_outer(prod, ct, temporary.sk)
    assert layered_decrypt_inner(prod, inner, beneficiary.sk) == b""


def test_deterministic_for_fixed_rng(prod, keys):
    beneficiary, temporary = keys
    ct1 = layered_encrypt(prod, b"data", beneficiary.pk, temporary.pk)
    ct2 = layered_encrypt(prod, b"data", beneficiary.pk, temporary.pk)
    assert ct1 == ct2
