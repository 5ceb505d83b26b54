"""Test-vector emission: deterministic hex key-value file."""

from __future__ import annotations

from ..codec import write_kv_vectors
from .dlog import dlog_prove
from .group import PRODUCTION_GROUP, NonceStream, keypair_from_seed
from .hybrid import encode_ciphertext, layered_encrypt
from .pedersen import default_params, pedersen_commit
from .schnorr import encode_signature, schnorr_sign


def emit_test_vectors(path: str) -> dict[str, bytes]:
    """Write canonical encodings of fixed-seed outputs for every primitive."""
    grp = PRODUCTION_GROUP
    params = default_params(grp)
    signer = keypair_from_seed(grp, b"vector-signer")
    beneficiary = keypair_from_seed(grp, b"vector-beneficiary")
    temporary = keypair_from_seed(grp, b"vector-temporary")
    msg = b"willchain test vector message"

    sig = schnorr_sign(grp, signer, msg)
    proof = dlog_prove(grp, signer, b"vector-context")
    ct = layered_encrypt(
        grp,
        b"vector plaintext",
        beneficiary.pk,
        temporary.pk,
        NonceStream(grp, b"vector-hybrid"),
    )

    vectors = {
        "group.p": grp.p.to_bytes(grp.element_bytes, "little"),
        "group.q": grp.q.to_bytes(grp.scalar_bytes, "little"),
        "group.g": grp.encode_element(grp.g),
        "pedersen.h": grp.encode_element(params.h),
        "pedersen.commit_5_7": grp.encode_element(pedersen_commit(params, 5, 7).point),
        "signer.pk": grp.encode_element(signer.pk),
        "schnorr.sig": encode_signature(grp, sig),
        "dlog.commitment": grp.encode_element(proof.commitment),
        "dlog.response": grp.encode_scalar(proof.response),
        "hybrid.ciphertext": encode_ciphertext(grp, ct),
    }
    write_kv_vectors(path, vectors)
    return vectors
