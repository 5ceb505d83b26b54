"""Cryptographic primitives: group arithmetic, commitments, signatures,
knowledge proofs, and layered hybrid encryption."""

from .dlog import DlogProof, dlog_prove, dlog_verify
from .group import (
    GROUPS,
    PRODUCTION_GROUP,
    TOY_GROUP,
    Group,
    KeyPair,
    NonceStream,
    keypair_from_scalar,
    keypair_from_seed,
    tagged_hash,
)
from .hybrid import (
    LayeredCiphertext,
    decode_ciphertext,
    encode_ciphertext,
    layered_decrypt_inner,
    layered_decrypt_outer,
    layered_encrypt,
)
from .pedersen import (
    Commitment,
    PedersenParams,
    add_commitments,
    default_params,
    pedersen_commit,
    pedersen_verify_opening,
)
from .schnorr import (
    AggregateSignature,
    PopRegistry,
    SchnorrSignature,
    decode_signature,
    encode_signature,
    prove_possession,
    schnorr_aggregate,
    schnorr_aggregate_verify,
    schnorr_sign,
    schnorr_verify,
)
from .vectors import emit_test_vectors

__all__ = [
    "GROUPS",
    "PRODUCTION_GROUP",
    "TOY_GROUP",
    "Group",
    "KeyPair",
    "NonceStream",
    "keypair_from_scalar",
    "keypair_from_seed",
    "tagged_hash",
    "DlogProof",
    "dlog_prove",
    "dlog_verify",
    "LayeredCiphertext",
    "decode_ciphertext",
    "encode_ciphertext",
    "layered_decrypt_inner",
    "layered_decrypt_outer",
    "layered_encrypt",
    "Commitment",
    "PedersenParams",
    "add_commitments",
    "default_params",
    "pedersen_commit",
    "pedersen_verify_opening",
    "AggregateSignature",
    "PopRegistry",
    "SchnorrSignature",
    "decode_signature",
    "encode_signature",
    "prove_possession",
    "schnorr_aggregate",
    "schnorr_aggregate_verify",
    "schnorr_sign",
    "schnorr_verify",
    "emit_test_vectors",
]
