"""Prime-order group arithmetic over multiplicative subgroups of Z_p*.

Two instantiations ship with the package:

* ``PRODUCTION_GROUP`` — a 2048-bit modulus with a 256-bit prime-order
  subgroup. The parameters were derived by stretching the domain-tagged
  SHA-256 streams ``willchain/group/q/v1`` and ``willchain/group/p/v1``
  (nothing-up-my-sleeve); ``test_group.py`` re-checks primality and
  subgroup membership of the pinned constants.
* ``TOY_GROUP`` — the order-101 subgroup of Z_607*, small enough that
  every verification equation can be checked against brute-force
  repeated multiplication.

Scalars and group elements are plain Python ints; all arithmetic goes
through a :class:`Group` instance so the two instantiations share one
code path. Elements encode as fixed-width little-endian bytes (the
group's canonical form), scalars likewise.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from ..errors import EncodingError, ValidationError

try:
    from gmpy2 import powmod as _powmod
except ImportError:  # pragma: no cover - gmpy2 is a hard dep, pow works too
    _powmod = pow


def tagged_hash(tag: bytes, *parts: bytes) -> bytes:
    """SHA-256 over length-prefixed parts; unambiguous for any split."""
    h = hashlib.sha256()
    for part in (tag, *parts):
        h.update(len(part).to_bytes(4, "little"))
        h.update(part)
    return h.digest()


@dataclass(frozen=True)
class Group:
    """Multiplicative subgroup of Z_p* with prime order q, generated by g."""

    name: str
    p: int
    q: int
    g: int

    @property
    def element_bytes(self) -> int:
        return (self.p.bit_length() + 7) // 8

    @property
    def scalar_bytes(self) -> int:
        return (self.q.bit_length() + 7) // 8

    @property
    def identity(self) -> int:
        return 1

    @property
    def cofactor(self) -> int:
        return (self.p - 1) // self.q

    # -- scalar arithmetic (mod q) --------------------------------------

    def reduce_scalar(self, value: int) -> int:
        return value % self.q

    def scalar_add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def scalar_mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def scalar_neg(self, a: int) -> int:
        return (-a) % self.q

    def scalar_inv(self, a: int) -> int:
        if a % self.q == 0:
            raise ValidationError("cannot invert the zero scalar")
        return pow(a, self.q - 2, self.q)

    # -- element arithmetic (mod p) --------------------------------------

    def exp(self, base: int, exponent: int) -> int:
        return int(_powmod(base, exponent % self.q, self.p))

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def inv(self, a: int) -> int:
        return pow(a, self.p - 2, self.p)

    def is_element(self, x: int) -> bool:
        """Membership in the prime-order subgroup (x^q == 1, 0 < x < p)."""
        return 0 < x < self.p and int(_powmod(x, self.q, self.p)) == 1

    # -- canonical encodings ----------------------------------------------

    def encode_element(self, x: int) -> bytes:
        return x.to_bytes(self.element_bytes, "little")

    def decode_element(self, data: bytes) -> int:
        if len(data) != self.element_bytes:
            raise EncodingError(
                f"element must be {self.element_bytes} bytes, got {len(data)}"
            )
        x = int.from_bytes(data, "little")
        if not self.is_element(x):
            raise EncodingError("bytes do not encode a subgroup element")
        return x

    def encode_scalar(self, v: int) -> bytes:
        return (v % self.q).to_bytes(self.scalar_bytes, "little")

    def decode_scalar(self, data: bytes) -> int:
        if len(data) != self.scalar_bytes:
            raise EncodingError(
                f"scalar must be {self.scalar_bytes} bytes, got {len(data)}"
            )
        v = int.from_bytes(data, "little")
        if v >= self.q:
            raise EncodingError("scalar out of range")
        return v

    # -- hashing into the group -------------------------------------------

    def hash_to_scalar(self, tag: bytes, *parts: bytes) -> int:
        """Uniform-enough scalar: 512 hash bits reduced mod q."""
        wide = tagged_hash(tag, *parts) + tagged_hash(tag + b"/2", *parts)
        return int.from_bytes(wide, "little") % self.q

    def hash_to_group(self, tag: bytes) -> int:
        """Map a domain tag to a subgroup element of unknown discrete log.

        Candidate residues are cofactor-exponentiated into the subgroup,
        so the result carries no known relation to g.
        """
        counter = 0
        while True:
            digest = tagged_hash(tag, counter.to_bytes(4, "little"))
            wide = int.from_bytes(digest * (self.element_bytes // 32 + 1), "little")
            candidate = int(_powmod(wide % self.p, self.cofactor, self.p))
            if candidate != 1:
                return candidate
            counter += 1


class NonceStream:
    """Deterministic stream of scalars and bytes keyed by seed material.

    Used for signature nonces, proof nonces, and KEM ephemeral keys:
    every draw is a hash of the seed parts plus a monotone counter, so a
    fixed seed replays the exact same stream.
    """

    def __init__(self, group: Group, *seed_parts: bytes) -> None:
        self._group = group
        self._seed = tagged_hash(b"willchain/nonce/v1", *seed_parts)
        self._counter = 0

    def _next_block(self) -> bytes:
        block = tagged_hash(self._seed, self._counter.to_bytes(8, "little"))
        self._counter += 1
        return block

    def next_scalar(self) -> int:
        """Nonzero scalar in [1, q-1] by rejection."""
        while True:
            wide = self._next_block() + self._next_block()
            v = int.from_bytes(wide, "little") % self._group.q
            if v != 0:
                return v

    def next_bytes(self, n: int) -> bytes:
        out = b""
        while len(out) < n:
            out += self._next_block()
        return out[:n]


@dataclass(frozen=True)
class KeyPair:
    """Secret scalar and its public element pk = g^sk."""

    sk: int
    pk: int


def keypair_from_scalar(group: Group, sk: int) -> KeyPair:
    sk = group.reduce_scalar(sk)
    if sk == 0:
        raise ValidationError("secret key must be nonzero")
    return KeyPair(sk=sk, pk=group.exp(group.g, sk))


def keypair_from_seed(group: Group, seed: bytes) -> KeyPair:
    """Deterministic test key; rejection-samples a nonzero scalar."""
    stream = NonceStream(group, b"keygen", seed)
    return keypair_from_scalar(group, stream.next_scalar())


# Pinned production parameters; see module docstring for provenance.
PRODUCTION_GROUP = Group(
    name="modp-2048-256",
    p=int(
        "d740224a5e0c5c418ee6dea7a33c10a7aa3e6350abb4813e8b06a685018b1bac"
        "0a5cf2961d15d634dca177b2002ebd45b96e94620188f41701abd6e17ea14719"
        "ed154005a9f4c297f88c168aba3eb4384ea66a31558b0fd519b42a2fec24b9fa"
        "46ce0e67ac784f0f6cd2e95a3c7f67145a4446e57170a41c9a6a5cc1bbdb71c5"
        "8c374ef5bdbdc08b6cad63781ab95cbf02b70f2a8a6ff9facdcd2b1974223894"
        "67fffad74ce3232e7954fe00f617a553580c06eb8b955d2aa73ed024b48711ce"
        "12de277446b5179a9bec398a6b80149179da856e4f6e5a1e72621b4f036cc9d4"
        "8b2dc749d3014d78f269e60bfe77b9915d6a96e6aba00ecc4431605c2624102b",
        16,
    ),
    q=int("ead4ddd1ff93a87cd585287e14c1a43301272433a565a7373914ed2b17c7d6c7", 16),
    g=int(
        "5d173244ad6ce29aff5f6d8802d5a5c0ff29ebcab89a68072f1e192f82835cee"
        "fc22702c8aac686d858ed462732794a4bf58f0671fec1999bc4e5a4c655e9d53"
        "4cd62bcf46bfd192c912b90ec60b4ae69defe2baebc808724465d734c85be064"
        "bb7321ff9e768f58b6a3356953f9847a889abaef753edbf95cb3d8781197e445"
        "50857ea4b6ff0667332e27ea62367b87acb2f6910b8224ca74b6144d11cc79c6"
        "adf371cb94ebadf31dbcbbc80297027c19ea8771e667072a37f5172b747cda1d"
        "5d7546fc531a8505048d4befdc8e47c14d053badcc296aabb9e19b49f4de981a"
        "bd3fa6fe375347c10ebaf384c7b8ebdeef100fbb88b11b5721333a7c207f6b48",
        16,
    ),
)

# Order-101 subgroup of Z_607*; small enough for exhaustive oracles.
TOY_GROUP = Group(name="toy-607-101", p=607, q=101, g=64)

GROUPS = {g.name: g for g in (PRODUCTION_GROUP, TOY_GROUP)}
