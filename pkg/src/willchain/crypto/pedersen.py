"""Pedersen commitments: hiding, binding, and additively homomorphic.

A commitment to message m with randomness r is g^m * h^r. The second
generator h is hash-derived (``willchain/pedersen/h/v1``) so nobody
knows its discrete log relative to g, which is what makes the scheme
binding without a trusted dealer.
"""

from __future__ import annotations

from dataclasses import dataclass

from .group import Group

H_DOMAIN_TAG = b"willchain/pedersen/h/v1"


@dataclass(frozen=True)
class PedersenParams:
    group: Group
    g: int
    h: int


@dataclass(frozen=True)
class Commitment:
    point: int


def default_params(group: Group) -> PedersenParams:
    return PedersenParams(group=group, g=group.g, h=group.hash_to_group(H_DOMAIN_TAG))


def pedersen_commit(params: PedersenParams, m: int, r: int) -> Commitment:
    grp = params.group
    point = grp.mul(grp.exp(params.g, m), grp.exp(params.h, r))
    return Commitment(point=point)


def pedersen_verify_opening(params: PedersenParams, c: Commitment, m: int, r: int) -> bool:
    return pedersen_commit(params, m, r).point == c.point


def add_commitments(params: PedersenParams, a: Commitment, b: Commitment) -> Commitment:
    """Homomorphic combine: commit(m1,r1)*commit(m2,r2) = commit(m1+m2, r1+r2)."""
    return Commitment(point=params.group.mul(a.point, b.point))
