"""Interchain packet primitives: paths, commitments, encapsulation.

A path names the channel between the will module and one destination
chain; exactly one endpoint must be the will-module port. Packets carry
a phase of the init-ack-confirm flow and commit to their own contents,
so a relayer (or destination) can recompute the commitment and refuse
anything tampered or fabricated.
"""

from __future__ import annotations

from dataclasses import dataclass

from .codec import canonical_bytes, from_hex, from_json, to_hex
from .crypto.group import tagged_hash
from .errors import NotEncapsulableError, ValidationError
from .will import ComponentOutput, is_interchain, output_from_dict, output_to_dict

WILL_PORT = "will"
PACKET_PHASES = ("init", "ack", "confirm")
COMMITMENT_TAG = b"willchain/packet/commitment/v1"


@dataclass(frozen=True)
class Path:
    source_chain: str
    source_port: str
    dest_chain: str
    dest_port: str
    channel_id: str

    def __post_init__(self) -> None:
        ends = (self.source_port, self.dest_port)
        if (ends[0] == WILL_PORT) == (ends[1] == WILL_PORT):
            raise ValidationError("exactly one path endpoint must be the will module")

    @property
    def key(self) -> str:
        return "/".join(
            (self.source_chain, self.source_port, self.dest_chain, self.dest_port, self.channel_id)
        )

    def reversed(self) -> "Path":
        return Path(
            source_chain=self.dest_chain,
            source_port=self.dest_port,
            dest_chain=self.source_chain,
            dest_port=self.source_port,
            channel_id=self.channel_id,
        )

    def to_dict(self) -> dict:
        return {
            "source_chain": self.source_chain,
            "source_port": self.source_port,
            "dest_chain": self.dest_chain,
            "dest_port": self.dest_port,
            "channel_id": self.channel_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Path":
        return cls(**data)


def packet_commitment(path: Path, sequence: int, payload: bytes) -> bytes:
    return tagged_hash(
        COMMITMENT_TAG, path.key.encode(), sequence.to_bytes(8, "little"), payload
    )


@dataclass(frozen=True)
class Packet:
    path: Path
    sequence: int
    phase: str
    payload: bytes
    commitment: bytes

    def __post_init__(self) -> None:
        if self.phase not in PACKET_PHASES:
            raise ValidationError(f"unknown packet phase {self.phase!r}")

    def verify_commitment(self) -> bool:
        return packet_commitment(self.path, self.sequence, self.payload) == self.commitment

    def to_dict(self) -> dict:
        return {
            "path": self.path.to_dict(),
            "sequence": self.sequence,
            "phase": self.phase,
            "payload": to_hex(self.payload),
            "commitment": to_hex(self.commitment),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Packet":
        return cls(
            path=Path.from_dict(data["path"]),
            sequence=data["sequence"],
            phase=data["phase"],
            payload=from_hex(data["payload"]),
            commitment=from_hex(data["commitment"]),
        )


def make_packet(path: Path, sequence: int, phase: str, payload: bytes) -> Packet:
    return Packet(
        path=path,
        sequence=sequence,
        phase=phase,
        payload=payload,
        commitment=packet_commitment(path, sequence, payload),
    )


@dataclass(frozen=True)
class PacketProof:
    """Simulated light-client proof: source height plus commitment hash."""

    height: int
    commitment: bytes


def encapsulate(logic: ComponentOutput) -> bytes:
    """Canonical byte form of an interchain output for packet payloads."""
    if not is_interchain(logic):
        raise NotEncapsulableError(f"{type(logic).__name__} is not an interchain output")
    return canonical_bytes(output_to_dict(logic))


def decapsulate(payload: bytes) -> ComponentOutput:
    output = output_from_dict(from_json(payload))
    if not is_interchain(output):
        raise NotEncapsulableError("payload does not decode to an interchain output")
    return output
