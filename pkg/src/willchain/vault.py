"""Chunked on-chain file storage with an index map and encrypted deeds.

Large files split into fixed-size chunks spread over storage cells;
a ChunkMap records, per chunk position, which cell and index holds it
plus the chunk hash, so reconstruction can detect missing or tampered
cells. Deeds additionally pass through two-layer encryption before
storage, and the outer layer is only stripped (publishing the inner
ciphertext for the beneficiary) once the owning will has expired and
the component executed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .codec import from_hex, to_hex
from .crypto.group import NonceStream, tagged_hash
from .crypto.hybrid import (
    LayeredCiphertext,
    decode_ciphertext,
    encode_ciphertext,
    layered_decrypt_outer,
    layered_encrypt,
)
from .errors import (
    ChunkMissingError,
    CorruptionError,
    NotFoundError,
    PrematureRevealError,
    ValidationError,
)

if TYPE_CHECKING:  # pragma: no cover
    from .chain import ChainState

DEFAULT_CHUNK_SIZE = 1024
MAX_CHUNK_SIZE = 4096
CELL_CAPACITY = 64

FILE_ID_TAG = b"willchain/file-id/v1"
CHUNK_TAG = b"willchain/chunk/v1"


def chunk(file: bytes, chunk_size: int) -> list[bytes]:
    """Split into chunks of chunk_size; the last may be shorter."""
    if chunk_size < 1:
        raise ValidationError("chunk_size must be at least 1")
    return [file[i : i + chunk_size] for i in range(0, len(file), chunk_size)]


def file_id(data: bytes) -> bytes:
    return tagged_hash(FILE_ID_TAG, data)


def chunk_hash(data: bytes) -> bytes:
    return tagged_hash(CHUNK_TAG, data)


@dataclass(frozen=True)
class ChunkMap:
    """Index from chunk position to (storage cell, index, hash)."""

    file_id: bytes
    entries: tuple[tuple[str, int, bytes], ...]
    total_size: int

    def to_dict(self) -> dict:
        return {
            "file_id": to_hex(self.file_id),
            "entries": [[cell, idx, to_hex(h)] for cell, idx, h in self.entries],
            "total_size": self.total_size,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChunkMap":
        return cls(
            file_id=from_hex(data["file_id"]),
            entries=tuple((c, i, from_hex(h)) for c, i, h in data["entries"]),
            total_size=data["total_size"],
        )


@dataclass
class StorageCell:
    """One size-capped storage contract holding immutable chunk slots."""

    contract_id: str
    cells: dict[int, bytes] = field(default_factory=dict)

    def write(self, index: int, data: bytes) -> None:
        if index in self.cells:
            raise ValidationError(f"cell {index} of {self.contract_id} already written")
        if len(data) > MAX_CHUNK_SIZE:
            raise ValidationError(f"chunk exceeds {MAX_CHUNK_SIZE} bytes")
        self.cells[index] = data

    @property
    def full(self) -> bool:
        return len(self.cells) >= CELL_CAPACITY


class FileVault:
    """All storage cells plus stored chunk maps and deed registrations."""

    def __init__(self) -> None:
        self.cells: dict[str, StorageCell] = {}
        self.maps: dict[str, ChunkMap] = {}  # keyed by file id hex
        self.deeds: dict[str, dict] = {}  # "<did>/<component>" -> deed record

    def _allocate(self) -> StorageCell:
        for name in sorted(self.cells):
            if not self.cells[name].full:
                return self.cells[name]
        name = f"sc-{len(self.cells)}"
        cell = StorageCell(contract_id=name)
        self.cells[name] = cell
        return cell

    def store_file(self, data: bytes, chunk_size: int = DEFAULT_CHUNK_SIZE) -> ChunkMap:
        if chunk_size > MAX_CHUNK_SIZE:
            raise ValidationError(f"chunk_size above cell limit {MAX_CHUNK_SIZE}")
        entries = []
        for piece in chunk(data, chunk_size):
            cell = self._allocate()
            index = len(cell.cells)
            cell.write(index, piece)
            entries.append((cell.contract_id, index, chunk_hash(piece)))
        cmap = ChunkMap(file_id=file_id(data), entries=tuple(entries), total_size=len(data))
        self.maps[cmap.file_id.hex()] = cmap
        return cmap

    def retrieve_file(self, cmap: ChunkMap) -> bytes:
        parts = []
        for cell_id, index, expected in cmap.entries:
            cell = self.cells.get(cell_id)
            if cell is None or index not in cell.cells:
                raise ChunkMissingError(f"chunk at {cell_id}[{index}] is missing")
            piece = cell.cells[index]
            if chunk_hash(piece) != expected:
                raise CorruptionError(f"chunk at {cell_id}[{index}] fails its hash")
            parts.append(piece)
        data = b"".join(parts)
        if file_id(data) != cmap.file_id:
            raise CorruptionError("reassembled file does not match its file id")
        return data

    def to_dict(self) -> dict:
        return {
            "cells": {
                name: {str(i): to_hex(v) for i, v in cell.cells.items()}
                for name, cell in self.cells.items()
            },
            "maps": {fid: cmap.to_dict() for fid, cmap in self.maps.items()},
            "deeds": dict(self.deeds),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FileVault":
        vault = cls()
        for name, cells in data["cells"].items():
            vault.cells[name] = StorageCell(
                contract_id=name,
                cells={int(i): from_hex(v) for i, v in cells.items()},
            )
        vault.maps = {fid: ChunkMap.from_dict(m) for fid, m in data["maps"].items()}
        vault.deeds = dict(data["deeds"])
        return vault


def store_deed(
    state: "ChainState",
    deed: bytes,
    k_b: int,
    k_t: int,
    did: str,
    component_id: str,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> tuple[ChunkMap, LayeredCiphertext]:
    """Encrypt a deed under beneficiary + temporary keys and store it.

    The full layered ciphertext is what lands in the vault; the header
    (same ciphertext object) is registered against the will component
    for the later key reveal.
    """
    group = state.ctx.group
    rng = NonceStream(
        group,
        b"deed",
        did.encode(),
        component_id.encode(),
        tagged_hash(b"willchain/deed/data/v1", deed),
    )
    ciphertext = layered_encrypt(group, deed, k_b, k_t, rng)
    encrypted = encode_ciphertext(group, ciphertext)
    cmap = state.vault.store_file(encrypted, chunk_size)
    state.vault.deeds[component_id] = {
        "did": did,
        "component": component_id,
        "file_id": to_hex(cmap.file_id),
    }
    state.log_event("deed-stored", did=did, component=component_id, file_id=to_hex(cmap.file_id))
    return cmap, ciphertext


def reveal_key(state: "ChainState", did: str, component_id: str, sk_t: int) -> dict:
    """Strip the outer layer of a stored deed and publish the inner
    ciphertext in the event log for the beneficiary to decrypt."""
    record = state.vault.deeds.get(component_id)
    if record is None or record["did"] != did:
        raise NotFoundError(f"no deed registered for {component_id}")
    will = state.wills.get(did)
    if will is None:
        raise NotFoundError(f"unknown will {did}")
    component = will.component(component_id)
    if will.status == "active" or component.state != "executed":
        raise PrematureRevealError(
            f"{component_id} not revealable: will {will.status}, component {component.state}"
        )
    cmap = state.vault.maps[record["file_id"]]
    ciphertext = decode_ciphertext(state.ctx.group, state.vault.retrieve_file(cmap))
    inner = layered_decrypt_outer(state.ctx.group, ciphertext, sk_t)
    event = {
        "did": did,
        "component": component_id,
        "inner_ciphertext": to_hex(inner),
    }
    state.log_event("key-revealed", **event)
    return event
