"""Canonical serialization helpers.

Everything that gets hashed, diffed, or round-tripped goes through one
canonical form: JSON with sorted keys, compact separators, and byte
strings rendered as lowercase hex. Two equal values always serialize to
identical bytes, which is what the state-hash and report-stability
checks rely on.
"""

from __future__ import annotations

import json
from typing import Any

from .errors import EncodingError


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def canonical_bytes(value: Any) -> bytes:
    return canonical_json(value).encode("utf-8")


def from_json(data: str | bytes) -> Any:
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise EncodingError(f"invalid JSON: {exc}") from exc


def to_hex(data: bytes) -> str:
    return data.hex()


def from_hex(text: str) -> bytes:
    try:
        return bytes.fromhex(text)
    except ValueError as exc:
        raise EncodingError(f"invalid hex string: {text!r}") from exc


def write_kv_vectors(path: str, vectors: dict[str, bytes]) -> None:
    """Write test vectors as `name = hex` lines, sorted by name."""
    lines = [f"{name} = {vectors[name].hex()}" for name in sorted(vectors)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_kv_vectors(path: str) -> dict[str, bytes]:
    out: dict[str, bytes] = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise EncodingError(f"malformed vector line: {line!r}")
            name, _, value = line.partition("=")
            out[name.strip()] = from_hex(value.strip())
    return out
