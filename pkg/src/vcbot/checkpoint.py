"""Versioned binary container for trained tensors.

Layout (all integers little-endian):

    bytes 0..7    magic b"VCBOTCK1"
    bytes 8..11   u32 header length H
    bytes 12..    H bytes of UTF-8 JSON header
    remainder     concatenated float64 little-endian tensor payloads, in
                  header index order

The header records the artifact kind ("pvrnn" or "observer"), the format
version, the full config that produced it plus its hash, sequence labels,
and an index of (name, shape) for every tensor.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CheckpointError

MAGIC = b"VCBOTCK1"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    kind: str
    config: dict
    config_hash: str
    labels: list[str]
    tensors: dict[str, np.ndarray]
    extra: dict


def save_checkpoint(
    path: str | Path,
    kind: str,
    config: dict,
    config_hash: str,
    tensors: dict[str, np.ndarray],
    labels: list[str] | None = None,
    extra: dict | None = None,
) -> None:
    index = [
        {"name": name, "shape": list(np.asarray(arr).shape)}
        for name, arr in tensors.items()
    ]
    header = {
        "kind": kind,
        "format_version": FORMAT_VERSION,
        "config": config,
        "config_hash": config_hash,
        "labels": labels or [],
        "tensors": index,
        "extra": extra or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name, arr in tensors.items():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> Checkpoint:
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 4:
        raise CheckpointError(f"{path}: truncated before header")
    if raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: bad magic (not a checkpoint file)")
    (header_len,) = struct.unpack("<I", raw[len(MAGIC) : len(MAGIC) + 4])
    start = len(MAGIC) + 4
    if len(raw) < start + header_len:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[start : start + header_len].decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: format version {header.get('format_version')} "
            f"unsupported (expected {FORMAT_VERSION})"
        )
    offset = start + header_len
    tensors: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if len(raw) < offset + nbytes:
            raise CheckpointError(f"{path}: truncated payload at tensor '{entry['name']}'")
        flat = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
        tensors[entry["name"]] = flat.reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")
    return Checkpoint(
        kind=header["kind"],
        config=header["config"],
        config_hash=header["config_hash"],
        labels=list(header.get("labels", [])),
        tensors=tensors,
        extra=header.get("extra", {}),
    )
