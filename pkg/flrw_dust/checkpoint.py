"""Binary checkpoints of the evolved state.

Layout, all little-endian::

    8s   magic  b"FLRWDUST"
    u32  format version
    32s  SHA-256 of the run configuration
    u64  step index
    f64  t
    u32  n (points per axis)
    u32  number of fields
    f64  data[nfields, n, n, n], C order

Round-tripping is bitwise, so a resumed run reproduces an uninterrupted one.
"""

from __future__ import annotations

import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .error import CheckpointMismatch
from .grid import Grid3
from .state import NFIELDS, FieldState

logger = logging.getLogger(__name__)

__all__ = ["MAGIC", "VERSION", "Checkpoint", "write_checkpoint", "read_checkpoint"]

MAGIC = b"FLRWDUST"
VERSION = 1
_HEADER = struct.Struct("<8sI32sQdII")


@dataclass(frozen=True, eq=False)
class Checkpoint:
    state: FieldState
    step: int
    config_hash: bytes


def write_checkpoint(path: str | os.PathLike, state: FieldState, step: int, config_hash: bytes) -> Path:
    """Write atomically: the file appears under ``path`` only once complete."""
    if len(config_hash) != 32:
        raise ValueError("config hash must be 32 raw bytes")
    path = Path(path)
    header = _HEADER.pack(MAGIC, VERSION, config_hash, step, state.t, state.grid.n, state.data.shape[0])
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.data, dtype="<f8").tobytes())
    os.replace(tmp, path)
    logger.debug("checkpoint step=%d t=%.6g -> %s", step, state.t, path)
    return path


def read_checkpoint(path: str | os.PathLike, expected_hash: bytes | None = None) -> Checkpoint:
    """Read a checkpoint, rejecting bad magic, unknown versions and config mismatches."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CheckpointMismatch(f"{path}: truncated header")
    magic, version, digest, step, t, n, nfields = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointMismatch(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointMismatch(f"{path}: unsupported version {version}")
    if expected_hash is not None and digest != expected_hash:
        raise CheckpointMismatch(f"{path}: written for config {digest.hex()}, expected {expected_hash.hex()}")
    if nfields != NFIELDS:
        raise CheckpointMismatch(f"{path}: {nfields} fields, expected {NFIELDS}")
    count = nfields * n**3
    body = raw[_HEADER.size :]
    if len(body) != 8 * count:
        raise CheckpointMismatch(f"{path}: payload is {len(body)} bytes, expected {8 * count}")
    data = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(nfields, n, n, n)
    return Checkpoint(FieldState(t, data, Grid3(n)), int(step), digest)
