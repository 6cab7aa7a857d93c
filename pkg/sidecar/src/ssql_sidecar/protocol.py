"""Byte-level output formats the engine consumes.

Stream reply (stdout of `embed-text`): uint32 little-endian dimension,
then that many float32 values, nothing else.

Embedding file (output of `embed-images`), little-endian SSQLEMB1:
8-byte magic "SSQLEMB1", uint32 dimension D, uint64 record count N, then
N records of [uint64 image_id][D x float32].
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

MAGIC = b"SSQLEMB1"
_HEADER = struct.Struct("<8sIQ")
_RECORD_ID = struct.Struct("<Q")


def as_float32(values: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype="<f4")
    if arr.ndim != 1:
        raise ValueError("embedding must be one-dimensional")
    if arr.size < 2:
        raise ValueError("embedding dimension must be at least 2")
    if not np.isfinite(arr).all():
        raise ValueError("embedding contains non-finite values")
    return arr


def write_vector_reply(stream: BinaryIO, values: np.ndarray) -> None:
    arr = as_float32(values)
    stream.write(struct.pack("<I", arr.size))
    stream.write(arr.tobytes())
    stream.flush()


def write_embedding_file(
    path: str | Path, dim: int, records: Sequence[tuple[int, np.ndarray]]
) -> None:
    seen: set[int] = set()
    chunks = [_HEADER.pack(MAGIC, dim, len(records))]
    for image_id, values in records:
        if image_id in seen:
            raise ValueError(f"duplicate image id {image_id}")
        seen.add(image_id)
        arr = as_float32(values)
        if arr.size != dim:
            raise ValueError(
                f"image {image_id}: dimension {arr.size} does not match {dim}"
            )
        chunks.append(_RECORD_ID.pack(image_id))
        chunks.append(arr.tobytes())
    Path(path).write_bytes(b"".join(chunks))
