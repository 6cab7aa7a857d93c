"""Embedding vectors: math, deterministic stub embedder, binary file
format, and the external-process embedder protocol.

Vectors are stored raw (float32, exactly as the embedder produced them)
and normalized only in memory. The canonical score downstream is cosine
similarity of unit vectors, which orders candidates identically to
ascending Euclidean distance: d(a,b)^2 = 2 - 2*cos(a,b) on unit vectors.

File format SSQLEMB1, little-endian throughout:

    bytes 0-7    magic ASCII "SSQLEMB1"
    bytes 8-11   uint32 dimension D
    bytes 12-19  uint64 record count N
    then N records of [uint64 image_id][D x float32]

Sidecar protocol: the engine spawns the configured argv, writes the query
text plus a single newline to stdin and closes it, then reads a uint32 D'
followed by D' float32 values from stdout. The process must exit 0 and D'
must equal the store's dimension.
"""

from __future__ import annotations

import math
import re
import struct
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    BadMagicError,
    DimensionMismatchError,
    DuplicateIdError,
    EmptyTextError,
    NotNormalizedError,
    SidecarExitError,
    SidecarProtocolError,
    SidecarTimeoutError,
    ZeroVectorError,
)

DEFAULT_DIM = 512

MAGIC = b"SSQLEMB1"
_HEADER = struct.Struct("<8sIQ")
_RECORD_ID = struct.Struct("<Q")

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_XORSHIFT_MULT = 2685821657736338717

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 1:
            raise ValueError("embedding vectors must be one-dimensional")
        if arr.size < 2:
            raise ValueError("embedding dimension must be at least 2")
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingVector):
            return NotImplemented
        return (
            self.normalized == other.normalized
            and self.values.dtype == other.values.dtype
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class EmbeddingRecord:
    image_id: int
    vector: EmbeddingVector = field(compare=False)


def _check_dims(a: EmbeddingVector, b: EmbeddingVector) -> None:
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")


def normalize(v: EmbeddingVector) -> EmbeddingVector:
    """Scale to unit Euclidean length (computed in float64)."""
    x = v.values.astype(np.float64)
    norm = float(np.sqrt((x * x).sum()))
    if norm < 1e-12:
        raise ZeroVectorError("cannot normalize a zero vector")
    return EmbeddingVector(values=x / norm, normalized=True)


def l2_distance(a: EmbeddingVector, b: EmbeddingVector) -> float:
    _check_dims(a, b)
    diff = a.values.astype(np.float64) - b.values.astype(np.float64)
    return float(np.sqrt((diff * diff).sum()))


def similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity of two unit vectors, clipped into [-1, 1]."""
    if not (a.normalized and b.normalized):
        raise NotNormalizedError("similarity requires normalized vectors")
    _check_dims(a, b)
    dot = float((a.values.astype(np.float64) * b.values.astype(np.float64)).sum())
    return min(1.0, max(-1.0, dot))


# --- deterministic stub embedder ------------------------------------------


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _xorshift_floats(seed: int, count: int) -> np.ndarray:
    s = seed & _MASK64
    out = np.empty(count, dtype=np.float64)
    for i in range(count):
        s ^= s >> 12
        s = (s ^ (s << 25)) & _MASK64
        s ^= s >> 27
        u = (s * _XORSHIFT_MULT) & _MASK64
        out[i] = ((u >> 11) / 2**53) * 2.0 - 1.0
    return out


def tokenize_text(text: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def stub_embed(text: str, dim: int = DEFAULT_DIM) -> EmbeddingVector:
    """Deterministic hash-based embedder: one unit vector per token, summed
    exactly per component, so any permutation of the same token multiset
    yields the bit-identical raw vector."""
    tokens = tokenize_text(text)
    if not tokens:
        raise EmptyTextError("no tokens in text")
    if dim < 2:
        raise ValueError("dimension must be at least 2")
    token_vectors = []
    for token in tokens:
        seed = _fnv1a64(token.encode("utf-8")) | 1
        raw = _xorshift_floats(seed, dim)
        norm = float(np.sqrt((raw * raw).sum()))
        if norm < 1e-12:
            raise ZeroVectorError(f"token {token!r} hashed to a zero vector")
        token_vectors.append(raw / norm)
    summed = np.array(
        [math.fsum(vec[i] for vec in token_vectors) for i in range(dim)],
        dtype=np.float64,
    )
    return EmbeddingVector(values=summed.astype(np.float32), normalized=False)


# --- external-process embedder ---------------------------------------------


def external_embed(
    command: Sequence[str],
    text: str,
    dim: int,
    timeout: float = 60.0,
) -> EmbeddingVector:
    """Obtain an embedding from a sidecar process speaking the byte protocol."""
    if not command:
        raise ValueError("sidecar command must be a non-empty argv list")
    try:
        proc = subprocess.run(
            list(command),
            input=text.encode("utf-8") + b"\n",
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise SidecarTimeoutError(f"sidecar did not answer within {timeout}s") from exc
    if proc.returncode != 0:
        detail = proc.stderr.decode("utf-8", "replace").strip()
        raise SidecarExitError(
            f"sidecar exited with status {proc.returncode}: {detail[-500:]}"
        )
    payload = proc.stdout
    if len(payload) < 4:
        raise SidecarProtocolError("sidecar emitted no dimension header")
    (reported_dim,) = struct.unpack_from("<I", payload, 0)
    body = payload[4:]
    if len(body) != reported_dim * 4:
        raise SidecarProtocolError(
            f"sidecar declared {reported_dim} floats but sent {len(body)} bytes"
        )
    if reported_dim != dim:
        raise SidecarProtocolError(
            f"sidecar dimension {reported_dim} does not match store dimension {dim}"
        )
    values = np.frombuffer(body, dtype="<f4").copy()
    if not np.isfinite(values).all():
        raise SidecarProtocolError("sidecar emitted non-finite values")
    return EmbeddingVector(values=values, normalized=False)


# --- SSQLEMB1 file format ----------------------------------------------------


def write_embeddings(
    file: str | Path, dim: int, records: Sequence[EmbeddingRecord]
) -> None:
    if dim < 2:
        raise ValueError("dimension must be at least 2")
    seen: set[int] = set()
    chunks = [_HEADER.pack(MAGIC, dim, len(records))]
    for record in records:
        if record.image_id in seen:
            raise DuplicateIdError(f"duplicate image id {record.image_id}")
        seen.add(record.image_id)
        if record.image_id < 0 or record.image_id > _MASK64:
            raise ValueError(f"image id {record.image_id} does not fit in uint64")
        vec = record.vector.values
        if vec.size != dim:
            raise DimensionMismatchError(
                f"record {record.image_id} has dimension {vec.size}, expected {dim}"
            )
        if vec.dtype != np.float32:
            raise ValueError("stored vectors must be float32")
        chunks.append(_RECORD_ID.pack(record.image_id))
        chunks.append(np.ascontiguousarray(vec, dtype="<f4").tobytes())
    Path(file).write_bytes(b"".join(chunks))


def read_embeddings(file: str | Path) -> tuple[int, list[EmbeddingRecord]]:
    data = Path(file).read_bytes()
    if len(data) < _HEADER.size:
        raise BadMagicError("file too short for a header")
    magic, dim, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if dim < 2:
        raise BadMagicError(f"header dimension {dim} is invalid")
    record_size = _RECORD_ID.size + dim * 4
    expected = _HEADER.size + count * record_size
    if len(data) != expected:
        raise DimensionMismatchError(
            f"expected {expected} bytes for {count} records of dimension {dim}, "
            f"file has {len(data)}"
        )
    records: list[EmbeddingRecord] = []
    seen: set[int] = set()
    offset = _HEADER.size
    for _ in range(count):
        (image_id,) = _RECORD_ID.unpack_from(data, offset)
        offset += _RECORD_ID.size
        values = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += dim * 4
        if image_id in seen:
            raise DuplicateIdError(f"duplicate image id {image_id}")
        seen.add(image_id)
        records.append(
            EmbeddingRecord(image_id=int(image_id), vector=EmbeddingVector(values))
        )
    return dim, records
