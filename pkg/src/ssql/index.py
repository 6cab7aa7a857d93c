"""Exact flat index over normalized image embeddings.

Every query scores every stored vector (no approximation), so results are
reproducible equalities, not approximations. Ordering is total: descending
score, then ascending image id. Scoring multiplies elementwise and reduces
with numpy's pairwise summation rather than a BLAS matmul, keeping scores
independent of threading and library build.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .embedding import EmbeddingRecord, EmbeddingVector, normalize, read_embeddings
from .errors import (
    AllMissingError,
    DimensionMismatchError,
    DuplicateIdError,
    NotNormalizedError,
    ZeroVectorError,
)


@dataclass(frozen=True)
class ScoredCandidate:
    image_id: int
    score: float


class FlatIndex:
    def __init__(self, dim: int, ids: np.ndarray, matrix: np.ndarray):
        self._dim = dim
        self._ids = ids
        self._matrix = matrix
        self._row_of = {int(i): row for row, i in enumerate(ids)}

    @classmethod
    def build(cls, records: Iterable[EmbeddingRecord], dim: int | None = None) -> "FlatIndex":
        records = list(records)
        if not records:
            if dim is None:
                raise ValueError("dimension is required for an empty index")
            return cls(dim, np.empty(0, dtype=np.int64), np.empty((0, dim), dtype=np.float64))
        if dim is None:
            dim = records[0].vector.dim
        ids = np.empty(len(records), dtype=np.int64)
        matrix = np.empty((len(records), dim), dtype=np.float64)
        seen: set[int] = set()
        for row, record in enumerate(records):
            if record.image_id in seen:
                raise DuplicateIdError(f"duplicate image id {record.image_id}")
            seen.add(record.image_id)
            if record.vector.dim != dim:
                raise DimensionMismatchError(
                    f"record {record.image_id} has dimension {record.vector.dim}, "
                    f"expected {dim}"
                )
            try:
                unit = record.vector if record.vector.normalized else normalize(record.vector)
            except ZeroVectorError as exc:
                raise ZeroVectorError(f"image id {record.image_id}: {exc}") from exc
            ids[row] = record.image_id
            matrix[row] = unit.values
        return cls(dim, ids, matrix)

    @classmethod
    def from_file(cls, path: str | Path) -> "FlatIndex":
        dim, records = read_embeddings(path)
        return cls.build(records, dim=dim)

    def __len__(self) -> int:
        return int(self._ids.size)

    def __contains__(self, image_id: int) -> bool:
        return image_id in self._row_of

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def ids(self) -> list[int]:
        return [int(i) for i in self._ids]

    def _query_vector(self, query: EmbeddingVector) -> np.ndarray:
        if not query.normalized:
            raise NotNormalizedError("query vector must be normalized")
        if query.dim != self._dim:
            raise DimensionMismatchError(
                f"query dimension {query.dim}, index dimension {self._dim}"
            )
        return query.values.astype(np.float64)

    def _rank(self, scores: np.ndarray, ids: np.ndarray) -> np.ndarray:
        # primary: score descending; secondary: image id ascending
        return np.lexsort((ids, -scores))

    def top_k(self, query: EmbeddingVector, k: int) -> list[ScoredCandidate]:
        if k < 1:
            raise ValueError("k must be at least 1")
        q = self._query_vector(query)
        if len(self) == 0:
            return []
        scores = np.clip((self._matrix * q).sum(axis=1), -1.0, 1.0)
        order = self._rank(scores, self._ids)[: min(k, len(self))]
        return [
            ScoredCandidate(image_id=int(self._ids[i]), score=float(scores[i]))
            for i in order
        ]

    def score_subset(
        self, query: EmbeddingVector, ids: Sequence[int]
    ) -> tuple[list[ScoredCandidate], list[int]]:
        """Score the subset of `ids` present in the index; ids it does not
        hold are returned separately, in first-occurrence order."""
        q = self._query_vector(query)
        requested = list(dict.fromkeys(int(i) for i in ids))
        present = [i for i in requested if i in self._row_of]
        missing = [i for i in requested if i not in self._row_of]
        if not present:
            raise AllMissingError("none of the requested ids are in the index")
        rows = np.array([self._row_of[i] for i in present], dtype=np.int64)
        subset_ids = self._ids[rows]
        scores = np.clip((self._matrix[rows] * q).sum(axis=1), -1.0, 1.0)
        order = self._rank(scores, subset_ids)
        scored = [
            ScoredCandidate(image_id=int(subset_ids[i]), score=float(scores[i]))
            for i in order
        ]
        return scored, missing
