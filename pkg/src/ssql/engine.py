"""Query orchestration: parse, split off the semantic predicate, run the
relational half, then either answer directly (pure SQL), score the
surviving ids for a top-k answer, or open a calibration session.

The order is fixed: relational filtering always runs before semantic
scoring. Scores are per-id constants, so filtering and scoring commute;
the relational pass simply decides which ids get scored at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

from .calibration import SessionStore
from .catalog import Catalog, ResultRelation, image_ids_of
from .embedding import EmbeddingVector, external_embed, normalize, stub_embed
from .errors import EmptyCandidateSetError
from .index import FlatIndex, ScoredCandidate
from .parser import parse, split

Embedder = Callable[[str], EmbeddingVector]


class OutcomeKind(str, Enum):
    RELATION = "relation"
    TOPK = "topk"
    CALIBRATION = "calibration"


@dataclass
class QueryOutcome:
    kind: OutcomeKind
    relation: ResultRelation | None = None
    topk: list[ScoredCandidate] | None = None
    session_id: str | None = None
    missing_ids: list[int] = field(default_factory=list)
    candidate_count: int = 0


def make_embedder(
    kind: str,
    dim: int,
    command: Sequence[str] | None = None,
    timeout: float = 60.0,
) -> Embedder:
    if kind == "stub":
        return lambda text: stub_embed(text, dim)
    if kind == "external":
        if not command:
            raise ValueError("external embedder needs a command")
        argv = list(command)
        return lambda text: external_embed(argv, text, dim, timeout=timeout)
    raise ValueError(f"unknown embedder kind {kind!r}")


class Engine:
    def __init__(
        self,
        catalog: Catalog,
        index: FlatIndex,
        embed_text: Embedder,
        sessions: SessionStore | None = None,
    ):
        self.catalog = catalog
        self.index = index
        self.embed_text = embed_text
        self.sessions = sessions if sessions is not None else SessionStore()

    def run(self, ssql: str) -> QueryOutcome:
        parsed = parse(ssql)
        if parsed.semantic is None:
            relation = self.catalog.execute_ast(parsed.base)
            return QueryOutcome(kind=OutcomeKind.RELATION, relation=relation)

        base_sql, clause = split(parsed)
        relation = self.catalog.execute(base_sql)
        ids = image_ids_of(relation)
        if not ids:
            raise EmptyCandidateSetError(
                "the relational part of the query selected no image ids"
            )
        query_vector = normalize(self.embed_text(clause.text))
        scored, missing = self.index.score_subset(query_vector, ids)

        if clause.topk is not None:
            return QueryOutcome(
                kind=OutcomeKind.TOPK,
                topk=scored[: clause.topk],
                missing_ids=missing,
                candidate_count=len(scored),
            )
        session = self.sessions.create(scored)
        return QueryOutcome(
            kind=OutcomeKind.CALIBRATION,
            session_id=session.session_id,
            missing_ids=missing,
            candidate_count=len(scored),
        )

    def pipeline_trace(self, ssql: str) -> list[str]:
        """The ordered steps run() would take, without running them."""
        parsed = parse(ssql)
        if parsed.semantic is None:
            return ["parse", "execute"]
        mode = "topk" if parsed.semantic.topk is not None else "calibrate"
        return ["parse", "split", "execute", "embed", "score", mode]
