"""ssql: a hybrid query engine mixing relational predicates with a
semantic predicate resolved by embedding similarity, plus a
human-in-the-loop binary search for the similarity threshold."""

from .ast import RelationalQuery, SemanticClause, SsqlQuery, render
from .calibration import CalibrationSession, SessionStore
from .catalog import Catalog, DetectionRow, ImageMeta, ResultRelation, image_ids_of
from .embedding import (
    DEFAULT_DIM,
    EmbeddingRecord,
    EmbeddingVector,
    external_embed,
    l2_distance,
    normalize,
    read_embeddings,
    similarity,
    stub_embed,
    write_embeddings,
)
from .engine import Engine, OutcomeKind, QueryOutcome, make_embedder
from .index import FlatIndex, ScoredCandidate
from .parser import parse, split

__version__ = "0.1.0"

__all__ = [
    "CalibrationSession",
    "Catalog",
    "DEFAULT_DIM",
    "DetectionRow",
    "EmbeddingRecord",
    "EmbeddingVector",
    "Engine",
    "FlatIndex",
    "ImageMeta",
    "OutcomeKind",
    "QueryOutcome",
    "RelationalQuery",
    "ResultRelation",
    "ScoredCandidate",
    "SemanticClause",
    "SessionStore",
    "SsqlQuery",
    "external_embed",
    "image_ids_of",
    "l2_distance",
    "make_embedder",
    "normalize",
    "parse",
    "read_embeddings",
    "render",
    "similarity",
    "split",
    "stub_embed",
    "write_embeddings",
    "__version__",
]
