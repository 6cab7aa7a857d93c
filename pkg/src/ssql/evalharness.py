"""Measure semantic-only retrieval against exact SQL ground truth for the
co-occurrence, count, and spatial query families.

Each trial embeds a templated text, takes the top-k of the whole index,
and counts a success when any of those ids lies in the ground-truth set
computed by the relational engine. Ground-truth sets are re-derived by the
brute-force evaluator on every run; a disagreement aborts the run, since a
wrong ground truth would silently corrupt every rate.

Contextual prompts (attributes, scenes) have no SQL ground truth, so the
harness only renders their top-k galleries for human inspection.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from collections import Counter
from pathlib import Path
from typing import Sequence

from .ast import render_literal
from .catalog import Catalog
from .embedding import normalize
from .engine import Embedder
from .index import FlatIndex
from .oracle import TableData, evaluate
from .parser import parse

NUMBER_WORDS = (
    "one", "two", "three", "four", "five",
    "six", "seven", "eight", "nine", "ten",
)

PAIR_TEMPLATE = "{a} and {b}"
COUNT_TEMPLATE = "{number} {noun}"
SPATIAL_TEMPLATES = {
    "bottom_right": "{noun} in the bottom right corner",
    "top_left": "{noun} in the top left corner",
}
DEFAULT_SPATIAL_THRESHOLD = 340


@dataclass
class TrialResult:
    query_text: str
    ground_truth_size: int
    topk_ids: list[int]
    hit: bool


@dataclass
class EvalReport:
    suite: str
    trials: int
    successes: int
    success_rate: float
    per_trial: list[TrialResult]

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "trials": self.trials,
            "successes": self.successes,
            "success_rate": self.success_rate,
            "per_trial": [
                {
                    "query_text": t.query_text,
                    "ground_truth_size": t.ground_truth_size,
                    "topk_ids": t.topk_ids,
                    "hit": t.hit,
                }
                for t in self.per_trial
            ],
        }


def write_report(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n")


class GroundTruthMismatch(RuntimeError):
    """The SQL engine and the brute-force evaluator disagreed."""


def _ground_truth(
    catalog: Catalog, sql: str, snapshot: dict[str, TableData]
) -> set[int]:
    relation = catalog.execute(sql)
    check = evaluate(parse(sql).base, snapshot)
    if Counter(relation.rows) != Counter(check.rows):
        raise GroundTruthMismatch(f"engine and evaluator disagree on: {sql}")
    return {row[0] for row in relation.rows}


def _semantic_topk(index: FlatIndex, embed_text: Embedder, text: str, k: int) -> list[int]:
    query = normalize(embed_text(text))
    return [c.image_id for c in index.top_k(query, k)]


def _assemble(suite: str, trials: list[TrialResult]) -> EvalReport:
    trials = sorted(trials, key=lambda t: t.query_text)
    successes = sum(1 for t in trials if t.hit)
    return EvalReport(
        suite=suite,
        trials=len(trials),
        successes=successes,
        success_rate=successes / len(trials) if trials else 0.0,
        per_trial=trials,
    )


def known_classes(catalog: Catalog) -> list[str]:
    relation = catalog.execute("SELECT DISTINCT class_name FROM objects")
    return sorted(row[0] for row in relation.rows)


def eval_pairs(
    catalog: Catalog,
    index: FlatIndex,
    embed_text: Embedder,
    k: int = 3,
    template: str = PAIR_TEMPLATE,
) -> EvalReport:
    snapshot = catalog.dump_tables()
    trials = []
    for a, b in itertools.combinations(known_classes(catalog), 2):
        sql = (
            f"SELECT DISTINCT id FROM objects WHERE class_name = {render_literal(a)} "
            f"INTERSECT "
            f"SELECT DISTINCT id FROM objects WHERE class_name = {render_literal(b)}"
        )
        truth = _ground_truth(catalog, sql, snapshot)
        if not truth:
            continue  # pair never co-occurs; outside the trial universe
        text = template.format(a=a, b=b)
        topk = _semantic_topk(index, embed_text, text, k)
        trials.append(
            TrialResult(
                query_text=text,
                ground_truth_size=len(truth),
                topk_ids=topk,
                hit=bool(set(topk) & truth),
            )
        )
    return _assemble("pairs", trials)


def eval_count(
    catalog: Catalog,
    index: FlatIndex,
    embed_text: Embedder,
    object_classes: Sequence[str],
    max_count: int = 10,
    k: int = 3,
    template: str = COUNT_TEMPLATE,
) -> EvalReport:
    if not 1 <= max_count <= len(NUMBER_WORDS):
        raise ValueError(f"max_count must be in 1..{len(NUMBER_WORDS)}")
    snapshot = catalog.dump_tables()
    trials = []
    for cls in object_classes:
        for n in range(1, max_count + 1):
            sql = (
                f"SELECT id, COUNT(*) AS c FROM objects "
                f"WHERE class_name = {render_literal(cls)} "
                f"GROUP BY id HAVING c = {n}"
            )
            truth = _ground_truth(catalog, sql, snapshot)
            if not truth:
                continue
            noun = cls if n == 1 else cls + "s"
            text = template.format(number=NUMBER_WORDS[n - 1], noun=noun)
            topk = _semantic_topk(index, embed_text, text, k)
            trials.append(
                TrialResult(
                    query_text=text,
                    ground_truth_size=len(truth),
                    topk_ids=topk,
                    hit=bool(set(topk) & truth),
                )
            )
    return _assemble("count", trials)


def eval_spatial(
    catalog: Catalog,
    index: FlatIndex,
    embed_text: Embedder,
    object_classes: Sequence[str],
    k: int = 3,
    threshold: float = DEFAULT_SPATIAL_THRESHOLD,
) -> EvalReport:
    snapshot = catalog.dump_tables()
    corner_sql = {
        "bottom_right": f"x1 > {threshold} AND y1 > {threshold}",
        "top_left": f"x2 < {threshold} AND y2 < {threshold}",
    }
    trials = []
    for cls in object_classes:
        for corner, condition in corner_sql.items():
            sql = (
                f"SELECT DISTINCT id FROM objects "
                f"WHERE class_name = {render_literal(cls)} AND {condition}"
            )
            truth = _ground_truth(catalog, sql, snapshot)
            if not truth:
                continue
            text = SPATIAL_TEMPLATES[corner].format(noun=cls)
            topk = _semantic_topk(index, embed_text, text, k)
            trials.append(
                TrialResult(
                    query_text=text,
                    ground_truth_size=len(truth),
                    topk_ids=topk,
                    hit=bool(set(topk) & truth),
                )
            )
    return _assemble("spatial", trials)


def contextual_gallery(
    index: FlatIndex, embed_text: Embedder, texts: Sequence[str], k: int = 3
) -> dict[str, list[int]]:
    return {text: _semantic_topk(index, embed_text, text, k) for text in sorted(texts)}
