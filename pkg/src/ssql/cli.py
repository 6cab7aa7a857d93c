"""Command-line entry points.

    ssql ingest-detections --coco instances.json --images-root imgs/ --db cat.db
    ssql ingest-embeddings --file raw.emb --index index.emb
    ssql query --db cat.db --index index.emb --embedder stub "<SSQL>"
    ssql serve --db cat.db --index index.emb --port 8040
    ssql eval --suite pairs --db cat.db --index index.emb --k 3 --report out.json
    ssql make-fixture --out demo/

`query` is the terminal fallback for the browser loop: calibration probes
print as image file paths and answers are read as y/n lines.
"""

from __future__ import annotations

import json
import shlex
import sys

import click

from .calibration import SessionStore
from .catalog import Catalog
from .embedding import read_embeddings, write_embeddings
from .engine import Engine, OutcomeKind, make_embedder
from .errors import SsqlError
from .evalharness import (
    eval_count,
    eval_pairs,
    eval_spatial,
    known_classes,
    write_report,
    DEFAULT_SPATIAL_THRESHOLD,
)
from .index import FlatIndex


@click.group()
def main() -> None:
    """Hybrid relational + semantic query engine."""


def _load_engine(db: str, index_path: str, embedder: str, embedder_cmd: str | None,
                 session_dir: str | None = None) -> Engine:
    catalog = Catalog(db)
    index = FlatIndex.from_file(index_path)
    kind = "external" if embedder == "cmd" else "stub"
    command = shlex.split(embedder_cmd) if embedder_cmd else None
    embed = make_embedder(kind, index.dim, command=command)
    return Engine(catalog, index, embed, sessions=SessionStore(persist_dir=session_dir))


_EMBEDDER_OPTIONS = [
    click.option("--embedder", type=click.Choice(["stub", "cmd"]), default="stub",
                 show_default=True, help="Text embedder: deterministic stub or external command."),
    click.option("--embedder-cmd", default=None,
                 help="Command line of the external embedder (required with --embedder cmd)."),
]


def _with_embedder_options(fn):
    for option in reversed(_EMBEDDER_OPTIONS):
        fn = option(fn)
    return fn


@main.command("ingest-detections")
@click.option("--coco", "coco_path", required=True, type=click.Path(exists=True),
              help="COCO-style instance annotation JSON.")
@click.option("--images-root", required=True, type=click.Path(),
              help="Directory the annotation file names are relative to.")
@click.option("--db", required=True, type=click.Path(), help="Catalog database path.")
def ingest_detections(coco_path: str, images_root: str, db: str) -> None:
    catalog = Catalog(db)
    try:
        counts = catalog.ingest_annotations(coco_path, images_root)
    except SsqlError as exc:
        raise click.ClickException(str(exc))
    finally:
        catalog.close()
    click.echo(json.dumps(counts))


@main.command("ingest-embeddings")
@click.option("--file", "emb_file", required=True, type=click.Path(exists=True),
              help="Raw SSQLEMB1 embeddings file.")
@click.option("--index", "index_path", required=True, type=click.Path(),
              help="Destination the server loads at startup.")
def ingest_embeddings(emb_file: str, index_path: str) -> None:
    try:
        dim, records = read_embeddings(emb_file)
        FlatIndex.build(records, dim=dim)  # rejects zero vectors up front
        write_embeddings(index_path, dim, records)
    except SsqlError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps({"records": len(records), "dim": dim}))


@main.command("query")
@click.option("--db", required=True, type=click.Path(exists=True))
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@_with_embedder_options
@click.argument("ssql")
def query(db: str, index_path: str, embedder: str, embedder_cmd: str | None, ssql: str) -> None:
    """Run one query; answer calibration probes as y/n lines."""
    engine = _load_engine(db, index_path, embedder, embedder_cmd)
    try:
        outcome = engine.run(ssql)
    except SsqlError as exc:
        raise click.ClickException(str(exc))
    if outcome.kind is OutcomeKind.RELATION:
        click.echo(json.dumps({
            "kind": "relation",
            "columns": outcome.relation.column_names,
            "rows": [list(r) for r in outcome.relation.rows],
        }))
        return
    if outcome.kind is OutcomeKind.TOPK:
        click.echo(json.dumps({
            "kind": "topk",
            "items": [{"image_id": c.image_id, "score": c.score} for c in outcome.topk],
            "missing_ids": outcome.missing_ids,
        }))
        return
    session = engine.sessions.get(outcome.session_id)
    click.echo(f"calibrating over {outcome.candidate_count} candidates", err=True)
    while not session.done:
        probe = session.pending_probe
        meta = engine.catalog.image_meta(probe)
        label = meta.file_path if meta is not None else f"image #{probe}"
        session.answer(click.confirm(f"{label} relevant?"))
    ids = session.results()
    click.echo(json.dumps({
        "kind": "calibration_results",
        "image_ids": ids,
        "scores": [session.score_of[i] for i in ids],
        "questions_asked": len(session.questions),
        "missing_ids": outcome.missing_ids,
    }))


@main.command("serve")
@click.option("--db", required=True, type=click.Path(exists=True))
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@click.option("--images-root", default=None, type=click.Path(),
              help="Base directory for relative image paths.")
@_with_embedder_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8040, show_default=True, type=int)
@click.option("--cors-origin", default=None, help="Origin allowed to call the API.")
@click.option("--session-dir", default=None, type=click.Path(),
              help="Persist calibration sessions here to survive restarts.")
def serve(db: str, index_path: str, images_root: str | None, embedder: str,
          embedder_cmd: str | None, host: str, port: int, cors_origin: str | None,
          session_dir: str | None) -> None:
    import uvicorn

    from .api import create_app

    engine = _load_engine(db, index_path, embedder, embedder_cmd, session_dir=session_dir)
    app = create_app(engine, cors_origin=cors_origin, images_root=images_root)
    uvicorn.run(app, host=host, port=port)


@main.command("eval")
@click.option("--suite", required=True, type=click.Choice(["pairs", "count", "spatial"]))
@click.option("--db", required=True, type=click.Path(exists=True))
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@_with_embedder_options
@click.option("--k", default=3, show_default=True, type=int)
@click.option("--classes", default=None,
              help="Comma-separated class list (count/spatial); defaults to every class.")
@click.option("--max-count", default=10, show_default=True, type=int)
@click.option("--spatial-threshold", default=DEFAULT_SPATIAL_THRESHOLD,
              show_default=True, type=float)
@click.option("--report", "report_path", required=True, type=click.Path())
def eval_command(suite: str, db: str, index_path: str, embedder: str,
                 embedder_cmd: str | None, k: int, classes: str | None,
                 max_count: int, spatial_threshold: float, report_path: str) -> None:
    engine = _load_engine(db, index_path, embedder, embedder_cmd)
    class_list = (
        [c.strip() for c in classes.split(",") if c.strip()]
        if classes else known_classes(engine.catalog)
    )
    try:
        if suite == "pairs":
            report = eval_pairs(engine.catalog, engine.index, engine.embed_text, k=k)
        elif suite == "count":
            report = eval_count(engine.catalog, engine.index, engine.embed_text,
                                class_list, max_count=max_count, k=k)
        else:
            report = eval_spatial(engine.catalog, engine.index, engine.embed_text,
                                  class_list, k=k, threshold=spatial_threshold)
    except SsqlError as exc:
        raise click.ClickException(str(exc))
    write_report(report, report_path)
    click.echo(
        f"{report.suite}: {report.successes}/{report.trials} "
        f"success rate {report.success_rate:.3f} -> {report_path}"
    )


@main.command("make-fixture")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--dim", default=512, show_default=True, type=int)
def make_fixture(out_dir: str, dim: int) -> None:
    """Write the bundled 20-image demo corpus to a directory."""
    from .fixture import build_fixture

    paths = build_fixture(out_dir, dim=dim)
    click.echo(json.dumps(paths))


if __name__ == "__main__":
    sys.exit(main())
