"""Sidecar command line.

    ssql-sidecar embed-text --model dummy:512
        reads one text line from stdin, writes uint32 dim + float32 values
        to stdout, exits 0

    ssql-sidecar embed-images --model dummy:512 --dir imgs/ --out vec.emb \
        --ids mapping.json
        embeds every file named in the mapping {"file_name": image_id} and
        writes an SSQLEMB1 file
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .models import ModelLoadError, load_model
from .protocol import write_embedding_file, write_vector_reply


@click.group()
def main() -> None:
    """External-process embedder for the hybrid query engine."""


@main.command("embed-text")
@click.option("--model", "model_spec", required=True,
              help="Model spec: dummy:<dim> or clip:<checkpoint>.")
def embed_text(model_spec: str) -> None:
    """Read one line of text from stdin, emit its embedding on stdout."""
    try:
        model = load_model(model_spec)
    except ModelLoadError as exc:
        click.echo(f"model load failed: {exc}", err=True)
        sys.exit(3)
    line = sys.stdin.readline()
    text = line.rstrip("\n").strip()
    if not text:
        click.echo("no input text on stdin", err=True)
        sys.exit(2)
    values = model.embed_text(text)
    write_vector_reply(sys.stdout.buffer, values)


@main.command("embed-images")
@click.option("--model", "model_spec", required=True,
              help="Model spec: dummy:<dim> or clip:<checkpoint>.")
@click.option("--dir", "image_dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory holding the image files.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="SSQLEMB1 file to write.")
@click.option("--ids", "ids_path", required=True, type=click.Path(exists=True),
              help='JSON mapping {"file_name": image_id} matching the catalog.')
def embed_images(model_spec: str, image_dir: str, out_path: str, ids_path: str) -> None:
    """Embed a directory of images into an SSQLEMB1 file."""
    try:
        model = load_model(model_spec)
    except ModelLoadError as exc:
        click.echo(f"model load failed: {exc}", err=True)
        sys.exit(3)

    mapping = json.loads(Path(ids_path).read_text())
    if not isinstance(mapping, dict):
        raise click.ClickException("--ids must be a JSON object of file_name -> integer id")
    ids = list(mapping.values())
    if len(set(ids)) != len(ids):
        raise click.ClickException("duplicate image id in --ids mapping")

    records: list[tuple[int, object]] = []
    skipped = 0
    for file_name in sorted(mapping):
        image_id = int(mapping[file_name])
        path = Path(image_dir) / file_name
        try:
            values = model.embed_image(path)
        except Exception as exc:
            click.echo(f"warning: skipping {file_name}: {exc}", err=True)
            skipped += 1
            continue
        records.append((image_id, values))
    if skipped:
        click.echo(f"warning: skipped {skipped} unreadable image(s)", err=True)
    if not records:
        raise click.ClickException("no image could be embedded")

    write_embedding_file(out_path, model.dim, records)
    click.echo(json.dumps({"records": len(records), "skipped": skipped, "dim": model.dim}))


if __name__ == "__main__":
    main()
