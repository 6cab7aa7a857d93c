"""Bundled synthetic corpus: 20 captioned images with detection boxes.

The corpus is small enough to hand-verify and rich enough to exercise
every query family: multi-object co-occurrence, per-image object counts,
corner placement, and the one-person/one-umbrella/two-cars intersection.
Image embeddings are the stub embedding of each caption, so semantic
scores are deterministic and queries sharing caption words rank those
images higher.

`build_fixture(dir)` materializes the corpus on disk (annotation JSON,
image files, SSQLEMB1 embeddings); `fixture_catalog()` / `fixture_index()`
build the in-memory equivalents directly.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

from .catalog import Catalog
from .embedding import DEFAULT_DIM, EmbeddingRecord, stub_embed, write_embeddings
from .index import FlatIndex

IMAGE_WIDTH = 640
IMAGE_HEIGHT = 480


@dataclass(frozen=True)
class FixtureImage:
    image_id: int
    caption: str
    boxes: tuple[tuple[str, float, float, float, float], ...]  # class, x1, y1, x2, y2


FIXTURE_IMAGES: tuple[FixtureImage, ...] = (
    FixtureImage(1, "a woman with an umbrella near two cars", (
        ("person", 300.0, 100.0, 360.0, 300.0),
        ("umbrella", 280.0, 60.0, 380.0, 120.0),
        ("car", 100.0, 300.0, 200.0, 380.0),
        ("car", 220.0, 300.0, 320.0, 380.0),
    )),
    FixtureImage(2, "one person under a red umbrella with two parked cars", (
        ("person", 120.0, 150.0, 180.0, 360.0),
        ("umbrella", 100.0, 90.0, 220.0, 160.0),
        ("car", 260.0, 280.0, 400.0, 360.0),
        ("car", 420.0, 280.0, 560.0, 360.0),
    )),
    FixtureImage(3, "two people sharing an umbrella by two cars", (
        ("person", 100.0, 120.0, 150.0, 320.0),
        ("person", 160.0, 120.0, 210.0, 320.0),
        ("umbrella", 90.0, 60.0, 220.0, 130.0),
        ("car", 250.0, 250.0, 350.0, 330.0),
        ("car", 370.0, 250.0, 470.0, 330.0),
    )),
    FixtureImage(4, "a person with umbrella and one car", (
        ("person", 200.0, 100.0, 260.0, 300.0),
        ("umbrella", 180.0, 50.0, 290.0, 110.0),
        ("car", 320.0, 260.0, 460.0, 340.0),
    )),
    FixtureImage(5, "a person walking between two cars", (
        ("person", 160.0, 100.0, 220.0, 310.0),
        ("car", 50.0, 50.0, 150.0, 120.0),
        ("car", 200.0, 50.0, 300.0, 120.0),
    )),
    FixtureImage(6, "four horses in a field", (
        ("horse", 40.0, 200.0, 140.0, 320.0),
        ("horse", 160.0, 200.0, 260.0, 320.0),
        ("horse", 280.0, 200.0, 380.0, 320.0),
        ("horse", 400.0, 200.0, 500.0, 320.0),
    )),
    FixtureImage(7, "a horse grazing", (
        ("horse", 200.0, 180.0, 360.0, 340.0),
    )),
    FixtureImage(8, "two horses on a beach", (
        ("horse", 100.0, 180.0, 240.0, 330.0),
        ("horse", 300.0, 180.0, 440.0, 330.0),
    )),
    FixtureImage(9, "a car in the bottom right corner", (
        ("car", 350.0, 350.0, 500.0, 470.0),
    )),
    FixtureImage(10, "a car in the top left corner", (
        ("car", 10.0, 10.0, 100.0, 100.0),
    )),
    FixtureImage(11, "a person eating an apple", (
        ("person", 240.0, 80.0, 320.0, 330.0),
        ("apple", 300.0, 150.0, 330.0, 180.0),
    )),
    FixtureImage(12, "three apples on a table", (
        ("apple", 200.0, 220.0, 240.0, 260.0),
        ("apple", 260.0, 220.0, 300.0, 260.0),
        ("apple", 320.0, 220.0, 360.0, 260.0),
    )),
    FixtureImage(13, "a dog with its owner", (
        ("dog", 180.0, 260.0, 280.0, 350.0),
        ("person", 320.0, 90.0, 390.0, 340.0),
    )),
    FixtureImage(14, "a dog next to a car", (
        ("dog", 150.0, 250.0, 250.0, 340.0),
        ("car", 400.0, 100.0, 500.0, 180.0),
    )),
    FixtureImage(15, "two people talking", (
        ("person", 180.0, 100.0, 250.0, 330.0),
        ("person", 300.0, 100.0, 370.0, 330.0),
    )),
    FixtureImage(16, "three cars in a row", (
        ("car", 20.0, 200.0, 80.0, 260.0),
        ("car", 100.0, 200.0, 160.0, 260.0),
        ("car", 180.0, 200.0, 240.0, 260.0),
    )),
    FixtureImage(17, "a blue umbrella", (
        ("umbrella", 220.0, 140.0, 420.0, 260.0),
    )),
    FixtureImage(18, "a person riding a horse", (
        ("horse", 200.0, 180.0, 400.0, 360.0),
        ("person", 260.0, 80.0, 330.0, 240.0),
    )),
    FixtureImage(19, "a sleeping dog", (
        ("dog", 240.0, 260.0, 400.0, 350.0),
    )),
    FixtureImage(20, "a woman holding an umbrella beside two cars", (
        ("person", 280.0, 110.0, 340.0, 320.0),
        ("umbrella", 260.0, 60.0, 360.0, 125.0),
        ("car", 60.0, 280.0, 180.0, 350.0),
        ("car", 200.0, 280.0, 320.0, 350.0),
    )),
)

# one JPEG among the PNGs so content-type sniffing sees both
JPEG_IMAGE_ID = 20
_TINY_JPEG = bytes.fromhex(
    "ffd8ffe000104a46494600010100000100010000ffdb004300100b0c0e0c0a100e0d0e1211101318281a181616183123"
    "251d283a333d3c3933383740485c4e404457453738506d51575f626768673e4d71797064785c656763ffdb0043011112"
    "121815182f1a1a2f63423842636363636363636363636363636363636363636363636363636363636363636363636363"
    "6363636363636363636363636363ffc00011080002000203012200021101031101ffc4001f0000010501010101010100"
    "000000000000000102030405060708090a0bffc400b5100002010303020403050504040000017d010203000411051221"
    "31410613516107227114328191a1082342b1c11552d1f02433627282090a161718191a25262728292a3435363738393a"
    "434445464748494a535455565758595a636465666768696a737475767778797a838485868788898a9293949596979899"
    "9aa2a3a4a5a6a7a8a9aab2b3b4b5b6b7b8b9bac2c3c4c5c6c7c8c9cad2d3d4d5d6d7d8d9dae1e2e3e4e5e6e7e8e9eaf1"
    "f2f3f4f5f6f7f8f9faffc4001f0100030101010101010101010000000000000102030405060708090a0bffc400b51100"
    "020102040403040705040400010277000102031104052131061241510761711322328108144291a1b1c109233352f015"
    "6272d10a162434e125f11718191a262728292a35363738393a434445464748494a535455565758595a63646566676869"
    "6a737475767778797a82838485868788898a92939495969798999aa2a3a4a5a6a7a8a9aab2b3b4b5b6b7b8b9bac2c3c4"
    "c5c6c7c8c9cad2d3d4d5d6d7d8d9dae2e3e4e5e6e7e8e9eaf2f3f4f5f6f7f8f9faffda000c03010002110311003f00c7"
    "a28a2b84fa83ffd9"
)


def _png_bytes(width: int, height: int, rgb: tuple[int, int, int]) -> bytes:
    raw = b"".join(b"\x00" + bytes(rgb) * width for _ in range(height))

    def chunk(tag: bytes, data: bytes) -> bytes:
        body = tag + data
        return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body))

    header = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", header)
        + chunk(b"IDAT", zlib.compress(raw))
        + chunk(b"IEND", b"")
    )


def image_bytes(image_id: int) -> bytes:
    if image_id == JPEG_IMAGE_ID:
        return _TINY_JPEG
    shade = (image_id * 12) % 256
    return _png_bytes(8, 6, (shade, 255 - shade, (shade * 7) % 256))


def image_file_name(image_id: int) -> str:
    suffix = "jpg" if image_id == JPEG_IMAGE_ID else "png"
    return f"{image_id:06d}.{suffix}"


def coco_document() -> dict:
    classes = sorted({cls for img in FIXTURE_IMAGES for cls, *_ in img.boxes})
    category_id = {cls: i + 1 for i, cls in enumerate(classes)}
    doc = {
        "images": [
            {
                "id": img.image_id,
                "file_name": image_file_name(img.image_id),
                "width": IMAGE_WIDTH,
                "height": IMAGE_HEIGHT,
            }
            for img in FIXTURE_IMAGES
        ],
        "annotations": [],
        "categories": [{"id": i, "name": c} for c, i in category_id.items()],
    }
    next_object = 1000
    for img in FIXTURE_IMAGES:
        for cls, x1, y1, x2, y2 in img.boxes:
            doc["annotations"].append(
                {
                    "id": next_object,
                    "image_id": img.image_id,
                    "category_id": category_id[cls],
                    "bbox": [x1, y1, x2 - x1, y2 - y1],
                }
            )
            next_object += 1
    return doc


def fixture_records(dim: int = DEFAULT_DIM) -> list[EmbeddingRecord]:
    return [
        EmbeddingRecord(image_id=img.image_id, vector=stub_embed(img.caption, dim))
        for img in FIXTURE_IMAGES
    ]


def fixture_catalog(path: str | Path = ":memory:", image_root: str | Path | None = None) -> Catalog:
    import tempfile

    catalog = Catalog(path)
    doc = coco_document()
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(doc, fh)
        annotation_path = fh.name
    catalog.ingest_annotations(annotation_path, image_root if image_root is not None else "images")
    Path(annotation_path).unlink()
    return catalog


def fixture_index(dim: int = DEFAULT_DIM) -> FlatIndex:
    return FlatIndex.build(fixture_records(dim), dim=dim)


def build_fixture(target: str | Path, dim: int = DEFAULT_DIM) -> dict:
    """Write the corpus to disk. Returns the paths of the pieces."""
    target = Path(target)
    images_dir = target / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    for img in FIXTURE_IMAGES:
        (images_dir / image_file_name(img.image_id)).write_bytes(image_bytes(img.image_id))
    annotations = target / "instances.json"
    annotations.write_text(json.dumps(coco_document(), indent=2))
    embeddings = target / "embeddings.emb"
    write_embeddings(embeddings, dim, fixture_records(dim))
    return {
        "images_dir": str(images_dir),
        "annotations": str(annotations),
        "embeddings": str(embeddings),
    }
