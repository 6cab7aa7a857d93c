"""SQLite-backed store for detection results and image metadata, plus the
relational executor for the dialect's pure-SQL half.

Storage keeps the canonical detection schema (image_id, object_id,
object_class, bbox_*). Queries run against views that expose the
user-facing column names:

    objects(id, object_id, class_name, x1, y1, x2, y2)
    object_detection_results(frame, object_id, class, x_min, x_max, y_min, y_max)
    images(id, file_path, width, height, timestamp)

Every query is statically validated (tables, columns, comparison types)
before it is handed to SQLite, so error behavior does not depend on the
backend. LIMIT without ORDER BY would otherwise be backend-defined; the
executor pins it by sorting on all output columns first.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .ast import (
    And,
    Column,
    Comparison,
    CountStar,
    Literal,
    Not,
    Or,
    RelationalQuery,
    Select,
    SetOp,
    Subquery,
    TableRef,
)
from .errors import (
    FormatError,
    NonIntegerIdError,
    QueryTypeError,
    ReferentialError,
    UnknownColumnError,
    UnknownTableError,
)
from .oracle import TableData
from .parser import parse

Schema = list[tuple[str, type]]

_VIEW_SCHEMAS: dict[str, Schema] = {
    "objects": [
        ("id", int), ("object_id", int), ("class_name", str),
        ("x1", float), ("y1", float), ("x2", float), ("y2", float),
    ],
    "object_detection_results": [
        ("frame", int), ("object_id", int), ("class", str),
        ("x_min", float), ("x_max", float), ("y_min", float), ("y_max", float),
    ],
    "images": [
        ("id", int), ("file_path", str), ("width", int),
        ("height", int), ("timestamp", int),
    ],
}

_TYPE_TO_SQL = {int: "INTEGER", float: "REAL", str: "TEXT"}
_SQL_TO_TYPE = {"INTEGER": int, "REAL": float, "TEXT": str}

_NUMERIC = (int, float)


@dataclass(frozen=True)
class DetectionRow:
    image_id: int
    object_id: int
    object_class: str
    bbox_xmin: float
    bbox_xmax: float
    bbox_ymin: float
    bbox_ymax: float


@dataclass(frozen=True)
class ImageMeta:
    image_id: int
    file_path: str
    width: int
    height: int
    timestamp: int | None = None


@dataclass
class ResultRelation:
    column_names: list[str]
    rows: list[tuple]


def image_ids_of(rel: ResultRelation) -> list[int]:
    """Deduplicated values of the id-bearing column, in first-occurrence
    order. Picks the column named `id`, else `frame`, else the first."""
    if not rel.column_names:
        raise ValueError("relation has no columns")
    names = rel.column_names
    if "id" in names:
        idx = names.index("id")
    elif "frame" in names:
        idx = names.index("frame")
    else:
        idx = 0
    seen: dict[int, None] = {}
    for row in rel.rows:
        value = row[idx]
        if not isinstance(value, int) or isinstance(value, bool):
            raise NonIntegerIdError(
                f"column {names[idx]!r} holds non-integer value {value!r}"
            )
        seen.setdefault(value, None)
    return list(seen)


def _quote_ident(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def _quote_string(value: str) -> str:
    return "'" + value.replace("'", "''") + "'"


class Catalog:
    """Owns the SQLite connection. A single internal lock serializes all
    statement execution; ingestion additionally runs in one transaction."""

    def __init__(self, path: str | Path = ":memory:"):
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._lock = threading.RLock()
        self._schemas: dict[str, Schema] = {}
        self._create_base_tables()
        self._load_user_schemas()

    def close(self) -> None:
        self._conn.close()

    # -- schema setup ------------------------------------------------------

    def _create_base_tables(self) -> None:
        with self._lock, self._conn:
            self._conn.executescript(
                """
                CREATE TABLE IF NOT EXISTS detections (
                    image_id INTEGER NOT NULL,
                    object_id INTEGER NOT NULL,
                    object_class TEXT NOT NULL,
                    bbox_xmin REAL NOT NULL,
                    bbox_xmax REAL NOT NULL,
                    bbox_ymin REAL NOT NULL,
                    bbox_ymax REAL NOT NULL,
                    PRIMARY KEY (image_id, object_id)
                );
                CREATE TABLE IF NOT EXISTS image_meta (
                    image_id INTEGER PRIMARY KEY,
                    file_path TEXT NOT NULL,
                    width INTEGER NOT NULL,
                    height INTEGER NOT NULL,
                    timestamp INTEGER
                );
                CREATE TABLE IF NOT EXISTS user_table_schema (
                    table_name TEXT NOT NULL,
                    ordinal INTEGER NOT NULL,
                    column_name TEXT NOT NULL,
                    column_type TEXT NOT NULL,
                    PRIMARY KEY (table_name, ordinal)
                );
                CREATE VIEW IF NOT EXISTS objects AS
                    SELECT image_id AS id, object_id, object_class AS class_name,
                           bbox_xmin AS x1, bbox_ymin AS y1,
                           bbox_xmax AS x2, bbox_ymax AS y2
                    FROM detections;
                CREATE VIEW IF NOT EXISTS object_detection_results AS
                    SELECT image_id AS frame, object_id, object_class AS class,
                           bbox_xmin AS x_min, bbox_xmax AS x_max,
                           bbox_ymin AS y_min, bbox_ymax AS y_max
                    FROM detections;
                CREATE VIEW IF NOT EXISTS images AS
                    SELECT image_id AS id, file_path, width, height, timestamp
                    FROM image_meta;
                """
            )
        self._schemas.update({k: list(v) for k, v in _VIEW_SCHEMAS.items()})

    def _load_user_schemas(self) -> None:
        with self._lock:
            cur = self._conn.execute(
                "SELECT table_name, column_name, column_type FROM user_table_schema "
                "ORDER BY table_name, ordinal"
            )
            for table, column, type_name in cur.fetchall():
                self._schemas.setdefault(table, []).append((column, _SQL_TO_TYPE[type_name]))

    # -- ingestion ----------------------------------------------------------

    def ingest_annotations(self, annotation_file: str | Path, image_root: str | Path) -> dict:
        """Load a COCO-style instance annotation document.

        Re-ingesting an image id replaces its metadata and detections.
        Returns {"images": n, "objects": m}.
        """
        with open(annotation_file, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"annotation file is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise FormatError("annotation document must be a JSON object")
        for key in ("images", "annotations", "categories"):
            if key not in doc:
                raise FormatError(f"annotation document missing {key!r} array")

        categories: dict[int, str] = {}
        for cat in doc["categories"]:
            if "id" not in cat or "name" not in cat:
                raise FormatError("category entry missing 'id' or 'name'")
            categories[int(cat["id"])] = str(cat["name"])

        root = Path(image_root)
        metas: list[ImageMeta] = []
        known_images: set[int] = set()
        for img in doc["images"]:
            for key in ("id", "file_name", "width", "height"):
                if key not in img:
                    raise FormatError(f"image entry missing {key!r}")
            image_id = int(img["id"])
            width, height = int(img["width"]), int(img["height"])
            if width <= 0 or height <= 0:
                raise FormatError(f"image {image_id} has non-positive dimensions")
            timestamp = img.get("timestamp")
            metas.append(
                ImageMeta(
                    image_id=image_id,
                    file_path=str(root / str(img["file_name"])),
                    width=width,
                    height=height,
                    timestamp=int(timestamp) if timestamp is not None else None,
                )
            )
            known_images.add(image_id)

        detections: list[DetectionRow] = []
        for ann in doc["annotations"]:
            for key in ("id", "image_id", "category_id", "bbox"):
                if key not in ann:
                    raise FormatError(f"annotation entry missing {key!r}")
            image_id = int(ann["image_id"])
            if image_id not in known_images:
                raise ReferentialError(f"annotation references unknown image {image_id}")
            category_id = int(ann["category_id"])
            if category_id not in categories:
                raise ReferentialError(f"annotation references unknown category {category_id}")
            bbox = ann["bbox"]
            if not isinstance(bbox, (list, tuple)) or len(bbox) != 4:
                raise FormatError(f"annotation {ann['id']} bbox must be [x, y, w, h]")
            x, y, w, h = (float(v) for v in bbox)
            if w < 0 or h < 0:
                raise FormatError(f"annotation {ann['id']} has negative extent")
            detections.append(
                DetectionRow(
                    image_id=image_id,
                    object_id=int(ann["id"]),
                    object_class=categories[category_id],
                    bbox_xmin=x,
                    bbox_xmax=x + w,
                    bbox_ymin=y,
                    bbox_ymax=y + h,
                )
            )

        with self._lock, self._conn:
            for meta in metas:
                self._conn.execute("DELETE FROM detections WHERE image_id = ?", (meta.image_id,))
                self._conn.execute("DELETE FROM image_meta WHERE image_id = ?", (meta.image_id,))
                self._conn.execute(
                    "INSERT INTO image_meta VALUES (?, ?, ?, ?, ?)",
                    (meta.image_id, meta.file_path, meta.width, meta.height, meta.timestamp),
                )
            try:
                self._conn.executemany(
                    "INSERT INTO detections VALUES (?, ?, ?, ?, ?, ?, ?)",
                    [
                        (d.image_id, d.object_id, d.object_class,
                         d.bbox_xmin, d.bbox_xmax, d.bbox_ymin, d.bbox_ymax)
                        for d in detections
                    ],
                )
            except sqlite3.IntegrityError as exc:
                raise FormatError(f"duplicate (image_id, object_id) pair: {exc}") from exc
        return {"images": len(metas), "objects": len(detections)}

    def load_table(self, name: str, columns: Schema, rows: Iterable[Sequence]) -> None:
        """Create (or replace) an ad-hoc queryable table with typed columns."""
        reserved = set(_VIEW_SCHEMAS) | {"detections", "image_meta", "user_table_schema"}
        if name in reserved:
            raise ValueError(f"table name {name!r} is reserved")
        if len({c for c, _ in columns}) != len(columns):
            raise ValueError("duplicate column names")
        for _, typ in columns:
            if typ not in _TYPE_TO_SQL:
                raise ValueError(f"unsupported column type {typ!r}")
        coerced = []
        for row in rows:
            if len(row) != len(columns):
                raise ValueError("row width does not match declared columns")
            coerced.append(tuple(typ(v) for (_, typ), v in zip(columns, row)))
        ddl_cols = ", ".join(
            f"{_quote_ident(col)} {_TYPE_TO_SQL[typ]}" for col, typ in columns
        )
        placeholders = ", ".join("?" for _ in columns)
        with self._lock, self._conn:
            self._conn.execute(f"DROP TABLE IF EXISTS {_quote_ident(name)}")
            self._conn.execute(f"CREATE TABLE {_quote_ident(name)} ({ddl_cols})")
            self._conn.executemany(
                f"INSERT INTO {_quote_ident(name)} VALUES ({placeholders})", coerced
            )
            self._conn.execute("DELETE FROM user_table_schema WHERE table_name = ?", (name,))
            self._conn.executemany(
                "INSERT INTO user_table_schema VALUES (?, ?, ?, ?)",
                [
                    (name, i, col, _TYPE_TO_SQL[typ])
                    for i, (col, typ) in enumerate(columns)
                ],
            )
        self._schemas[name] = list(columns)

    # -- metadata accessors --------------------------------------------------

    def image_meta(self, image_id: int) -> ImageMeta | None:
        with self._lock:
            cur = self._conn.execute(
                "SELECT image_id, file_path, width, height, timestamp "
                "FROM image_meta WHERE image_id = ?",
                (image_id,),
            )
            row = cur.fetchone()
        if row is None:
            return None
        return ImageMeta(*row)

    def dump_tables(self) -> dict[str, TableData]:
        """Snapshot every queryable relation as plain in-memory data, in the
        shape the brute-force evaluator consumes."""
        out: dict[str, TableData] = {}
        with self._lock:
            for name, schema in self._schemas.items():
                cols = ", ".join(_quote_ident(c) for c, _ in schema)
                cur = self._conn.execute(f"SELECT {cols} FROM {_quote_ident(name)}")
                out[name] = TableData(
                    columns=[c for c, _ in schema],
                    rows=[tuple(r) for r in cur.fetchall()],
                )
        return out

    # -- query execution -------------------------------------------------------

    def execute(self, base_sql: str) -> ResultRelation:
        """Run a pure-relational query and return its result relation."""
        parsed = parse(base_sql)
        if parsed.semantic is not None:
            raise ValueError("execute() accepts relational queries only")
        return self.execute_ast(parsed.base)

    def execute_ast(self, query: RelationalQuery) -> ResultRelation:
        schema = self._validate_query(query)
        sql = self._sqlite_query(query)
        with self._lock:
            cur = self._conn.execute(sql)
            rows = [tuple(r) for r in cur.fetchall()]
        return ResultRelation(column_names=[name for name, _ in schema], rows=rows)

    # -- static validation ----------------------------------------------------

    def _validate_query(self, query: RelationalQuery) -> Schema:
        return self._validate_body(query.body)

    def _validate_body(self, body) -> Schema:
        if isinstance(body, Select):
            return self._validate_select(body)
        left = self._validate_body(body.left)
        right = self._validate_select(body.right)
        if len(left) != len(right):
            raise QueryTypeError(
                f"{body.op} operands have {len(left)} and {len(right)} columns"
            )
        merged: Schema = []
        for (l_name, l_type), (_, r_type) in zip(left, right):
            if l_type in _NUMERIC and r_type in _NUMERIC:
                merged.append((l_name, l_type if l_type is r_type else float))
            elif l_type is str and r_type is str:
                merged.append((l_name, str))
            else:
                raise QueryTypeError(
                    f"{body.op} mixes {l_type.__name__} and {r_type.__name__} "
                    f"in column {l_name!r}"
                )
        return merged

    def _validate_select(self, sel: Select) -> Schema:
        if isinstance(sel.source, TableRef):
            scope = self._schemas.get(sel.source.name)
            if scope is None:
                raise UnknownTableError(f"unknown table {sel.source.name!r}")
        else:
            scope = self._validate_query(sel.source.query)
        if sel.where is not None:
            self._check_expr(sel.where, scope)

        aggregate = bool(sel.group_by) or any(isinstance(i, CountStar) for i in sel.items)
        scope_types = {}
        for name, typ in scope:
            scope_types.setdefault(name, typ)

        if not aggregate:
            if sel.having is not None:
                raise QueryTypeError("HAVING requires GROUP BY or COUNT(*)")
            out: Schema = []
            for item in sel.items:
                assert isinstance(item, Column)
                if item.name not in scope_types:
                    raise UnknownColumnError(f"unknown column {item.name!r}")
                out.append((item.name, scope_types[item.name]))
            return out

        for g in sel.group_by:
            if g not in scope_types:
                raise UnknownColumnError(f"unknown column {g!r} in GROUP BY")
        out = []
        having_scope: Schema = [(g, scope_types[g]) for g in sel.group_by]
        for item in sel.items:
            if isinstance(item, CountStar):
                name = item.alias if item.alias is not None else "count"
                out.append((name, int))
                if item.alias is not None:
                    having_scope.append((item.alias, int))
            else:
                if item.name not in scope_types:
                    raise UnknownColumnError(f"unknown column {item.name!r}")
                if item.name not in sel.group_by:
                    raise QueryTypeError(
                        f"column {item.name!r} must appear in GROUP BY"
                    )
                out.append((item.name, scope_types[item.name]))
        if sel.having is not None:
            self._check_expr(sel.having, having_scope)
        return out

    def _check_expr(self, expr, scope: Schema) -> None:
        if isinstance(expr, Comparison):
            left = self._operand_type(expr.left, scope)
            right = self._operand_type(expr.right, scope)
            both_numeric = left in _NUMERIC and right in _NUMERIC
            if not both_numeric and left is not right:
                raise QueryTypeError(
                    f"cannot compare {left.__name__} with {right.__name__}"
                )
        elif isinstance(expr, Not):
            self._check_expr(expr.operand, scope)
        elif isinstance(expr, (And, Or)):
            self._check_expr(expr.left, scope)
            self._check_expr(expr.right, scope)
        else:
            raise QueryTypeError(f"not a boolean expression: {expr!r}")

    def _operand_type(self, operand, scope: Schema) -> type:
        if isinstance(operand, Literal):
            return type(operand.value)
        for name, typ in scope:
            if name == operand.name:
                return typ
        raise UnknownColumnError(f"unknown column {operand.name!r}")

    # -- SQL generation for the SQLite backend -----------------------------------

    def _sqlite_query(self, query: RelationalQuery) -> str:
        text = self._sqlite_body(query.body)
        if query.limit is not None:
            arity = _body_arity(query.body)
            ordinals = ", ".join(str(i + 1) for i in range(arity))
            text += f" ORDER BY {ordinals} LIMIT {query.limit}"
        return text

    def _sqlite_body(self, body) -> str:
        if isinstance(body, Select):
            return self._sqlite_select(body)
        return f"{self._sqlite_body(body.left)} {body.op} {self._sqlite_select(body.right)}"

    def _sqlite_select(self, sel: Select) -> str:
        parts = ["SELECT"]
        if sel.distinct:
            parts.append("DISTINCT")
        items = []
        for item in sel.items:
            if isinstance(item, CountStar):
                name = item.alias if item.alias is not None else "count"
                items.append(f"COUNT(*) AS {_quote_ident(name)}")
            else:
                items.append(_quote_ident(item.name))
        parts.append(", ".join(items))
        parts.append("FROM")
        if isinstance(sel.source, TableRef):
            parts.append(_quote_ident(sel.source.name))
        else:
            sub = f"({self._sqlite_query(sel.source.query)})"
            if sel.source.alias is not None:
                sub += f" AS {_quote_ident(sel.source.alias)}"
            parts.append(sub)
        if sel.where is not None:
            parts.append("WHERE")
            parts.append(self._sqlite_expr(sel.where))
        if sel.group_by:
            parts.append("GROUP BY")
            parts.append(", ".join(_quote_ident(g) for g in sel.group_by))
        if sel.having is not None:
            parts.append("HAVING")
            parts.append(self._sqlite_expr(sel.having))
        return " ".join(parts)

    def _sqlite_expr(self, expr) -> str:
        if isinstance(expr, Comparison):
            return (
                f"{self._sqlite_operand(expr.left)} {expr.op} "
                f"{self._sqlite_operand(expr.right)}"
            )
        if isinstance(expr, Not):
            return f"NOT ({self._sqlite_expr(expr.operand)})"
        if isinstance(expr, And):
            return f"({self._sqlite_expr(expr.left)}) AND ({self._sqlite_expr(expr.right)})"
        if isinstance(expr, Or):
            return f"({self._sqlite_expr(expr.left)}) OR ({self._sqlite_expr(expr.right)})"
        raise QueryTypeError(f"not a boolean expression: {expr!r}")

    def _sqlite_operand(self, operand) -> str:
        if isinstance(operand, Column):
            return _quote_ident(operand.name)
        value = operand.value
        if isinstance(value, str):
            return _quote_string(value)
        if isinstance(value, float):
            return repr(value)
        return str(value)


def _body_arity(body) -> int:
    while isinstance(body, SetOp):
        body = body.left
    return len(body.items)
