"""AST node types for the SSQL dialect and the canonical text renderer.

All nodes are frozen dataclasses, so structural equality (`==`) and hashing
come for free. `render(parse(text))` is the canonical spelling of a query:
uppercase keywords, single spaces, minimal parentheses, `SEMANTIC '...'`
without the optional `=`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

# --- scalar expressions --------------------------------------------------


@dataclass(frozen=True)
class Column:
    name: str


@dataclass(frozen=True)
class Literal:
    value: int | float | str


Operand = Union[Column, Literal]


@dataclass(frozen=True)
class Comparison:
    op: str  # one of: = <> < > <= >=
    left: Operand
    right: Operand


@dataclass(frozen=True)
class Not:
    operand: "BoolExpr"


@dataclass(frozen=True)
class And:
    left: "BoolExpr"
    right: "BoolExpr"


@dataclass(frozen=True)
class Or:
    left: "BoolExpr"
    right: "BoolExpr"


BoolExpr = Union[Comparison, Not, And, Or]

# --- projections and sources ----------------------------------------------


@dataclass(frozen=True)
class CountStar:
    alias: str | None = None


SelectItem = Union[Column, CountStar]


@dataclass(frozen=True)
class TableRef:
    name: str


@dataclass(frozen=True)
class Subquery:
    query: "RelationalQuery"
    alias: str | None = None


@dataclass(frozen=True)
class Select:
    items: tuple[SelectItem, ...]
    source: Union[TableRef, Subquery]
    distinct: bool = False
    where: BoolExpr | None = None
    group_by: tuple[str, ...] = ()
    having: BoolExpr | None = None


@dataclass(frozen=True)
class SetOp:
    op: str  # INTERSECT | UNION | EXCEPT
    left: Union[Select, "SetOp"]
    right: Select


QueryBody = Union[Select, SetOp]


@dataclass(frozen=True)
class RelationalQuery:
    body: QueryBody
    limit: int | None = None


@dataclass(frozen=True)
class SemanticClause:
    text: str
    topk: int | None = None


@dataclass(frozen=True)
class SsqlQuery:
    base: RelationalQuery
    semantic: SemanticClause | None = None


# --- rendering -------------------------------------------------------------

# Binding strength of boolean nodes; parenthesization preserves tree shape
# under the left-associative grammar.
_LEVEL_OR = 1
_LEVEL_AND = 2
_LEVEL_NOT = 3
_LEVEL_CMP = 4


def _expr_level(expr: BoolExpr) -> int:
    if isinstance(expr, Or):
        return _LEVEL_OR
    if isinstance(expr, And):
        return _LEVEL_AND
    if isinstance(expr, Not):
        return _LEVEL_NOT
    return _LEVEL_CMP


def render_literal(value: int | float | str) -> str:
    if isinstance(value, bool):  # bool is an int subclass; never valid here
        raise TypeError("boolean literals are not part of the dialect")
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _render_operand(op: Operand) -> str:
    if isinstance(op, Column):
        return op.name
    return render_literal(op.value)


def render_expr(expr: BoolExpr) -> str:
    if isinstance(expr, Comparison):
        return f"{_render_operand(expr.left)} {expr.op} {_render_operand(expr.right)}"
    if isinstance(expr, Not):
        inner = render_expr(expr.operand)
        if _expr_level(expr.operand) < _LEVEL_NOT:
            inner = f"({inner})"
        return f"NOT {inner}"
    if isinstance(expr, (And, Or)):
        level = _expr_level(expr)
        word = "AND" if isinstance(expr, And) else "OR"
        left = render_expr(expr.left)
        # Left side may be the same operator (left-associative chain).
        if _expr_level(expr.left) < level:
            left = f"({left})"
        right = render_expr(expr.right)
        if _expr_level(expr.right) <= level:
            right = f"({right})"
        return f"{left} {word} {right}"
    raise TypeError(f"not a boolean expression: {expr!r}")


def _render_item(item: SelectItem) -> str:
    if isinstance(item, Column):
        return item.name
    if item.alias is not None:
        return f"COUNT(*) AS {item.alias}"
    return "COUNT(*)"


def _render_source(source: Union[TableRef, Subquery]) -> str:
    if isinstance(source, TableRef):
        return source.name
    text = f"({render_body(source.query)})"
    if source.alias is not None:
        text += f" AS {source.alias}"
    return text


def render_select(sel: Select) -> str:
    parts = ["SELECT"]
    if sel.distinct:
        parts.append("DISTINCT")
    parts.append(", ".join(_render_item(i) for i in sel.items))
    parts.append("FROM")
    parts.append(_render_source(sel.source))
    if sel.where is not None:
        parts.append("WHERE")
        parts.append(render_expr(sel.where))
    if sel.group_by:
        parts.append("GROUP BY")
        parts.append(", ".join(sel.group_by))
    if sel.having is not None:
        parts.append("HAVING")
        parts.append(render_expr(sel.having))
    return " ".join(parts)


def render_body(query: RelationalQuery) -> str:
    body = query.body
    if isinstance(body, Select):
        text = render_select(body)
    else:
        chain: list[str] = []

        def walk(node: QueryBody) -> None:
            if isinstance(node, SetOp):
                walk(node.left)
                chain.append(node.op)
                chain.append(render_select(node.right))
            else:
                chain.append(render_select(node))

        walk(body)
        text = " ".join(chain)
    if query.limit is not None:
        text += f" LIMIT {query.limit}"
    return text


def render(query: SsqlQuery | RelationalQuery) -> str:
    """Render a query AST back to canonical SSQL text."""
    if isinstance(query, RelationalQuery):
        return render_body(query)
    text = render_body(query.base)
    if query.semantic is not None:
        text += f" SEMANTIC {render_literal(query.semantic.text)}"
        if query.semantic.topk is not None:
            text += f" LIMIT {query.semantic.topk}"
    return text
