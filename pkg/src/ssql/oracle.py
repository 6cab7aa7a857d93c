"""Brute-force evaluator for the relational dialect over in-memory tables.

This is the reference semantics the storage engine is tested against, so it
is written for obviousness, not speed: every operator walks plain Python
lists. It shares no execution code with the catalog's SQL backend.

Comparisons follow SQL three-valued logic: a comparison involving a missing
value (None) is unknown, and WHERE/HAVING keep a row only when the predicate
is definitely true.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

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


class OracleError(Exception):
    pass


@dataclass
class TableData:
    columns: list[str]
    rows: list[tuple]


Row = tuple
Env = dict[str, Any]


def _operand_value(operand, env: Env):
    if isinstance(operand, Literal):
        return operand.value
    if operand.name not in env:
        raise OracleError(f"unknown column {operand.name!r}")
    return env[operand.name]


def _compare(op: str, a, b):
    if a is None or b is None:
        return None
    a_num = isinstance(a, (int, float)) and not isinstance(a, bool)
    b_num = isinstance(b, (int, float)) and not isinstance(b, bool)
    if a_num != b_num:
        raise OracleError(f"cannot compare {type(a).__name__} with {type(b).__name__}")
    if op == "=":
        return a == b
    if op == "<>":
        return a != b
    if op == "<":
        return a < b
    if op == ">":
        return a > b
    if op == "<=":
        return a <= b
    if op == ">=":
        return a >= b
    raise OracleError(f"unknown operator {op!r}")


def eval_expr(expr, env: Env):
    """Evaluate a boolean expression to True/False/None (unknown)."""
    if isinstance(expr, Comparison):
        return _compare(expr.op, _operand_value(expr.left, env), _operand_value(expr.right, env))
    if isinstance(expr, Not):
        inner = eval_expr(expr.operand, env)
        return None if inner is None else not inner
    if isinstance(expr, And):
        left = eval_expr(expr.left, env)
        right = eval_expr(expr.right, env)
        if left is False or right is False:
            return False
        if left is None or right is None:
            return None
        return True
    if isinstance(expr, Or):
        left = eval_expr(expr.left, env)
        right = eval_expr(expr.right, env)
        if left is True or right is True:
            return True
        if left is None or right is None:
            return None
        return False
    raise OracleError(f"not a boolean expression: {expr!r}")


def _sort_key_value(value):
    # Missing values first, then numbers, then text: mirrors standard
    # storage-class ordering so LIMIT slices identically on both routes.
    if value is None:
        return (0, 0)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (1, value)
    return (2, value)


def canonical_order(rows: list[Row]) -> list[Row]:
    return sorted(rows, key=lambda row: tuple(_sort_key_value(v) for v in row))


def _dedupe(rows: list[Row]) -> list[Row]:
    return list(dict.fromkeys(rows))


def _eval_select(sel: Select, tables: Mapping[str, TableData]) -> TableData:
    if isinstance(sel.source, TableRef):
        if sel.source.name not in tables:
            raise OracleError(f"unknown table {sel.source.name!r}")
        src = tables[sel.source.name]
        src_columns, src_rows = src.columns, src.rows
    else:
        assert isinstance(sel.source, Subquery)
        inner = evaluate(sel.source.query, tables)
        src_columns, src_rows = inner.columns, inner.rows

    def env_of(row: Row) -> Env:
        env: Env = {}
        for name, value in zip(src_columns, row):
            env.setdefault(name, value)
        return env

    if sel.where is not None:
        src_rows = [r for r in src_rows if eval_expr(sel.where, env_of(r)) is True]

    aggregate = bool(sel.group_by) or any(isinstance(i, CountStar) for i in sel.items)
    out_columns: list[str] = []
    for item in sel.items:
        if isinstance(item, CountStar):
            out_columns.append(item.alias if item.alias is not None else "count")
        else:
            out_columns.append(item.name)

    if aggregate:
        for g in sel.group_by:
            if g not in src_columns:
                raise OracleError(f"unknown column {g!r}")
        groups: dict[tuple, list[Row]] = {}
        if sel.group_by:
            for row in src_rows:
                env = env_of(row)
                key = tuple(env.get(g) for g in sel.group_by)
                groups.setdefault(key, []).append(row)
        else:
            groups[()] = list(src_rows)  # one global group, even when empty

        out_rows: list[Row] = []
        for key, members in groups.items():
            group_env: Env = dict(zip(sel.group_by, key))
            for item in sel.items:
                if isinstance(item, CountStar) and item.alias is not None:
                    group_env[item.alias] = len(members)
            if sel.having is not None and eval_expr(sel.having, group_env) is not True:
                continue
            produced = []
            for item in sel.items:
                if isinstance(item, CountStar):
                    produced.append(len(members))
                else:
                    if item.name not in group_env:
                        raise OracleError(
                            f"column {item.name!r} is not grouped"
                        )
                    produced.append(group_env[item.name])
            out_rows.append(tuple(produced))
    else:
        if sel.having is not None:
            raise OracleError("HAVING requires GROUP BY or an aggregate")
        out_rows = []
        for row in src_rows:
            env = env_of(row)
            produced = []
            for item in sel.items:
                if item.name not in env:
                    raise OracleError(f"unknown column {item.name!r}")
                produced.append(env[item.name])
            out_rows.append(tuple(produced))

    if sel.distinct:
        out_rows = _dedupe(out_rows)
    return TableData(columns=out_columns, rows=out_rows)


def _eval_body(body, tables: Mapping[str, TableData]) -> TableData:
    if isinstance(body, Select):
        return _eval_select(body, tables)
    assert isinstance(body, SetOp)
    left = _eval_body(body.left, tables)
    right = _eval_select(body.right, tables)
    if len(left.columns) != len(right.columns):
        raise OracleError("set operands have different widths")
    left_rows = _dedupe(left.rows)
    right_set = set(right.rows)
    if body.op == "INTERSECT":
        rows = [r for r in left_rows if r in right_set]
    elif body.op == "EXCEPT":
        rows = [r for r in left_rows if r not in right_set]
    elif body.op == "UNION":
        seen = set(left_rows)
        rows = left_rows + [r for r in _dedupe(right.rows) if r not in seen]
    else:
        raise OracleError(f"unknown set operation {body.op!r}")
    return TableData(columns=left.columns, rows=rows)


def evaluate(query: RelationalQuery, tables: Mapping[str, TableData]) -> TableData:
    """Evaluate a relational query against in-memory tables."""
    result = _eval_body(query.body, tables)
    if query.limit is not None:
        result = TableData(
            columns=result.columns,
            rows=canonical_order(result.rows)[: query.limit],
        )
    return result
