"""Tokenizer and recursive-descent parser for the SSQL dialect.

The dialect is a closed SQL subset (SELECT/DISTINCT, FROM table or
parenthesized subquery, WHERE with =, <>, <, >, <=, >= and AND/OR/NOT,
GROUP BY, HAVING, COUNT(*) AS alias, INTERSECT/UNION/EXCEPT, trailing
LIMIT) plus a single trailing SEMANTIC clause:

    SELECT DISTINCT frame FROM detections WHERE class = 'car' SEMANTIC 'red car'

Both `SEMANTIC 'text'` and `SEMANTIC = 'text'` are accepted; a LIMIT after
the semantic string selects top-k mode. Keywords are case-insensitive,
identifiers case-preserving, strings single-quoted with '' as the escape.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast import (
    And,
    Column,
    Comparison,
    CountStar,
    Literal,
    Not,
    Operand,
    Or,
    RelationalQuery,
    Select,
    SelectItem,
    SemanticClause,
    SetOp,
    SsqlQuery,
    Subquery,
    TableRef,
    render_body,
)
from .errors import EmptySemanticError, MultipleSemanticError, SsqlSyntaxError

KEYWORDS = frozenset(
    {
        "SELECT", "DISTINCT", "FROM", "WHERE", "GROUP", "BY", "HAVING",
        "COUNT", "AS", "AND", "OR", "NOT", "INTERSECT", "UNION", "EXCEPT",
        "LIMIT", "SEMANTIC",
    }
)

SET_OPS = frozenset({"INTERSECT", "UNION", "EXCEPT"})
COMPARISON_OPS = frozenset({"=", "<>", "<", ">", "<=", ">="})


@dataclass(frozen=True)
class Token:
    kind: str  # KEYWORD IDENT INT FLOAT STRING OP LPAREN RPAREN COMMA STAR SEMI EOF
    value: str
    line: int
    column: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        start_line, start_col = line, col
        if ch == "'":
            buf = []
            j = i + 1
            while True:
                if j >= n:
                    raise SsqlSyntaxError("unterminated string literal", start_line, start_col)
                if source[j] == "'":
                    if j + 1 < n and source[j + 1] == "'":
                        buf.append("'")
                        j += 2
                        continue
                    j += 1
                    break
                buf.append(source[j])
                j += 1
            tokens.append(Token("STRING", "".join(buf), start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and source[i + 1].isdigit()):
            # no arithmetic in the dialect, so '-' can only sign a literal
            j = i + 1 if ch == "-" else i
            while j < n and source[j].isdigit():
                j += 1
            kind = "INT"
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                kind = "FLOAT"
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            tokens.append(Token(kind, source[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            upper = word.upper()
            if upper in KEYWORDS:
                tokens.append(Token("KEYWORD", upper, start_line, start_col))
            else:
                tokens.append(Token("IDENT", word, start_line, start_col))
            col += j - i
            i = j
            continue
        two = source[i : i + 2]
        if two in ("<=", ">=", "<>"):
            tokens.append(Token("OP", two, start_line, start_col))
            i += 2
            col += 2
            continue
        if ch in "=<>":
            tokens.append(Token("OP", ch, start_line, start_col))
            i += 1
            col += 1
            continue
        simple = {"(": "LPAREN", ")": "RPAREN", ",": "COMMA", "*": "STAR", ";": "SEMI"}
        if ch in simple:
            tokens.append(Token(simple[ch], ch, start_line, start_col))
            i += 1
            col += 1
            continue
        raise SsqlSyntaxError(f"unexpected character {ch!r}", start_line, start_col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing ---------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "KEYWORD" and tok.value in words

    def take_keyword(self, *words: str) -> bool:
        if self.at_keyword(*words):
            self.advance()
            return True
        return False

    def fail(self, expected: tuple[str, ...]) -> "SsqlSyntaxError":
        tok = self.peek()
        shown = tok.value if tok.kind != "EOF" else "end of input"
        return SsqlSyntaxError(f"unexpected {shown!r}", tok.line, tok.column, expected)

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self.fail((word,))
        return self.advance()

    def expect(self, kind: str, expected_label: str) -> Token:
        if self.peek().kind != kind:
            raise self.fail((expected_label,))
        return self.advance()

    # -- grammar ----------------------------------------------------------

    def parse_query(self) -> SsqlQuery:
        base = self.parse_relational_query()
        semantic = None
        if self.at_keyword("SEMANTIC"):
            semantic = self.parse_semantic_clause()
        if self.peek().kind == "SEMI":
            self.advance()
        if self.at_keyword("SEMANTIC"):
            tok = self.peek()
            raise MultipleSemanticError(
                "only one SEMANTIC clause is allowed", tok.line, tok.column
            )
        if self.peek().kind != "EOF":
            raise self.fail(("end of query",))
        return SsqlQuery(base=base, semantic=semantic)

    def parse_relational_query(self) -> RelationalQuery:
        body: Select | SetOp = self.parse_select_core()
        while self.at_keyword(*SET_OPS):
            op = self.advance().value
            right = self.parse_select_core()
            body = SetOp(op=op, left=body, right=right)
        limit = None
        if self.take_keyword("LIMIT"):
            limit = self.parse_int("limit count")
        return RelationalQuery(body=body, limit=limit)

    def parse_int(self, label: str) -> int:
        tok = self.expect("INT", label)
        return int(tok.value)

    def parse_select_core(self) -> Select:
        self.expect_keyword("SELECT")
        distinct = self.take_keyword("DISTINCT")
        items = [self.parse_select_item()]
        while self.peek().kind == "COMMA":
            self.advance()
            items.append(self.parse_select_item())
        self.expect_keyword("FROM")
        source = self.parse_source()
        where = None
        if self.take_keyword("WHERE"):
            where = self.parse_or_expr()
        group_by: tuple[str, ...] = ()
        if self.at_keyword("GROUP"):
            self.advance()
            self.expect_keyword("BY")
            cols = [self.expect("IDENT", "column name").value]
            while self.peek().kind == "COMMA":
                self.advance()
                cols.append(self.expect("IDENT", "column name").value)
            group_by = tuple(cols)
        having = None
        if self.take_keyword("HAVING"):
            having = self.parse_or_expr()
        return Select(
            items=tuple(items),
            source=source,
            distinct=distinct,
            where=where,
            group_by=group_by,
            having=having,
        )

    def parse_select_item(self) -> SelectItem:
        if self.at_keyword("COUNT"):
            self.advance()
            self.expect("LPAREN", "(")
            self.expect("STAR", "*")
            self.expect("RPAREN", ")")
            alias = None
            if self.take_keyword("AS"):
                alias = self.expect("IDENT", "alias").value
            elif self.peek().kind == "IDENT":
                alias = self.advance().value
            return CountStar(alias=alias)
        tok = self.expect("IDENT", "column name")
        return Column(tok.value)

    def parse_source(self) -> TableRef | Subquery:
        tok = self.peek()
        if tok.kind == "IDENT":
            self.advance()
            return TableRef(tok.value)
        if tok.kind == "LPAREN":
            self.advance()
            inner = self.parse_relational_query()
            self.expect("RPAREN", ")")
            alias = None
            if self.take_keyword("AS"):
                alias = self.expect("IDENT", "alias").value
            elif self.peek().kind == "IDENT":
                alias = self.advance().value
            return Subquery(query=inner, alias=alias)
        raise self.fail(("table name", "subquery"))

    def parse_or_expr(self):
        node = self.parse_and_expr()
        while self.take_keyword("OR"):
            node = Or(left=node, right=self.parse_and_expr())
        return node

    def parse_and_expr(self):
        node = self.parse_not_expr()
        while self.take_keyword("AND"):
            node = And(left=node, right=self.parse_not_expr())
        return node

    def parse_not_expr(self):
        if self.take_keyword("NOT"):
            return Not(operand=self.parse_not_expr())
        return self.parse_predicate()

    def parse_predicate(self):
        if self.peek().kind == "LPAREN":
            self.advance()
            inner = self.parse_or_expr()
            self.expect("RPAREN", ")")
            return inner
        left = self.parse_operand()
        tok = self.peek()
        if tok.kind != "OP" or tok.value not in COMPARISON_OPS:
            raise self.fail(tuple(sorted(COMPARISON_OPS)))
        op = self.advance().value
        right = self.parse_operand()
        return Comparison(op=op, left=left, right=right)

    def parse_operand(self) -> Operand:
        tok = self.peek()
        if tok.kind == "IDENT":
            self.advance()
            return Column(tok.value)
        if tok.kind == "INT":
            self.advance()
            return Literal(int(tok.value))
        if tok.kind == "FLOAT":
            self.advance()
            return Literal(float(tok.value))
        if tok.kind == "STRING":
            self.advance()
            return Literal(tok.value)
        raise self.fail(("column name", "literal"))

    def parse_semantic_clause(self) -> SemanticClause:
        sem_tok = self.expect_keyword("SEMANTIC")
        if self.peek().kind == "OP" and self.peek().value == "=":
            self.advance()
        if self.peek().kind != "STRING":
            raise self.fail(("string literal",))
        text_tok = self.advance()
        if not text_tok.value.strip():
            raise EmptySemanticError(
                "SEMANTIC predicate must not be empty", sem_tok.line, sem_tok.column
            )
        topk = None
        if self.take_keyword("LIMIT"):
            count_tok = self.peek()
            topk = self.parse_int("top-k count")
            if topk < 1:
                raise SsqlSyntaxError(
                    "top-k count must be positive", count_tok.line, count_tok.column
                )
        return SemanticClause(text=text_tok.value, topk=topk)


def parse(source: str) -> SsqlQuery:
    """Parse SSQL text into an AST, detaching the SEMANTIC clause if present."""
    if not source or not source.strip():
        raise SsqlSyntaxError("empty query", 1, 1, ("SELECT",))
    return _Parser(tokenize(source)).parse_query()


def split(query: SsqlQuery) -> tuple[str, SemanticClause | None]:
    """Render the relational half of a parsed query and return it with the
    semantic clause. The rendered text contains no SEMANTIC token."""
    return render_body(query.base), query.semantic
