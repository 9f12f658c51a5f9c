"""Query graphs with label predicates, and their line-oriented text form.

::

    # comment
    qv <id> <predicate>
    qe <src> <dst> <u|d> <predicate>
    or                # starts the next alternative pattern
    limit <k>

A predicate token is one of

* ``"Some Label"`` or ``Label`` -- exact label match
* ``?`` -- any label
* ``<op>:<value>`` with op in ``< <= > >= != =`` (or ``lt le gt ge ne eq``)
* ``anyof:a|b|"c d"`` -- membership

Values compare numerically when the constant parses as a number and
lexicographically otherwise.
"""

from __future__ import annotations

import io
import operator
import re
from dataclasses import dataclass, field
from typing import Iterable, TextIO

from .graph import GraphParseError, parse_number, quote_label, tokenize

__all__ = [
    "Predicate",
    "Exact",
    "Wildcard",
    "Compare",
    "AnyOf",
    "QueryEdge",
    "QueryGraph",
    "Query",
    "QueryValidationError",
    "parse_predicate",
    "parse_query",
    "read_query",
    "format_query",
    "eval_predicate",
]


class QueryValidationError(ValueError):
    pass


class Predicate:
    """Label test on a vertex or an edge."""

    def matches(self, label: str) -> bool:
        raise NotImplementedError

    def token(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.token()


@dataclass(frozen=True)
class Exact(Predicate):
    label: str

    def matches(self, label: str) -> bool:
        return label == self.label

    def token(self) -> str:
        return _quote(self.label, force=self.label == "?" or bool(_OP_PREFIX.match(self.label))
                      or bool(re.match(r"^[<>=!]", self.label)))


@dataclass(frozen=True)
class Wildcard(Predicate):
    def matches(self, label: str) -> bool:
        return True

    def token(self) -> str:
        return "?"


_OPS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "!=": operator.ne,
    "=": operator.eq,
}
_OP_ALIASES = {"lt": "<", "le": "<=", "gt": ">", "ge": ">=", "ne": "!=", "eq": "="}
# a bare token whose prefix before ':' is punctuation is an operator attempt
_OP_PREFIX = re.compile(r"^(?:[^\w\s\"?|:]+|lt|le|gt|ge|ne|eq|anyof):")


@dataclass(frozen=True)
class Compare(Predicate):
    op: str
    value: str

    def __post_init__(self):
        if self.op not in _OPS:
            raise QueryValidationError(f"unknown comparison operator {self.op!r}")

    @property
    def numeric(self) -> float | None:
        return parse_number(self.value)

    def matches(self, label: str) -> bool:
        c = parse_number(self.value)
        if c is None:
            return _OPS[self.op](label, self.value)
        x = parse_number(label)
        if x is None:
            return self.op == "!="
        return _OPS[self.op](x, c)

    def token(self) -> str:
        return f"{self.op}:{quote_label(self.value)}"


@dataclass(frozen=True)
class AnyOf(Predicate):
    labels: tuple[str, ...]

    def matches(self, label: str) -> bool:
        return label in self.labels

    def token(self) -> str:
        return "anyof:" + "|".join(quote_label(x) for x in self.labels)


def eval_predicate(p: Predicate, label: str) -> bool:
    return p.matches(label)


def _quote(label: str, force: bool = False) -> str:
    if not force:
        return quote_label(label)
    return '"' + label.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _split_anyof(body: str, lineno: int) -> tuple[str, ...]:
    # quotes were already consumed by the tokenizer, so '|' always separates
    out = tuple(body.split("|"))
    if any(x == "" for x in out):
        raise GraphParseError(lineno, "empty label in anyof")
    return out


def parse_predicate(raw: str, quoted: bool = False, lineno: int = 0) -> Predicate:
    """Turn one token into a predicate; ``quoted`` marks a fully quoted token."""
    if quoted:
        return Exact(raw)
    if raw == "?":
        return Wildcard()
    m = _OP_PREFIX.match(raw)
    if m:
        op = m.group(0)[:-1]
        body = raw[m.end():]
        if op == "anyof":
            return AnyOf(_split_anyof(body, lineno))
        op = _OP_ALIASES.get(op, op)
        if op not in _OPS:
            raise GraphParseError(lineno, f"unknown operator {op!r}")
        if body == "":
            raise GraphParseError(lineno, f"missing value after {op!r}")
        return Compare(op, body)
    if re.match(r"^[<>=!]", raw):
        raise GraphParseError(lineno, f"unknown operator token {raw!r}")
    return Exact(raw)


@dataclass(frozen=True)
class QueryEdge:
    src: int
    dst: int
    directed: bool
    pred: Predicate

    def other(self, q: int) -> int:
        return self.dst if q == self.src else self.src


@dataclass
class QueryGraph:
    nodes: dict[int, Predicate] = field(default_factory=dict)
    edges: list[QueryEdge] = field(default_factory=list)

    def validate(self) -> "QueryGraph":
        if not self.nodes:
            raise QueryValidationError("query graph has no nodes")
        for i, e in enumerate(self.edges):
            for q in (e.src, e.dst):
                if q not in self.nodes:
                    raise QueryValidationError(f"query edge {i} refers to unknown node {q}")
        if not self.is_connected():
            raise QueryValidationError("query graph is not connected")
        return self

    def neighbours(self) -> dict[int, list[tuple[int, int]]]:
        """qnode -> [(qedge index, other qnode)]"""
        out: dict[int, list[tuple[int, int]]] = {q: [] for q in self.nodes}
        for i, e in enumerate(self.edges):
            out[e.src].append((i, e.dst))
            if e.dst != e.src:
                out[e.dst].append((i, e.src))
        return out

    def is_connected(self) -> bool:
        if not self.nodes:
            return False
        nb = self.neighbours()
        start = min(self.nodes)
        seen = {start}
        stack = [start]
        while stack:
            q = stack.pop()
            for _, w in nb[q]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.nodes)


@dataclass
class Query:
    disjuncts: list[QueryGraph]
    limit: int | None = None

    def __post_init__(self):
        if not self.disjuncts:
            raise QueryValidationError("query has no patterns")
        if self.limit is not None and self.limit < 1:
            raise QueryValidationError(f"limit must be positive, got {self.limit}")

    def predicates(self) -> list[Predicate]:
        return [p for d in self.disjuncts for p in d.nodes.values()]


def _int(tok: str, lineno: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise GraphParseError(lineno, f"{what} must be an integer, got {tok!r}") from None


def parse_query(text: str | TextIO | Iterable[str]) -> Query:
    lines = io.StringIO(text) if isinstance(text, str) else text
    disjuncts = [QueryGraph()]
    limit = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = tokenize(line, lineno)
        kind = toks[0][0]
        cur = disjuncts[-1]
        if kind == "qv":
            if len(toks) != 3:
                raise GraphParseError(lineno, "node line needs 'qv <id> <predicate>'")
            q = _int(toks[1][0], lineno, "query node id")
            if q in cur.nodes:
                raise GraphParseError(lineno, f"duplicate query node {q}")
            cur.nodes[q] = parse_predicate(*toks[2], lineno=lineno)
        elif kind == "qe":
            if len(toks) != 5 or toks[3][0] not in ("u", "d"):
                raise GraphParseError(lineno, "edge line needs 'qe <src> <dst> <u|d> <predicate>'")
            cur.edges.append(QueryEdge(_int(toks[1][0], lineno, "source"), _int(toks[2][0], lineno, "destination"),
                                       toks[3][0] == "d", parse_predicate(*toks[4], lineno=lineno)))
        elif kind == "or":
            if len(toks) != 1:
                raise GraphParseError(lineno, "'or' takes no arguments")
            disjuncts.append(QueryGraph())
        elif kind == "limit":
            if len(toks) != 2:
                raise GraphParseError(lineno, "limit line needs 'limit <k>'")
            limit = _int(toks[1][0], lineno, "limit")
        else:
            raise GraphParseError(lineno, f"unknown query record {kind!r}")
    for d in disjuncts:
        d.validate()
    return Query(disjuncts, limit)


def read_query(path) -> Query:
    with open(path, encoding="utf-8") as fh:
        return parse_query(fh)


def format_query(q: Query) -> str:
    out = []
    for i, d in enumerate(q.disjuncts):
        if i:
            out.append("or")
        for qid in sorted(d.nodes):
            out.append(f"qv {qid} {d.nodes[qid].token()}")
        for e in d.edges:
            out.append(f"qe {e.src} {e.dst} {'d' if e.directed else 'u'} {e.pred.token()}")
    if q.limit is not None:
        out.append(f"limit {q.limit}")
    return "\n".join(out) + "\n"
