"""Boolean query DSL: parser, AST, and canonical printer.

Grammar (operators bind NOT > AND > OR, left-associative; adjacent atoms
with no operator combine with OR):

    query   := or ;
    or      := and (("OR" | "||") and)* ;
    and     := unary (("AND" | "&&") unary)* ;
    unary   := ("NOT" | "!" | "-") unary | "+" unary | atom ;
    atom    := "(" query ")" | [field ":"] (phrase | word) ;
    phrase  := '"' word+ '"' ;

Keywords are case-sensitive uppercase; lowercase "and"/"or"/"not" are
ordinary terms. "+" is accepted and discarded (plain term). The only
legal field names are "title" and "abstract". "!", "-", "+", "&&" and
"||" act as operators only at a token boundary; inside a run like
covid-19 they are ordinary term characters.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

FIELDS = ("title", "abstract")

_RESERVED_WORDS = {"AND": "AND", "OR": "OR", "NOT": "NOT"}
# Characters that always end a term run.
_TERM_BREAKERS = set(' \t\r\n()":')


class ParseError(Exception):
    """Syntax error with a 0-based character position and a context excerpt."""

    def __init__(self, message: str, position: int, source: str):
        self.message = message
        self.position = position
        lo, hi = max(0, position - 12), min(len(source), position + 12)
        self.excerpt = source[lo:hi]
        super().__init__(f"{message} at position {position}: ...{self.excerpt!r}...")


@dataclass(frozen=True)
class Term:
    text: str
    field: str | None = None

    def __post_init__(self):
        if not self.text:
            raise ValueError("empty term")
        if self.field is not None and self.field not in FIELDS:
            raise ValueError(f"unknown field {self.field!r}")


@dataclass(frozen=True)
class Phrase:
    words: tuple[str, ...]
    field: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        if not self.words or any(not w for w in self.words):
            raise ValueError("phrase needs at least one non-empty word")
        if self.field is not None and self.field not in FIELDS:
            raise ValueError(f"unknown field {self.field!r}")


@dataclass(frozen=True)
class Not:
    child: "Node"


@dataclass(frozen=True)
class And:
    children: tuple["Node", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("AND needs at least two children")


@dataclass(frozen=True)
class Or:
    children: tuple["Node", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("OR needs at least two children")


Node = Term | Phrase | Not | And | Or


@dataclass(frozen=True)
class _Tok:
    kind: str  # LPAREN RPAREN AND OR NOT PLUS TERM PHRASE
    position: int
    text: str = ""
    words: tuple[str, ...] = dc_field(default=tuple)


def _lex(source: str) -> list[_Tok]:
    tokens: list[_Tok] = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "(":
            tokens.append(_Tok("LPAREN", i))
            i += 1
        elif ch == ")":
            tokens.append(_Tok("RPAREN", i))
            i += 1
        elif ch == '"':
            end = source.find('"', i + 1)
            if end < 0:
                raise ParseError("unterminated quote", n, source)
            words = tuple(source[i + 1 : end].split())
            if not words:
                raise ParseError("empty phrase", i, source)
            tokens.append(_Tok("PHRASE", i, words=words))
            i = end + 1
        elif source.startswith("&&", i):
            tokens.append(_Tok("AND", i))
            i += 2
        elif source.startswith("||", i):
            tokens.append(_Tok("OR", i))
            i += 2
        elif ch in "!-":
            tokens.append(_Tok("NOT", i))
            i += 1
        elif ch == "+":
            tokens.append(_Tok("PLUS", i))
            i += 1
        elif ch == ":":
            raise ParseError("field separator without a field name", i, source)
        else:
            start = i
            while i < n and source[i] not in _TERM_BREAKERS:
                i += 1
            text = source[start:i]
            kind = _RESERVED_WORDS.get(text)
            if kind:
                tokens.append(_Tok(kind, start))
            elif i < n and source[i] == ":":
                tokens.append(_Tok("FIELD", start, text=text))
                i += 1
            else:
                tokens.append(_Tok("TERM", start, text=text))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _lex(source)
        self.pos = 0

    def peek(self) -> _Tok | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> _Tok:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, position: int | None = None):
        if position is None:
            tok = self.peek()
            position = tok.position if tok else len(self.source)
        raise ParseError(message, position, self.source)

    def parse(self) -> Node:
        if not self.tokens:
            self.fail("empty query", 0)
        node = self.parse_or()
        if self.peek() is not None:
            tok = self.peek()
            if tok.kind == "RPAREN":
                self.fail("unbalanced parenthesis", tok.position)
            self.fail("unexpected trailing input", tok.position)
        return node

    def parse_or(self) -> Node:
        children = [self.parse_and()]
        while True:
            tok = self.peek()
            if tok is None:
                break
            if tok.kind == "OR":
                self.take()
                children.append(self.parse_and())
            elif tok.kind in ("TERM", "PHRASE", "FIELD", "LPAREN", "NOT", "PLUS"):
                # Adjacent atoms: the default operator is OR.
                children.append(self.parse_and())
            else:
                break
        return children[0] if len(children) == 1 else Or(tuple(children))

    def parse_and(self) -> Node:
        children = [self.parse_unary()]
        while (tok := self.peek()) is not None and tok.kind == "AND":
            self.take()
            children.append(self.parse_unary())
        return children[0] if len(children) == 1 else And(tuple(children))

    def parse_unary(self) -> Node:
        tok = self.peek()
        if tok is None:
            self.fail("dangling operator")
        if tok.kind == "NOT":
            self.take()
            return Not(self.parse_unary())
        if tok.kind == "PLUS":
            self.take()
            return self.parse_unary()
        return self.parse_atom()

    def parse_atom(self) -> Node:
        tok = self.peek()
        if tok is None:
            self.fail("dangling operator")
        if tok.kind == "LPAREN":
            self.take()
            node = self.parse_or()
            closing = self.peek()
            if closing is None or closing.kind != "RPAREN":
                self.fail("unbalanced parenthesis")
            self.take()
            return node
        if tok.kind == "RPAREN":
            self.fail("unbalanced parenthesis", tok.position)
        if tok.kind == "PHRASE":
            self.take()
            return Phrase(tok.words)
        if tok.kind == "TERM":
            self.take()
            return Term(tok.text)
        if tok.kind == "FIELD":
            self.take()
            if tok.text not in FIELDS:
                self.fail(f"unknown field name {tok.text!r}", tok.position)
            nxt = self.peek()
            if nxt is None or nxt.kind not in ("TERM", "PHRASE"):
                self.fail(
                    "field separator must be followed by a term or phrase",
                    tok.position + len(tok.text),
                )
            self.take()
            if nxt.kind == "PHRASE":
                return Phrase(nxt.words, field=tok.text)
            return Term(nxt.text, field=tok.text)
        self.fail(f"operator {tok.kind} where a term was expected", tok.position)


def parse(source: str) -> Node:
    """Parse ``source`` into an AST; raises ParseError on any syntax fault."""
    return _Parser(source).parse()


def print_canonical(node: Node) -> str:
    """Render fully parenthesized canonical text; parse() inverts it."""
    if isinstance(node, Term):
        return f"{node.field}:{node.text}" if node.field else node.text
    if isinstance(node, Phrase):
        quoted = '"' + " ".join(node.words) + '"'
        return f"{node.field}:{quoted}" if node.field else quoted
    if isinstance(node, Not):
        return f"(NOT {print_canonical(node.child)})"
    if isinstance(node, And):
        return "(" + " AND ".join(print_canonical(c) for c in node.children) + ")"
    if isinstance(node, Or):
        return "(" + " OR ".join(print_canonical(c) for c in node.children) + ")"
    raise TypeError(f"not an AST node: {node!r}")


def format_tree(node: Node, indent: int = 0) -> str:
    """Indented multi-line rendering for the query debugging command."""
    pad = "  " * indent
    if isinstance(node, Term):
        label = f"Term {node.text!r}"
        if node.field:
            label += f" field={node.field}"
        return pad + label
    if isinstance(node, Phrase):
        label = f"Phrase {' '.join(node.words)!r}"
        if node.field:
            label += f" field={node.field}"
        return pad + label
    if isinstance(node, Not):
        return pad + "Not\n" + format_tree(node.child, indent + 1)
    name = "And" if isinstance(node, And) else "Or"
    lines = [pad + name]
    lines.extend(format_tree(c, indent + 1) for c in node.children)
    return "\n".join(lines)
