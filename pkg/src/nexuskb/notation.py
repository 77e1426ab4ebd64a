"""Lexer, parser and canonical printer for the FL frame-style notation.

One statement describes a quantified concept plus relations to other
concepts, literals, or whole embedded statements.  The grammar implemented
here (statements are separated by `;`, `//` comments run to end of line):

    statement   := concept
    concept     := [SOURCEMARK] (rule | [quantifier] modifiers head) postfix*
    rule        := 'if' embedded 'then' embedded
    quantifier  := 'a' | 'an' | 'every' | INT | INT..INT | INT..* | INT.*
                 | 'at least' INT | 'at most' INT | 'at least' NUM '% of'
    modifiers   := TERM*          # only after an explicit quantifier token
    head        := TERM | STRING | NUMBER | VARIABLE | '(' concept ')'
                 | '`' statement ('`' | "'")
    postfix     := ('with' | 'has for' | 'that has for') rel dest
                       ('and for' rel dest)*
                 | 'can be' rel 'of' dest        # possibility + inverse
                 | 'can have for' rel dest       # possibility, plain
                 | rel 'of' dest                 # inverse
                 | rel ':' dest+ (',' rel ':' dest+)*      # frame form
    rel         := TERM | STRING                 # informal relation names
    meta        := '__[' rel ':' dest+ (',' rel ':' dest+)* ']'
                                                 # annotates the last edge

Frame form is the canonical surface produced by :func:`print_statement`.
A destination that carries its own attachments is parenthesized, because
inside a destination list only `with`/`has for`/`of` chains may attach
without parentheses (an unparenthesized `rel:` there belongs to the frame
that opened the list).

Conventions fixed by this grammar:

* Unprefixed identifiers are attributed to the parse context's default
  creator, except the built-in names ``thing``, ``attr``, ``value``,
  ``if``, ``then``, ``if_then`` which always have an empty source.
* A bare (quantifier-less) lower-case term reads as `every` in subject
  position and as `0..*` in destination position; a bare capitalized term
  (an individual such as a person or place) reads as an existential.
* `a`/`an` is normalized to cardinality 1..* at parse time; `at most n`
  to 0..n; a percentage of 100 to `every`.
* Adjective-style terms before a head (`a p#healthy p#bird`) expand into
  built-in ``attr`` edges; a decimal number before a unit term
  (`1.45 p#kg`) expands into a unit-typed node with a built-in ``value``
  edge.  Both expansions are reversed when printing.
* A quoted string is an informal node at statement root, when prefixed
  with a source (`oc#"..."`), when parenthesized, or as the destination
  of a statement-valued relation (argument, objection, rule, the
  corrective relations...); elsewhere it is a plain string literal.
* Embedded statements open with a backquote and close with a backquote
  or a right quote; whitespace runs inside quoted strings are collapsed
  to single spaces so informal identity is layout-independent.
* `^` is accepted and ignored (it occurs in the wild as a purely
  presentational separator and has no meaning here).

Negation, disjunctive collections and user-defined quantifiers are
outside this subset and raise :class:`FlSyntaxError`.

Everything in this module is a pure function over immutable input text;
there is no shared mutable state.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator, Optional, Union

__all__ = [
    "Formality",
    "Term",
    "QuantKind",
    "Quantifier",
    "Modality",
    "ConceptNode",
    "RelationEdge",
    "EmbeddedStatement",
    "StatementGraph",
    "ParseContext",
    "FlSyntaxError",
    "UnbalancedQuote",
    "parse",
    "parse_many",
    "print_statement",
    "print_concept",
    "THING",
    "ATTR",
    "VALUE",
    "IF",
    "THEN",
    "IF_THEN",
    "STATEMENT_RELATIONS",
]


# ---------------------------------------------------------------------------
# Errors


class FlSyntaxError(Exception):
    """Syntax error with position and what the parser expected instead."""

    def __init__(self, message: str, line: int, column: int, expectation: str = ""):
        self.line = line
        self.column = column
        self.expectation = expectation
        super().__init__(f"{message} at line {line}, column {column}"
                         + (f" (expected {expectation})" if expectation else ""))


class UnbalancedQuote(FlSyntaxError):
    """An embedded statement was opened but never closed (or vice versa)."""


# ---------------------------------------------------------------------------
# Terms


class Formality(Enum):
    FORMAL = "formal"
    INFORMAL = "informal"


@dataclass(frozen=True, eq=False)
class Term:
    """A formal `source#name` identifier or an informal quoted string.

    Formal identity is the (source, name) pair; informal identity is the
    exact (whitespace-normalized) string, with an empty source until the
    text is attributed to a creator.
    """

    name: str
    source: str = ""
    formality: Formality = Formality.FORMAL

    def __post_init__(self):
        key = (self.formality.value, self.source, self.name)
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))

    def __eq__(self, other):
        if not isinstance(other, Term):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return self._hash

    @property
    def is_informal(self) -> bool:
        return self.formality is Formality.INFORMAL

    def spelled(self) -> str:
        if self.is_informal:
            quoted = '"%s"' % self.name.replace("\\", "\\\\").replace('"', '\\"')
            return f"{self.source}#{quoted}" if self.source else quoted
        if self.source:
            return f"{self.source}#{self.name}"
        return self.name

    def key(self):
        return (self.formality.value, self.source, self.name)

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.spelled()


# Built-in terms: empty source, reserved names.
THING = Term("thing")
ATTR = Term("attr")
VALUE = Term("value")
IF = Term("if")
THEN = Term("then")
IF_THEN = Term("if_then")

BUILTIN_NAMES = {t.name for t in (THING, ATTR, VALUE, IF, THEN, IF_THEN)}

#: Relations whose quoted destinations are informal statements rather than
#: string literals.  Matched by name regardless of source prefix.
STATEMENT_RELATIONS = frozenset({
    "argument",
    "objection",
    "correction",
    "corrective_precision",
    "corrective_generalization",
    "restrictive_correction",
    "rule",
    "specialization_or_equivalent_object",
    "specialization",
    "believer",
})


# ---------------------------------------------------------------------------
# Quantifiers


class QuantKind(Enum):
    EXISTENTIAL = "existential"          # normalized to CARDINALITY 1..*
    UNIVERSAL = "universal"
    AT_LEAST_PERCENT = "at_least_percent"
    CARDINALITY = "cardinality"


@dataclass(frozen=True)
class Quantifier:
    kind: QuantKind
    percent: Optional[Fraction] = None   # AT_LEAST_PERCENT only, in [0, 100]
    min: int = 0
    max: Optional[int] = None            # None = unbounded

    def __post_init__(self):
        if self.kind is QuantKind.CARDINALITY:
            if self.max is not None and self.min > self.max:
                raise ValueError(f"cardinality {self.min}..{self.max} has min > max")
        if self.kind is QuantKind.AT_LEAST_PERCENT:
            if self.percent is None or not (0 <= self.percent <= 100):
                raise ValueError("percentage must lie in [0, 100]")

    @staticmethod
    def existential() -> "Quantifier":
        # `a`/`an` and cardinality 1..* are one and the same thing.
        return Quantifier(QuantKind.CARDINALITY, min=1, max=None)

    @staticmethod
    def universal() -> "Quantifier":
        return Quantifier(QuantKind.UNIVERSAL)

    @staticmethod
    def cardinality(lo: int, hi: Optional[int]) -> "Quantifier":
        return Quantifier(QuantKind.CARDINALITY, min=lo, max=hi)

    @staticmethod
    def at_least_percent(p) -> "Quantifier":
        p = Fraction(p)
        if p == 100:
            return Quantifier.universal()
        return Quantifier(QuantKind.AT_LEAST_PERCENT, percent=p)

    @property
    def is_existential(self) -> bool:
        return (self.kind is QuantKind.CARDINALITY
                and self.min == 1 and self.max is None)

    def key(self):
        if self.kind is QuantKind.AT_LEAST_PERCENT:
            return ("pct", str(self.percent))
        if self.kind is QuantKind.UNIVERSAL:
            return ("all",)
        return ("card", self.min, -1 if self.max is None else self.max)


class Modality(Enum):
    PLAIN = "plain"
    POSSIBILITY = "possibility"


# ---------------------------------------------------------------------------
# Graph nodes

Literal = Union[str, int, float]


@dataclass
class EmbeddedStatement:
    """A whole statement used as a term inside another statement."""

    body: "ConceptNode"


@dataclass
class RelationEdge:
    relation: Term
    destination: "ConceptNode"
    modality: Modality = Modality.PLAIN
    inverse: bool = False
    meta: list["RelationEdge"] = field(default_factory=list)


@dataclass
class ConceptNode:
    """One node of a statement graph.

    Exactly one of `type`, `literal`, `embedded` is set.  A literal node
    carries no quantifier and no attachments.  `variable` marks rule
    variables such as `?o1` (those nodes are typed `thing`).
    """

    quantifier: Optional[Quantifier] = None
    type: Optional[Term] = None
    literal: Optional[Literal] = None
    embedded: Optional[EmbeddedStatement] = None
    variable: Optional[str] = None
    attachments: list[RelationEdge] = field(default_factory=list)
    source_mark: Optional[str] = None    # explicit `src#` attribution marker

    def __post_init__(self):
        heads = sum(x is not None for x in (self.type, self.literal, self.embedded))
        if heads != 1:
            raise ValueError("a concept node needs exactly one of type/literal/embedded")
        if self.literal is not None and (self.quantifier or self.attachments):
            raise ValueError("a literal node carries no quantifier and no attachments")

    @property
    def is_literal(self) -> bool:
        return self.literal is not None


@dataclass
class StatementGraph:
    """A parsed statement plus the raw source it came from."""

    root: ConceptNode
    raw_text: str = ""

    _canon: Optional[str] = field(default=None, repr=False, compare=False)

    def canonical_form(self) -> str:
        if self._canon is None:
            self._canon = print_statement(self)
        return self._canon

    def __eq__(self, other):
        if not isinstance(other, StatementGraph):
            return NotImplemented
        return self.canonical_form() == other.canonical_form()

    def __hash__(self):
        return hash(self.canonical_form())

    def terms(self, *, formal_only: bool = False) -> Iterator[Term]:
        """Every term used anywhere in the graph (types, relations, meta)."""

        def walk(node: ConceptNode) -> Iterator[Term]:
            if node.type is not None:
                yield node.type
            if node.embedded is not None:
                yield from walk(node.embedded.body)
            for edge in node.attachments:
                yield from walk_edge(edge)

        def walk_edge(edge: RelationEdge) -> Iterator[Term]:
            yield edge.relation
            yield from walk(edge.destination)
            for m in edge.meta:
                yield from walk_edge(m)

        for t in walk(self.root):
            if formal_only and (t.is_informal or (not t.source and t.name in BUILTIN_NAMES)):
                continue
            yield t


# ---------------------------------------------------------------------------
# Parse context


@dataclass(frozen=True)
class ParseContext:
    """Per-parse conventions: default creator and relation semantics."""

    default_source: str = "p"
    statement_relations: frozenset = STATEMENT_RELATIONS


# ---------------------------------------------------------------------------
# Lexer


class _Tok:
    TERM = "term"            # value: Term (formal, possibly informal via src#"..")
    IDENT = "ident"          # bare identifier, maybe keyword
    STRING = "string"
    NUMBER = "number"        # value: int | float
    RANGE = "range"          # value: (min, max | None)
    VAR = "var"
    SRCMARK = "srcmark"      # `p#` with nothing attached
    PUNCT = "punct"          # ; , : ( ) ` ' ] and __[
    EOF = "eof"


@dataclass
class _Token:
    kind: str
    value: object
    line: int
    col: int
    off: int = 0


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_\-]*")
_NUM_RE = re.compile(r"\d+")
_WS_RE = re.compile(r"\s+")


def _tokenize(text: str) -> list[_Token]:
    toks: list[_Token] = []
    i, line, bol = 0, 1, 0
    n = len(text)

    def pos(at):
        return line, at - bol + 1

    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            i += 1
            bol = i
            continue
        if c in " \t\r":
            i += 1
            continue
        if c == "/" and text.startswith("//", i):
            j = text.find("\n", i)
            i = n if j < 0 else j
            continue
        if c == "^":             # presentational separator, ignored
            i += 1
            continue
        ln, col = pos(i)
        start = i
        if text.startswith("__[", i):
            toks.append(_Token(_Tok.PUNCT, "__[", ln, col, start))
            i += 3
            continue
        if c in ";,:()]`'’":
            cc = "'" if c == "’" else c
            toks.append(_Token(_Tok.PUNCT, cc, ln, col, start))
            i += 1
            continue
        if c == "?":
            m = _IDENT_RE.match(text, i + 1)
            if not m:
                raise FlSyntaxError("dangling '?'", ln, col, "variable name")
            toks.append(_Token(_Tok.VAR, m.group(0), ln, col, start))
            i = m.end()
            continue
        if c == '"' or c in "“”":
            j = i + 1
            buf = []
            while j < n:
                ch = text[j]
                if ch == "\\" and j + 1 < n:
                    buf.append(text[j + 1])
                    j += 2
                    continue
                if ch == '"' or ch in "“”":
                    break
                if ch == "\n":
                    line += 1
                    bol = j + 1
                buf.append(ch)
                j += 1
            if j >= n:
                raise FlSyntaxError("unterminated string", ln, col, '"')
            raw = _WS_RE.sub(" ", "".join(buf)).strip()
            toks.append(_Token(_Tok.STRING, raw, ln, col, start))
            i = j + 1
            continue
        m = _NUM_RE.match(text, i)
        if m:
            j = m.end()
            if text.startswith("..", j):
                k = j + 2
                if k < n and text[k] == "*":
                    toks.append(_Token(_Tok.RANGE, (int(m.group(0)), None), ln, col, start))
                    i = k + 1
                    continue
                m2 = _NUM_RE.match(text, k)
                if not m2:
                    raise FlSyntaxError("bad range", ln, col, "number or *")
                toks.append(_Token(_Tok.RANGE, (int(m.group(0)), int(m2.group(0))), ln, col, start))
                i = m2.end()
                continue
            if j < n and text[j] == "." and j + 1 < n and text[j + 1] == "*":
                # `1.*` is an accepted alias of `1..*`
                toks.append(_Token(_Tok.RANGE, (int(m.group(0)), None), ln, col, start))
                i = j + 2
                continue
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                m2 = _NUM_RE.match(text, j + 1)
                toks.append(_Token(_Tok.NUMBER, float(text[i:m2.end()]), ln, col, start))
                i = m2.end()
                continue
            toks.append(_Token(_Tok.NUMBER, int(m.group(0)), ln, col, start))
            i = j
            continue
        if c == "%":
            toks.append(_Token(_Tok.PUNCT, "%", ln, col, start))
            i += 1
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            name = m.group(0)
            j = m.end()
            if j < n and text[j] == "#":
                k = j + 1
                if k < n and (text[k] == '"' or text[k] in "“”"):
                    # source-attributed informal term: oc#"..."
                    jj = k + 1
                    buf = []
                    while jj < n:
                        ch = text[jj]
                        if ch == "\\" and jj + 1 < n:
                            buf.append(text[jj + 1])
                            jj += 2
                            continue
                        if ch == '"' or ch in "“”":
                            break
                        if ch == "\n":
                            line += 1
                            bol = jj + 1
                        buf.append(ch)
                        jj += 1
                    if jj >= n:
                        raise FlSyntaxError("unterminated string", ln, col, '"')
                    raw = _WS_RE.sub(" ", "".join(buf)).strip()
                    toks.append(_Token(_Tok.TERM,
                                       Term(raw, name, Formality.INFORMAL), ln, col, start))
                    i = jj + 1
                    continue
                m2 = _IDENT_RE.match(text, k)
                if m2:
                    toks.append(_Token(_Tok.TERM, Term(m2.group(0), name), ln, col, start))
                    i = m2.end()
                    continue
                # `p#` with nothing attached: a source attribution marker
                toks.append(_Token(_Tok.SRCMARK, name, ln, col, start))
                i = k
                continue
            toks.append(_Token(_Tok.IDENT, name, ln, col, start))
            i = j
            continue
        raise FlSyntaxError(f"unexpected character {c!r}", ln, col)
    toks.append(_Token(_Tok.EOF, None, line, (n - bol) + 1, n))
    return toks


_KEYWORDS = {"a", "an", "every", "at", "least", "most", "of", "with", "has",
             "for", "that", "and", "can", "be", "have", "if", "then"}

# Constructs deliberately outside this grammar subset.  Rejecting the
# introducing word early gives a clear position-annotated error instead of
# a misparse.
_UNSUPPORTED_WORDS = {"not", "no", "or", "either", "quantifier"}


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, toks: list[_Token], ctx: ParseContext):
        self.toks = toks
        self.i = 0
        self.ctx = ctx
        self.embed_depth = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> _Token:
        j = min(self.i + ahead, len(self.toks) - 1)
        return self.toks[j]

    def next(self) -> _Token:
        t = self.toks[self.i]
        if t.kind != _Tok.EOF:
            self.i += 1
        return t

    def error(self, msg: str, expectation: str = "", tok: Optional[_Token] = None):
        t = tok or self.peek()
        raise FlSyntaxError(msg, t.line, t.col, expectation)

    def at_punct(self, p: str, ahead: int = 0) -> bool:
        t = self.peek(ahead)
        return t.kind == _Tok.PUNCT and t.value == p

    def eat_punct(self, p: str):
        if not self.at_punct(p):
            self.error(f"unexpected {self.peek().kind} {self.peek().value!r}", repr(p))
        self.next()

    def at_kw(self, word: str, ahead: int = 0) -> bool:
        t = self.peek(ahead)
        return t.kind == _Tok.IDENT and t.value == word

    def eat_kw(self, word: str):
        if not self.at_kw(word):
            self.error(f"unexpected {self.peek().value!r}", repr(word))
        self.next()

    # -- term helpers ------------------------------------------------------

    def attribute(self, name: str) -> Term:
        if name in BUILTIN_NAMES:
            return Term(name)
        return Term(name, self.ctx.default_source)

    def is_term_token(self, t: _Token) -> bool:
        if t.kind == _Tok.TERM:
            return True
        if t.kind == _Tok.IDENT:
            return t.value not in _KEYWORDS
        return False

    # -- entry points -------------------------------------------------------

    def parse_program(self) -> list[tuple[ConceptNode, int, int]]:
        stmts = []
        while not self.at_eof():
            start = self.peek().off
            root = self.parse_concept(subject=True)
            end = self.peek().off
            if self.at_punct(";"):
                self.next()
            elif not self.at_eof():
                self.error(f"unexpected {self.peek().value!r}", "';' or end of input")
            stmts.append((root, start, end))
        return stmts

    def at_eof(self) -> bool:
        return self.peek().kind == _Tok.EOF

    # -- quantifiers ---------------------------------------------------------

    def try_quantifier(self) -> Optional[Quantifier]:
        t = self.peek()
        if t.kind == _Tok.IDENT and t.value in ("a", "an"):
            self.next()
            return Quantifier.existential()
        if t.kind == _Tok.IDENT and t.value == "every":
            self.next()
            return Quantifier.universal()
        if t.kind == _Tok.RANGE:
            self.next()
            lo, hi = t.value
            return Quantifier.cardinality(lo, hi)
        if t.kind == _Tok.NUMBER and isinstance(t.value, int) \
                and self.is_term_token(self.peek(1)):
            self.next()
            return Quantifier.cardinality(t.value, t.value)
        if self.at_kw("at") and self.peek(1).kind == _Tok.IDENT:
            word = self.peek(1).value
            if word == "least":
                num = self.peek(2)
                if num.kind not in (_Tok.NUMBER, _Tok.RANGE):
                    return None
                self.next(); self.next()
                numtok = self.next()
                if numtok.kind == _Tok.RANGE:   # `at least 1..*` is nonsense
                    self.error("bad quantifier", "number", numtok)
                if self.at_punct("%"):
                    self.next()
                    self.eat_kw("of")
                    return Quantifier.at_least_percent(Fraction(str(numtok.value)))
                if not isinstance(numtok.value, int):
                    self.error("cardinality must be an integer", tok=numtok)
                return Quantifier.cardinality(numtok.value, None)
            if word == "most":
                num = self.peek(2)
                if num.kind != _Tok.NUMBER:
                    return None
                self.next(); self.next()
                numtok = self.next()
                if not isinstance(numtok.value, int):
                    self.error("cardinality must be an integer", tok=numtok)
                # `at most n` reads as 0..n
                return Quantifier.cardinality(0, numtok.value)
        return None

    # -- concepts ------------------------------------------------------------

    def parse_concept(self, *, subject: bool = False, in_destlist: bool = False,
                      value_of: Optional[Term] = None) -> ConceptNode:
        srcmark = None
        if self.peek().kind == _Tok.SRCMARK:
            srcmark = self.next().value

        if self.peek().kind == _Tok.IDENT and self.peek().value in _UNSUPPORTED_WORDS:
            self.error(f"{self.peek().value!r} introduces a construct outside "
                       "the implemented notation subset")

        if self.at_kw("if"):
            node = self.parse_rule(srcmark)
            self.parse_postfixes(node, in_destlist)
            return node

        quant = self.try_quantifier()
        t = self.peek()

        # embedded statement head
        if self.at_punct("`"):
            if quant is not None:
                self.error("a quantifier cannot precede an embedded statement")
            self.next()
            self.embed_depth += 1
            body = self.parse_concept(subject=True)
            if not (self.at_punct("`") or self.at_punct("'")):
                raise UnbalancedQuote("embedded statement never closed",
                                      t.line, t.col, "` or '")
            self.next()
            self.embed_depth -= 1
            node = ConceptNode(embedded=EmbeddedStatement(body), source_mark=srcmark)
            self.parse_postfixes(node, in_destlist)
            return node

        # parenthesized destination opens a nested frame
        if self.at_punct("("):
            if quant is not None:
                self.error("a quantifier cannot precede a parenthesized frame")
            self.next()
            node = self.parse_concept(subject=subject, in_destlist=False,
                                      value_of=value_of)
            self.eat_punct(")")
            if srcmark:
                node.source_mark = srcmark
            # a parenthesized quoted string with relations is informal by rule;
            # parse_concept already handled that via value_of / conversion.
            self.parse_postfixes(node, in_destlist)
            return node

        if t.kind == _Tok.STRING:
            self.next()
            informal = (
                srcmark is not None
                or subject
                or (value_of is not None and value_of.name in self.ctx.statement_relations)
            )
            if informal:
                term = Term(t.value, srcmark or "", Formality.INFORMAL)
                node = ConceptNode(type=term, source_mark=srcmark)
                self.parse_postfixes(node, in_destlist)
                return node
            return ConceptNode(literal=t.value)

        if t.kind == _Tok.NUMBER:
            self.next()
            if isinstance(t.value, float) and self.is_term_token(self.peek()):
                # measure: `1.45 p#kg` == a kg-typed node valued 1.45
                unit = self.parse_term_token()
                node = ConceptNode(
                    quantifier=Quantifier.existential(), type=unit,
                    attachments=[RelationEdge(VALUE, ConceptNode(literal=t.value))],
                    source_mark=srcmark)
                self.parse_postfixes(node, in_destlist)
                return node
            return ConceptNode(literal=t.value)

        if t.kind == _Tok.VAR:
            self.next()
            node = ConceptNode(quantifier=Quantifier.existential(), type=THING,
                               variable=t.value, source_mark=srcmark)
            self.parse_postfixes(node, in_destlist)
            return node

        if self.is_term_token(t):
            head = self.parse_term_token()
            if quant is not None:
                # adjective-style modifiers: terms strictly before the head
                mods = [head]
                while self.is_term_token(self.peek()) and not self.at_punct(":", 1) \
                        and not (self.peek(1).kind == _Tok.IDENT and self.peek(1).value == "of"):
                    mods.append(self.parse_term_token())
                head = mods.pop()
                edges = [RelationEdge(ATTR, ConceptNode(
                    quantifier=Quantifier.existential(), type=m)) for m in mods]
            else:
                edges = []
                quant = self.default_quantifier(head, subject)
            node = ConceptNode(quantifier=quant, type=head,
                               attachments=edges, source_mark=srcmark)
            self.parse_postfixes(node, in_destlist)
            return node

        self.error(f"unexpected {t.kind} {t.value!r}", "a concept")

    def default_quantifier(self, head: Term, subject: bool) -> Quantifier:
        if head.is_informal:
            return Quantifier.existential()
        if head.name[:1].isupper():
            return Quantifier.existential()      # named individual
        if subject:
            return Quantifier.universal()
        return Quantifier.cardinality(0, None)

    def parse_term_token(self) -> Term:
        t = self.next()
        if t.kind == _Tok.TERM:
            return t.value
        if t.kind == _Tok.IDENT:
            return self.attribute(t.value)
        self.error(f"unexpected {t.kind}", "a term", t)

    def parse_rule(self, srcmark: Optional[str]) -> ConceptNode:
        self.eat_kw("if")
        cond = self.parse_embedded_required()
        self.eat_kw("then")
        conseq = self.parse_embedded_required()
        return ConceptNode(
            quantifier=Quantifier.existential(), type=IF_THEN,
            attachments=[RelationEdge(IF, cond), RelationEdge(THEN, conseq)],
            source_mark=srcmark)

    def parse_embedded_required(self) -> ConceptNode:
        t = self.peek()
        if not self.at_punct("`"):
            self.error("rule parts must be embedded statements", "'`'")
        self.next()
        body = self.parse_concept(subject=True)
        if not (self.at_punct("`") or self.at_punct("'")):
            raise UnbalancedQuote("embedded statement never closed",
                                  t.line, t.col, "` or '")
        self.next()
        return ConceptNode(embedded=EmbeddedStatement(body))

    # -- attachments -----------------------------------------------------------

    def starts_postfix(self, ahead: int = 0) -> bool:
        t = self.peek(ahead)
        if t.kind == _Tok.IDENT and t.value in ("with", "that", "can"):
            return True
        if t.kind == _Tok.IDENT and t.value == "has" and self.at_kw("for", ahead + 1):
            return True
        if self.is_rel_token(t) and (self.at_punct(":", ahead + 1)
                                     or self.at_kw("of", ahead + 1)):
            return True
        return False

    def is_rel_token(self, t: _Token) -> bool:
        return self.is_term_token(t) or t.kind == _Tok.STRING

    def parse_rel(self) -> Term:
        t = self.peek()
        if t.kind == _Tok.STRING:
            self.next()
            return Term(t.value, "", Formality.INFORMAL)
        return self.parse_term_token()

    def parse_postfixes(self, node: ConceptNode, in_destlist: bool):
        if node.is_literal:
            return
        while True:
            t = self.peek()
            # a comma may separate attachment groups at the owning level
            if not in_destlist and self.at_punct(",") and self.starts_postfix(1):
                self.next()
                continue
            if t.kind == _Tok.IDENT and t.value == "with":
                self.next()
                self.parse_chain_edge(node, Modality.PLAIN, inverse=False)
                self.parse_and_for(node)
                continue
            if t.kind == _Tok.IDENT and t.value == "has" and self.at_kw("for", 1):
                self.next(); self.next()
                self.parse_chain_edge(node, Modality.PLAIN, inverse=False)
                self.parse_and_for(node)
                continue
            if t.kind == _Tok.IDENT and t.value == "that" and self.at_kw("has", 1) \
                    and self.at_kw("for", 2):
                self.next(); self.next(); self.next()
                self.parse_chain_edge(node, Modality.PLAIN, inverse=False)
                self.parse_and_for(node)
                continue
            if t.kind == _Tok.IDENT and t.value == "can":
                if self.at_kw("be", 1):
                    self.next(); self.next()
                    rel = self.parse_rel()
                    self.eat_kw("of")
                    dest = self.parse_concept(in_destlist=True, value_of=rel)
                    edge = RelationEdge(rel, dest, Modality.POSSIBILITY, inverse=True)
                    node.attachments.append(edge)
                    self.try_meta(edge)
                    continue
                if self.at_kw("have", 1) and self.at_kw("for", 2):
                    self.next(); self.next(); self.next()
                    self.parse_chain_edge(node, Modality.POSSIBILITY, inverse=False)
                    continue
                self.error("unexpected 'can'", "'can be' or 'can have for'")
            if self.is_rel_token(t) and self.at_punct(":", 1) and not in_destlist:
                self.parse_frame(node)
                continue
            if self.is_rel_token(t) and (
                    (t.kind == _Tok.STRING and self.at_kw("of", 1))
                    or (t.kind != _Tok.STRING and self.at_kw("of", 1))):
                rel = self.parse_rel()
                self.eat_kw("of")
                dest = self.parse_concept(in_destlist=True, value_of=rel)
                edge = RelationEdge(rel, dest, Modality.PLAIN, inverse=True)
                node.attachments.append(edge)
                self.try_meta(edge)
                continue
            break

    def parse_chain_edge(self, node: ConceptNode, modality: Modality, inverse: bool):
        rel = self.parse_rel()
        dest = self.parse_concept(in_destlist=True, value_of=rel)
        edge = RelationEdge(rel, dest, modality, inverse=inverse)
        node.attachments.append(edge)
        self.try_meta(edge)

    def parse_and_for(self, node: ConceptNode):
        while self.at_kw("and") and self.at_kw("for", 1):
            self.next(); self.next()
            self.parse_chain_edge(node, Modality.PLAIN, inverse=False)

    def parse_frame(self, node: ConceptNode):
        while True:
            rel = self.parse_rel()
            self.eat_punct(":")
            self.parse_destlist(node, rel)
            if self.at_punct(",") and self.is_rel_token(self.peek(1)) \
                    and self.at_punct(":", 2):
                self.next()
                continue
            if self.is_rel_token(self.peek()) and self.at_punct(":", 1):
                continue        # lenient: comma between attachments optional
            return

    def parse_destlist(self, node: ConceptNode, rel: Term):
        count = 0
        while True:
            t = self.peek()
            if t.kind == _Tok.EOF or (t.kind == _Tok.PUNCT and t.value in
                                      (";", ",", ")", "]", "`", "'")):
                break
            if self.is_rel_token(t) and self.at_punct(":", 1):
                break        # next attachment of the frame owner
            if t.kind == _Tok.IDENT and t.value in ("with", "that", "and", "can"):
                break
            if t.kind == _Tok.IDENT and t.value == "has":
                break
            dest = self.parse_concept(in_destlist=True, value_of=rel)
            edge = RelationEdge(rel, dest)
            node.attachments.append(edge)
            self.try_meta(edge)
            count += 1
        if count == 0:
            self.error("empty destination list", "a destination", self.peek())

    def try_meta(self, edge: RelationEdge):
        if not self.at_punct("__["):
            return
        self.next()
        holder = ConceptNode(type=THING)   # scratch node to collect meta edges
        self.parse_frame(holder)
        self.eat_punct("]")
        edge.meta.extend(holder.attachments)
        # nested meta on meta edges was collected by parse_frame recursion


# ---------------------------------------------------------------------------
# Public parse API


def parse(text: str, ctx: Optional[ParseContext] = None) -> StatementGraph:
    """Parse exactly one statement; raise FlSyntaxError with position otherwise."""
    if not text or not text.strip():
        raise FlSyntaxError("empty input", 1, 1, "a statement")
    stmts = parse_many(text, ctx)
    if len(stmts) != 1:
        raise FlSyntaxError(f"expected one statement, found {len(stmts)}", 1, 1, "';'")
    return stmts[0]


def parse_many(text: str, ctx: Optional[ParseContext] = None) -> list[StatementGraph]:
    """Parse a `;`-separated sequence of statements."""
    ctx = ctx or ParseContext()
    toks = _tokenize(text)
    parser = _Parser(toks, ctx)
    return [StatementGraph(root=root, raw_text=text[start:end].strip())
            for root, start, end in parser.parse_program()]


# ---------------------------------------------------------------------------
# Canonical printer
#
# print_statement produces the canonical surface: frame form, attachments in
# a deterministic order, variables renamed v1, v2, ... in print order.  The
# sort key masks variable names with subtree-local indices so the order (and
# therefore the canonical string) does not depend on the original names or
# on the attachment order in the source.


def _masked_node_key(node: ConceptNode, varmap: Optional[dict] = None):
    if varmap is None:
        varmap = {}
    if node.is_literal:
        v = node.literal
        return (("l", type(v).__name__, str(v)), (), "", ())
    if node.variable is not None:
        idx = varmap.setdefault(node.variable, len(varmap) + 1)
        head = ("v", idx)
    elif node.embedded is not None:
        head = ("e", _masked_node_key(node.embedded.body, varmap))
    else:
        head = ("t", node.type.key())
    quant = node.quantifier.key() if node.quantifier else ()
    edges = tuple(sorted(_masked_edge_key(e, varmap) for e in node.attachments))
    return (head, quant, node.source_mark or "", edges)


def _masked_edge_key(edge: RelationEdge, varmap: dict):
    metas = tuple(sorted(_masked_edge_key(m, varmap) for m in edge.meta))
    return (edge.relation.key(), edge.inverse, edge.modality.value,
            _masked_node_key(edge.destination, varmap), metas)


def _sorted_edges(node: ConceptNode) -> list[RelationEdge]:
    return sorted(node.attachments, key=lambda e: _masked_edge_key(e, {}))


def _print_literal(v: Literal) -> str:
    if isinstance(v, str):
        return '"%s"' % v.replace("\\", "\\\\").replace('"', '\\"')
    return repr(v)


def _spell_quantifier(q: Quantifier) -> str:
    if q.kind is QuantKind.UNIVERSAL:
        return "every"
    if q.kind is QuantKind.AT_LEAST_PERCENT:
        p = q.percent
        ptxt = str(p.numerator) if p.denominator == 1 else str(float(p))
        return f"at least {ptxt}% of"
    lo, hi = q.min, q.max
    if lo == 1 and hi is None:
        return "a"
    if hi is None:
        return f"{lo}..*" if lo == 0 else f"at least {lo}"
    if lo == 0:
        return f"at most {hi}"
    if lo == hi:
        return str(lo)
    return f"{lo}..{hi}"


class _Printer:
    def __init__(self):
        self.varmap: dict[str, str] = {}

    def var(self, name: str) -> str:
        if name not in self.varmap:
            self.varmap[name] = f"v{len(self.varmap) + 1}"
        return self.varmap[name]

    def concept(self, node: ConceptNode, *, in_destlist: bool) -> str:
        if node.is_literal:
            return _print_literal(node.literal)

        edges = _sorted_edges(node)
        prefix = f"{node.source_mark}# " if node.source_mark else ""

        # rule surface
        if node.type == IF_THEN and any(e.relation == IF for e in edges) \
                and any(e.relation == THEN for e in edges):
            cond = next(e for e in edges if e.relation == IF)
            conseq = next(e for e in edges if e.relation == THEN)
            rest = [e for e in edges if e is not cond and e is not conseq]
            text = (f"{prefix}if {self.concept(cond.destination, in_destlist=True)} "
                    f"then {self.concept(conseq.destination, in_destlist=True)}")
            if rest:
                text += ", " + self.attachment_seq(rest)
                if in_destlist:
                    return f"({text})"
            return text

        head, edges = self.head_and_edges(node, edges)
        if not edges:
            return prefix + head
        body = self.attachment_seq(edges)
        text = f"{prefix}{head} {body}"
        if in_destlist:
            return f"({text})"
        return text

    def head_and_edges(self, node: ConceptNode, edges: list[RelationEdge]):
        if node.variable is not None:
            return f"?{self.var(node.variable)}", edges
        if node.embedded is not None:
            inner = self.concept(node.embedded.body, in_destlist=False)
            return f"`{inner}`", edges

        term = node.type
        q = node.quantifier

        # measure surface: `1.45 p#kg`
        if (q and q.is_existential and len(edges) == 1
                and edges[0].relation == VALUE and not edges[0].inverse
                and not edges[0].meta and edges[0].destination.is_literal
                and isinstance(edges[0].destination.literal, float)):
            return f"{edges[0].destination.literal!r} {term.spelled()}", []

        # adjective modifiers fold back in front of the head
        mods, rest = [], []
        for e in edges:
            d = e.destination
            if (e.relation == ATTR and not e.inverse and not e.meta
                    and e.modality is Modality.PLAIN and not d.is_literal
                    and d.embedded is None and d.variable is None
                    and not d.attachments and d.quantifier
                    and d.quantifier.is_existential and not d.type.is_informal):
                mods.append(d.type.spelled())
            else:
                rest.append(e)

        if term.is_informal:
            qtxt = ""
        elif q and q.is_existential and not term.is_informal \
                and term.name[:1].isupper():
            qtxt = ""            # named individuals print bare
        elif q is None:
            qtxt = ""
        else:
            qtxt = _spell_quantifier(q) + " "
        headtxt = qtxt + " ".join(mods + [term.spelled()])
        return headtxt, rest

    def attachment_seq(self, edges: list[RelationEdge]) -> str:
        parts = []
        for e in edges:
            parts.append(self.edge(e))
        return ", ".join(parts)

    def edge(self, e: RelationEdge) -> str:
        rel = e.relation.spelled()
        dest = self.concept(e.destination, in_destlist=True)
        if e.modality is Modality.POSSIBILITY:
            body = f"can be {rel} of {dest}" if e.inverse else f"can have for {rel} {dest}"
        elif e.inverse:
            body = f"{rel} of {dest}"
        else:
            body = f"{rel}: {dest}"
        if e.meta:
            metas = ", ".join(self.edge(m) for m in sorted(
                e.meta, key=lambda m: _masked_edge_key(m, {})))
            body += f" __[{metas}]"
        return body


def print_concept(node: ConceptNode) -> str:
    return _Printer().concept(node, in_destlist=False)


def print_statement(g: StatementGraph) -> str:
    """Canonical one-line rendering; reparses to a canonically equal graph."""
    return _Printer().concept(g.root, in_destlist=False) + ";"
