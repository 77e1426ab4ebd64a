"""Logic export: render statement graphs as s-expression formulas.

Plain existential trees and universals map onto `exists` / `forall`
bindings (typed binding lists, conjunction bodies).  Constructs with no
first-order reading never fail; they switch to a documented reified
encoding and flag the result `extended`:

    (count-range LO HI ?x REL TYPE)        cardinality bound on REL fillers
    (count-range-root LO HI (?v TYPE) BODY) cardinality at statement root
    (at-least-percent P ?x REL TYPE)        percentage bound on fillers
    (at-least-percent-root P (?v TYPE) BODY) percentage at statement root
    (possible ATOM)                         possibility modality
    (with-meta ATOM (META...))              annotations carried by a relation
    (statement SEXPR)                       an embedded statement as a term
    (informal "text")                       an informal term as a constant

`decode_count_range` reverses the cardinality encoding.

`expressiveness_report` lists, per export target, which constructs force
reification: `meta-statement`, `AtLeastPercent`, `Cardinality`,
`Possibility`, `context`, `Universal` (plain triples cannot quantify).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .notation import (
    IF,
    IF_THEN,
    THEN,
    ConceptNode,
    Modality,
    QuantKind,
    RelationEdge,
    StatementGraph,
    Term,
    _sorted_edges,
)

__all__ = [
    "LogicExport",
    "ExpressivenessReport",
    "export_logic",
    "expressiveness_report",
    "decode_count_range",
    "parse_sexpr",
    "normalize_sexpr",
]


@dataclass
class LogicExport:
    text: str
    extended: bool


@dataclass
class ExpressivenessReport:
    target: str
    expressible: bool
    offending: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# export


def _spell_term(t: Term) -> str:
    if t.is_informal:
        return f'(informal "{t.name}")'
    return t.spelled()


def _lit(v) -> str:
    if isinstance(v, str):
        return '"%s"' % v.replace("\\", "\\\\").replace('"', '\\"')
    return repr(v)


class _Exporter:
    def __init__(self):
        self.counter: dict[str, int] = {}
        self.extended = False

    def fresh(self, t: Term | None) -> str:
        base = (t.name[:1].lower() or "x") if t is not None else "x"
        if not base.isalpha():
            base = "x"
        n = self.counter.get(base, 0) + 1
        self.counter[base] = n
        return f"?{base}" if n == 1 else f"?{base}{n}"

    # -- scopes -------------------------------------------------------------

    def statement(self, node: ConceptNode) -> str:
        q = node.quantifier

        if node.type == IF_THEN and node.attachments:
            return self.rule(node)

        if node.embedded is not None:
            inner = self.statement(node.embedded.body)
            if node.attachments:
                self.extended = True
                stmt = f"(statement {inner})"
                ann = " ".join(self.edge_atom(stmt, e, [], [])
                               for e in _sorted_edges(node))
                return f"(with-meta {stmt} {ann})"
            return inner

        if q is not None and q.kind is QuantKind.UNIVERSAL:
            var = self.fresh(node.type)
            inner = self.existential_scope(var, node)
            return f"(forall (({var} {_spell_term(node.type)})) {inner})"

        if q is not None and q.is_existential:
            bindings, conjuncts = [], []
            self.exists_tree(node, bindings, conjuncts)
            return _exists(bindings, conjuncts)

        # root cardinality / percentage: reified
        self.extended = True
        var = self.fresh(node.type)
        bindings, conjuncts = [], []
        self.collect_edges(var, node, bindings, conjuncts)
        body = _exists(bindings, conjuncts) if (bindings or conjuncts) else "true"
        if q is not None and q.kind is QuantKind.AT_LEAST_PERCENT:
            p = q.percent
            ptxt = str(p.numerator) if p.denominator == 1 else str(float(p))
            return (f"(at-least-percent-root {ptxt} "
                    f"(({var} {_spell_term(node.type)})) {body})")
        lo, hi = (q.min, q.max) if q is not None else (1, None)
        return (f"(count-range-root {lo} {'*' if hi is None else hi} "
                f"(({var} {_spell_term(node.type)})) {body})")

    def rule(self, node: ConceptNode) -> str:
        cond = next(e for e in node.attachments if e.relation == IF)
        conseq = next(e for e in node.attachments if e.relation == THEN)
        varnames = sorted(set(_free_vars(node)))
        self_vars = " ".join(f"(?{v} thing)" for v in varnames)
        left = self.statement(cond.destination.embedded.body)
        right = self.statement(conseq.destination.embedded.body)
        return f"(forall ({self_vars}) (=> {left} {right}))"

    def existential_scope(self, var: str, node: ConceptNode) -> str:
        bindings, conjuncts = [], []
        self.collect_edges(var, node, bindings, conjuncts)
        return _exists(bindings, conjuncts)

    def exists_tree(self, node: ConceptNode, bindings, conjuncts) -> str:
        """Bind this node and flatten nested plain existentials into scope."""
        if node.variable is not None:
            self.collect_edges(f"?{node.variable}", node, bindings, conjuncts)
            return f"?{node.variable}"
        var = self.fresh(node.type)
        bindings.append(f"({var} {_spell_term(node.type)})")
        self.collect_edges(var, node, bindings, conjuncts)
        return var

    def collect_edges(self, var: str, node: ConceptNode, bindings, conjuncts):
        for e in _sorted_edges(node):
            conjuncts.append(self.edge_atom(var, e, bindings, conjuncts))

    def edge_atom(self, var: str, e: RelationEdge, bindings, conjuncts) -> str:
        """Render one edge as an atom; plain existential destinations splice
        their binding and sub-atoms into the enclosing scope lists."""
        d = e.destination
        rel = _spell_term(e.relation)
        q = d.quantifier

        if d.is_literal:
            atom = f"({rel} {var} {_lit(d.literal)})"
        elif d.variable is not None:
            a, b = (f"?{d.variable}", var) if e.inverse else (var, f"?{d.variable}")
            atom = f"({rel} {a} {b})"
        elif d.embedded is not None:
            self.extended = True
            inner = self.statement(d.embedded.body)
            stmt = f"(statement {inner})"
            if d.attachments:
                ann = " ".join(self.edge_atom(stmt, sub, [], [])
                               for sub in _sorted_edges(d))
                stmt = f"(with-meta {stmt} {ann})"
            a, b = (stmt, var) if e.inverse else (var, stmt)
            atom = f"({rel} {a} {b})"
        elif q is not None and q.kind is QuantKind.UNIVERSAL:
            sub = self.fresh(d.type)
            inner = self.existential_scope(sub, d)
            a, b = (sub, var) if e.inverse else (var, sub)
            atom = (f"(forall (({sub} {_spell_term(d.type)})) "
                    f"(=> ({rel} {a} {b}) {inner}))")
        elif q is not None and q.kind is QuantKind.AT_LEAST_PERCENT:
            self.extended = True
            p = q.percent
            ptxt = str(p.numerator) if p.denominator == 1 else str(float(p))
            atom = f"(at-least-percent {ptxt} {var} {rel} {_spell_term(d.type)})"
        elif q is not None and q.is_existential:
            subvar = self.exists_tree(d, bindings, conjuncts)
            a, b = (subvar, var) if e.inverse else (var, subvar)
            atom = f"({rel} {a} {b})"
        else:
            self.extended = True
            lo, hi = (q.min, q.max) if q is not None else (0, None)
            atom = (f"(count-range {lo} {'*' if hi is None else hi} "
                    f"{var} {rel} {_spell_term(d.type)})")

        if e.modality is Modality.POSSIBILITY:
            self.extended = True
            atom = f"(possible {atom})"
        if e.meta:
            self.extended = True
            metas = " ".join(self.edge_atom("?edge", m, [], []) for m in e.meta)
            atom = f"(with-meta {atom} {metas})"
        return atom


def _exists(bindings, conjuncts) -> str:
    body = _and(conjuncts)
    if not bindings:
        return body
    return f"(exists ({' '.join(bindings)}) {body})"


def _and(conjuncts) -> str:
    conjuncts = [c for c in conjuncts if c]
    if not conjuncts:
        return "true"
    if len(conjuncts) == 1:
        return conjuncts[0]
    return f"(and {' '.join(conjuncts)})"


def _free_vars(node: ConceptNode):
    if node.variable is not None:
        yield node.variable
    if node.embedded is not None:
        yield from _free_vars(node.embedded.body)
    for e in node.attachments:
        yield from _free_vars(e.destination)
        for m in e.meta:
            yield from _free_vars(m.destination)


def export_logic(g: StatementGraph) -> LogicExport:
    """Export a statement to s-expression logic; reify what FOL cannot say."""
    ex = _Exporter()
    # the exporter splices plain-existential subtrees into the enclosing
    # scope; run through a small driver that honors that
    text = _export_flattening(ex, g.root)
    return LogicExport(text=text, extended=ex.extended)


def _export_flattening(ex: "_Exporter", root: ConceptNode) -> str:
    return ex.statement(root)


# ---------------------------------------------------------------------------
# s-expression utilities (used by tests and the decoder)


def parse_sexpr(text: str):
    """Parse one s-expression into nested lists of atoms (strings)."""
    toks = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "()":
            toks.append(c)
            i += 1
            continue
        if c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 2 if text[j] == "\\" else 1
            toks.append(text[i:j + 1])
            i = j + 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in "()":
            j += 1
        toks.append(text[i:j])
        i = j

    pos = 0

    def read():
        nonlocal pos
        if pos >= len(toks):
            raise ValueError("unexpected end of s-expression")
        t = toks[pos]
        pos += 1
        if t == "(":
            items = []
            while pos < len(toks) and toks[pos] != ")":
                items.append(read())
            if pos >= len(toks):
                raise ValueError("unbalanced parentheses")
            pos += 1
            return items
        if t == ")":
            raise ValueError("unexpected ')'")
        return t

    out = read()
    if pos != len(toks):
        raise ValueError("trailing tokens after s-expression")
    return out


def normalize_sexpr(x, varmap=None):
    """Normalize for structural comparison: bound variables are renamed in
    order of first appearance and `%` in term atoms reads as `#` (some
    predicate-logic renderings escape `#` that way)."""
    if varmap is None:
        varmap = {}

    def walk(y):
        if isinstance(y, list):
            return [walk(v) for v in y]
        if isinstance(y, str) and y.startswith("?"):
            if y not in varmap:
                varmap[y] = f"?v{len(varmap) + 1}"
            return varmap[y]
        if isinstance(y, str):
            return y.replace("%", "#")
        return y

    return walk(x)


def decode_count_range(sexpr):
    """Reverse the `(count-range LO HI ?x REL TYPE)` encoding.

    Returns (lo, hi, var, relation, type) with hi None when `*`.
    Accepts parsed lists or raw text; searches nested structure for the
    first count-range form.
    """
    if isinstance(sexpr, str):
        sexpr = parse_sexpr(sexpr)

    def find(y):
        if isinstance(y, list):
            if y and y[0] == "count-range":
                return y
            for item in y:
                got = find(item)
                if got is not None:
                    return got
        return None

    form = find(sexpr)
    if form is None:
        raise ValueError("no count-range form present")
    _, lo, hi, var, rel, typ = form
    return int(lo), (None if hi == "*" else int(hi)), var, rel, typ


# ---------------------------------------------------------------------------
# expressiveness


_FOL_SAFE = "fol"
_TRIPLE_SAFE = "triples"


def expressiveness_report(g: StatementGraph) -> dict[str, ExpressivenessReport]:
    """Say, per target, whether the graph needs reification and why."""
    offenders_fol: set[str] = set()
    offenders_triples: set[str] = set()

    def check_node(node: ConceptNode, *, root: bool):
        q = node.quantifier
        if node.embedded is not None:
            label = "context" if node.attachments else "meta-statement"
            offenders_fol.add(label)
            offenders_triples.add(label)
            check_node(node.embedded.body, root=True)
        if q is not None:
            if q.kind is QuantKind.AT_LEAST_PERCENT:
                offenders_fol.add("AtLeastPercent")
                offenders_triples.add("AtLeastPercent")
            elif q.kind is QuantKind.UNIVERSAL:
                offenders_triples.add("Universal")
            elif not q.is_existential:
                offenders_fol.add("Cardinality")
                offenders_triples.add("Cardinality")
        for e in node.attachments:
            if e.modality is Modality.POSSIBILITY:
                offenders_fol.add("Possibility")
                offenders_triples.add("Possibility")
            if e.meta:
                offenders_fol.add("meta-statement")
                offenders_triples.add("meta-statement")
                for m in e.meta:
                    check_node(m.destination, root=False)
            check_node(e.destination, root=False)

    check_node(g.root, root=True)

    return {
        "FOL-export": ExpressivenessReport(
            "FOL-export", not offenders_fol, sorted(offenders_fol)),
        "plain-triples": ExpressivenessReport(
            "plain-triples", not offenders_triples, sorted(offenders_triples)),
    }
