"""Structural subsumption between statement graphs.

`subsumes(general, specific, onto)` decides whether every situation
described by `specific` also satisfies `general`, by mapping the general
graph into the specific one.  It is a structural decision procedure, not a
theorem prover: it is sound for the tree-shaped counting fragment (checked
exhaustively against a finite-model oracle in the test suite) and
deliberately conservative elsewhere.

Direction conventions, per requirement side of a general edge `[lo, hi]`:

* lower bounds transfer downward: the supporting specific edge must count
  a class at least as specific (`node_implies(spec_dest, gen_dest)`) with
  a lower bound >= lo;
* finite upper bounds transfer upward: bounding a class only bounds its
  subclasses, so the supporting specific edge must count a class at least
  as general (`node_implies(gen_dest, spec_dest)`) with an upper bound
  <= hi.  Both sides of a two-sided bound may be supported by different
  specific edges.

A general root with a lower bound may also be supported by any
existence-guaranteed node inside the specific tree (root lower bound >= 1
and every edge on the path carrying a plain-modality lower bound >= 1);
the guaranteed count is the last edge's lower bound.  That covers
entailments such as "some legs exist" from "a man with two legs".

Universal and percentage roots only map root-to-root: for universals the
subtype direction flips (the general may range over a subtype of what the
specific ranges over); percentages compare only over the identical type.
Possibility edges support possibility requirements (an actual relation
also supports a "can be"); informal terms and literals match exactly;
embedded statements compare by recursive subsumption.

Everything here is pure and safe for concurrent callers.
"""

from __future__ import annotations

from typing import Optional

from .notation import (
    THING,
    ConceptNode,
    Modality,
    QuantKind,
    RelationEdge,
    StatementGraph,
    Term,
)
from .ontology import Ontology

__all__ = ["subsumes", "node_implies"]

_UNBOUNDED = None


def _type_le(a: Term, b: Term, onto: Ontology) -> bool:
    return onto.is_subtype(a, b)


def _edge_bounds(edge: RelationEdge) -> tuple[int, Optional[int]]:
    d = edge.destination
    if d.is_literal or d.embedded is not None or d.quantifier is None:
        return (1, _UNBOUNDED)
    q = d.quantifier
    if q.kind is QuantKind.CARDINALITY:
        return (q.min, q.max)
    return (1, _UNBOUNDED)      # universal/percent edges handled separately


def _rel_matches(ea: RelationEdge, eb: RelationEdge) -> bool:
    return ea.relation == eb.relation and ea.inverse == eb.inverse


def _modality_lower_ok(ea: RelationEdge, eb: RelationEdge) -> bool:
    if eb.modality is Modality.POSSIBILITY:
        return True             # an actual edge also supports a "can be"
    return ea.modality is Modality.PLAIN


def _meta_supported(ea: RelationEdge, eb: RelationEdge, onto: Ontology) -> bool:
    for mb in eb.meta:
        if not any(_rel_matches(ma, mb) and _modality_lower_ok(ma, mb)
                   and node_implies(ma.destination, mb.destination, onto)
                   and _meta_supported(ma, mb, onto)
                   for ma in ea.meta):
            return False
    return True


def _heads_imply(a: ConceptNode, b: ConceptNode, onto: Ontology) -> bool:
    """Pointwise: anything satisfying a's head satisfies b's head."""
    if b.is_literal or a.is_literal:
        if a.literal is None or b.literal is None:
            return False
        both_str = isinstance(a.literal, str) and isinstance(b.literal, str)
        both_num = (isinstance(a.literal, (int, float))
                    and isinstance(b.literal, (int, float)))
        return (both_str or both_num) and a.literal == b.literal
    if b.embedded is not None or a.embedded is not None:
        if a.embedded is not None and b.embedded is None:
            return b.type == THING      # a statement-term is still a thing
        if a.embedded is None or b.embedded is None:
            return False
        return _statement_subsumes(b.embedded.body, a.embedded.body, onto)
    return _type_le(a.type, b.type, onto)


def node_implies(a: ConceptNode, b: ConceptNode, onto: Ontology) -> bool:
    """Every individual satisfying description `a` satisfies `b`."""
    return _heads_imply(a, b, onto) and _edges_imply(a, b, onto)


def _edges_imply(a: ConceptNode, b: ConceptNode, onto: Ontology) -> bool:
    """Every individual carrying a's edges carries b's edge constraints."""
    for eb in b.attachments:
        dq = eb.destination.quantifier
        if dq is not None and dq.kind in (QuantKind.UNIVERSAL,
                                          QuantKind.AT_LEAST_PERCENT) \
                and not eb.destination.is_literal:
            if not _special_edge_supported(a, eb, onto):
                return False
            continue
        lo, hi = _edge_bounds(eb)
        if lo >= 1 and not _lower_edge_supported(a, eb, lo, onto):
            return False
        if hi is not _UNBOUNDED and not _upper_edge_supported(a, eb, hi, onto):
            return False
    return True


def _lower_edge_supported(a: ConceptNode, eb: RelationEdge, lo: int,
                          onto: Ontology) -> bool:
    for ea in a.attachments:
        if not _rel_matches(ea, eb) or not _modality_lower_ok(ea, eb):
            continue
        alo, _ = _edge_bounds(ea)
        if alo >= lo and node_implies(ea.destination, eb.destination, onto) \
                and _meta_supported(ea, eb, onto):
            return True
    return False


def _upper_edge_supported(a: ConceptNode, eb: RelationEdge, hi: int,
                          onto: Ontology) -> bool:
    for ea in a.attachments:
        if not _rel_matches(ea, eb) or ea.modality is not eb.modality:
            continue
        _, ahi = _edge_bounds(ea)
        if ahi is not _UNBOUNDED and ahi <= hi \
                and node_implies(eb.destination, ea.destination, onto) \
                and _meta_supported(ea, eb, onto):
            return True
    return False


def _special_edge_supported(a: ConceptNode, eb: RelationEdge,
                            onto: Ontology) -> bool:
    """Universal or percentage quantifiers on an edge destination: matched
    conservatively against an edge of the same shape."""
    dqb = eb.destination.quantifier
    for ea in a.attachments:
        if not _rel_matches(ea, eb) or ea.modality is not eb.modality:
            continue
        dqa = ea.destination.quantifier
        if dqa is None or ea.destination.is_literal:
            continue
        if dqa.kind is not dqb.kind and not (
                dqa.kind is QuantKind.UNIVERSAL
                and dqb.kind is QuantKind.AT_LEAST_PERCENT):
            continue
        if dqb.kind is QuantKind.AT_LEAST_PERCENT and dqa.kind is dqb.kind \
                and dqa.percent < dqb.percent:
            continue
        if ea.destination.type != eb.destination.type:
            continue
        if node_implies(ea.destination, eb.destination, onto) \
                and node_implies(eb.destination, ea.destination, onto) \
                and _meta_supported(ea, eb, onto):
            return True
    return False


# ---------------------------------------------------------------------------
# statement-level subsumption


def _guaranteed_nodes(root: ConceptNode):
    """Nodes of the specific tree whose existence (with a distinct-filler
    count) follows from the statement: root lower bound >= 1 and plain
    lower-bounded edges all the way down.  Yields (node, guaranteed_count)."""
    q = root.quantifier
    root_lo = 1
    if q is not None:
        if q.kind is not QuantKind.CARDINALITY:
            return          # universal/percent roots guarantee nothing
        root_lo = q.min
    if root_lo < 1 or root.is_literal:
        return
    yield root, root_lo

    def walk(node: ConceptNode):
        for e in node.attachments:
            if e.modality is not Modality.PLAIN:
                continue
            d = e.destination
            if d.is_literal:
                continue
            lo, _ = _edge_bounds(e)
            if lo >= 1:
                yield d, lo
                yield from walk(d)

    yield from walk(root)


def _desc_vacuous(node: ConceptNode) -> bool:
    """No edge constrains anything: every bound is 0..*."""
    return all(_edge_bounds(e) == (0, _UNBOUNDED)
               and (e.destination.quantifier is None
                    or e.destination.quantifier.kind is QuantKind.CARDINALITY)
               for e in node.attachments)


def _tautological(g: ConceptNode) -> bool:
    """True for generals no model can violate: universal or percentage
    roots whose description is vacuous, and 0..* cardinality roots."""
    q = g.quantifier
    if q is None or g.is_literal:
        return False
    if q.kind in (QuantKind.UNIVERSAL, QuantKind.AT_LEAST_PERCENT):
        return _desc_vacuous(g)
    if q.kind is QuantKind.CARDINALITY:
        return q.min == 0 and q.max is None
    return False


def _statement_subsumes(g: ConceptNode, s: ConceptNode, onto: Ontology) -> bool:
    qg = g.quantifier
    qs = s.quantifier

    if _tautological(g):
        return True

    if g.is_literal or s.is_literal:
        return _heads_imply(s, g, onto)

    if qg is not None and qg.kind is QuantKind.UNIVERSAL:
        if qs is None or qs.kind is not QuantKind.UNIVERSAL:
            return False
        if g.type is None or s.type is None:
            return False
        return _type_le(g.type, s.type, onto) and _edges_imply(s, g, onto)

    if qg is not None and qg.kind is QuantKind.AT_LEAST_PERCENT:
        if qs is not None and qs.kind is QuantKind.AT_LEAST_PERCENT:
            return (g.type is not None and g.type == s.type
                    and qs.percent >= qg.percent
                    and _edges_imply(s, g, onto))
        if qs is not None and qs.kind is QuantKind.UNIVERSAL:
            return (g.type is not None and s.type is not None
                    and _type_le(g.type, s.type, onto)
                    and _edges_imply(s, g, onto))
        return False

    # general root is cardinality-like (embedded/informal roots included)
    lo, hi = (1, _UNBOUNDED)
    if qg is not None and qg.kind is QuantKind.CARDINALITY:
        lo, hi = qg.min, qg.max

    lower_ok = lo == 0
    if not lower_ok:
        for node, count in _guaranteed_nodes(s):
            if count >= lo and node_implies(node, g, onto):
                lower_ok = True
                break

    upper_ok = hi is _UNBOUNDED
    if not upper_ok:
        if qs is not None and qs.kind is QuantKind.CARDINALITY \
                and qs.max is not None and qs.max <= hi \
                and node_implies(g, s, onto):
            upper_ok = True

    return lower_ok and upper_ok


def subsumes(general: StatementGraph, specific: StatementGraph,
             onto: Ontology) -> bool:
    """True when `general` is entailed by (generalizes) `specific`."""
    return _statement_subsumes(general.root, specific.root, onto)
