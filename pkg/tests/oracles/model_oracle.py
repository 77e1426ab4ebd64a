"""Brute-force entailment oracle over finite models.

Independent ground truth for statement subsumption: `entails(g, s)` says
whether every model of `s` with at most `max_n` elements satisfies `g`,
by exhaustively searching for a countermodel.  Nothing here is shared with
the production subsumption code; statements are compiled into plain tuples
and evaluated by counting bits.

Supported fragment (the random pair generator stays inside it):

* tree-shaped statements, height <= 1 freely; height 2 only when the pair
  uses a single relation;
* root quantifiers: cardinality ranges, `every`, `at least n% of`;
* edge quantifiers: cardinality ranges only;
* plain modality, no inverse edges, no meta annotations, no literals,
  no embedded statements, no informal terms.

A model is (domain of n elements, upward-closed type set per element,
filler set per element and relation).  Statements contain no constants,
so truth is isomorphism-invariant and type assignments are enumerated as
multisets.  For one element, a relation's filler set F ranges over the
2^n subsets of the domain; every edge condition "lo <= |F & mask| <= hi"
is represented as a bitset over that F-space, so the achievable
(general-bit, specific-bit) combinations per element come from four bitset
intersections instead of an explicit filler loop.  Height-1 satisfaction
bits are committed jointly (one achievable bit row per element) because
height-2 roots count fillers across elements.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from nexuskb.notation import (
    ConceptNode,
    Modality,
    QuantKind,
    StatementGraph,
)

UNBOUNDED = 1 << 30

_POPC = [bin(x).count("1") for x in range(1 << 16)]


# ---------------------------------------------------------------------------
# compiled statement form


@dataclass(frozen=True)
class OEdge:
    rel: str
    lo: int
    hi: int          # UNBOUNDED when open
    dest: "ONode"


@dataclass(frozen=True)
class ONode:
    type: str
    edges: tuple

    @property
    def height(self) -> int:
        return 0 if not self.edges else 1 + max(e.dest.height for e in self.edges)


@dataclass(frozen=True)
class ORoot:
    kind: str            # "card" | "every" | "percent"
    lo: int
    hi: int
    percent: Optional[Fraction]
    node: ONode


def compile_statement(g: StatementGraph) -> ORoot:
    """Translate a statement graph into oracle form; reject anything the
    oracle has no semantics for."""

    def node(n: ConceptNode) -> ONode:
        if n.is_literal or n.embedded is not None or n.variable is not None:
            raise ValueError("outside oracle fragment")
        if n.type.is_informal:
            raise ValueError("informal terms are outside the oracle fragment")
        edges = []
        for e in n.attachments:
            if e.inverse or e.meta or e.modality is not Modality.PLAIN:
                raise ValueError("outside oracle fragment")
            q = e.destination.quantifier
            if q is None or q.kind is not QuantKind.CARDINALITY:
                raise ValueError("edge quantifiers must be cardinalities")
            if e.relation.is_informal:
                raise ValueError("informal relations are outside the fragment")
            edges.append(OEdge(e.relation.spelled(), q.min,
                               UNBOUNDED if q.max is None else q.max,
                               node(e.destination)))
        return ONode(n.type.spelled(), tuple(edges))

    root = g.root
    q = root.quantifier
    n = node(root)
    if q is None:
        raise ValueError("root must be quantified")
    if q.kind is QuantKind.UNIVERSAL:
        return ORoot("every", 0, 0, None, n)
    if q.kind is QuantKind.AT_LEAST_PERCENT:
        return ORoot("percent", 0, 0, q.percent, n)
    if q.kind is QuantKind.CARDINALITY:
        return ORoot("card", q.min, UNBOUNDED if q.max is None else q.max, None, n)
    raise ValueError(f"unsupported root quantifier {q.kind}")


# ---------------------------------------------------------------------------
# type pools


class TypePool:
    """A small type hierarchy: child -> parent (single inheritance plus an
    implicit `thing` on top).  Provides the upward-closed type sets a model
    element may carry."""

    def __init__(self, parents: dict[str, str]):
        self.parents = dict(parents)

    def ancestors(self, t: str) -> set[str]:
        out = set()
        while t in self.parents:
            t = self.parents[t]
            if t == "thing":
                break
            out.add(t)
        return out

    def le(self, a: str, b: str) -> bool:
        return b == "thing" or a == b or b in self.ancestors(a)

    def restricted(self, used: set[str]) -> list[str]:
        keep = set()
        for t in used:
            if t == "thing":
                continue
            keep.add(t)
            keep.update(self.ancestors(t))
        return sorted(keep)

    def valid_typesets(self, pool: list[str]) -> list[frozenset]:
        sets = []
        for bits in itertools.product((0, 1), repeat=len(pool)):
            s = {t for t, b in zip(pool, bits) if b}
            if all(self.ancestors(t) & set(pool) <= s for t in s):
                sets.append(frozenset(s))
        return sets


# ---------------------------------------------------------------------------
# search internals


def _walk_nodes(n: ONode):
    yield n
    for e in n.edges:
        yield from _walk_nodes(e.dest)


def _root_truth(root: ORoot, sat_count: int, type_count: int) -> bool:
    if root.kind == "card":
        return root.lo <= sat_count <= root.hi
    if root.kind == "every":
        return sat_count == type_count
    p = root.percent
    return sat_count * 100 * p.denominator >= p.numerator * type_count


def _cond_bitset(mask: int, lo: int, hi: int, nf: int) -> int:
    """Bitset over filler-space: which F in [0, nf) satisfy
    lo <= |F & mask| <= hi."""
    out = 0
    for f in range(nf):
        if lo <= _POPC[f & mask] <= hi:
            out |= 1 << f
    return out


def _pairs_from_condsets(gset: int, sset: int, allf: int):
    """Achievable (gbit, sbit) combinations when one filler set drives both
    condition bitsets."""
    pairs = set()
    if gset & sset:
        pairs.add((1, 1))
    if gset & ~sset & allf:
        pairs.add((1, 0))
    if ~gset & sset & allf:
        pairs.add((0, 1))
    if ~gset & ~sset & allf:
        pairs.add((0, 0))
    return pairs


def _combine_pairs(per_rel: list[set]) -> set:
    out = {(1, 1)}
    for pr in per_rel:
        out = {(g1 & g2, s1 & s2) for (g1, s1) in out for (g2, s2) in pr}
        if not pr:
            return set()
    return out


def _search(specific: ORoot, general: Optional[ORoot], pool: TypePool,
            max_n: int):
    """Find a model of `specific` violating `general` (or any model of
    `specific` when general is None).  Returns a small dict or None."""
    roots = [r for r in (specific, general) if r is not None]
    used_types = {n.type for r in roots for n in _walk_nodes(r.node)}
    rels = sorted({e.rel for r in roots for n in _walk_nodes(r.node)
                   for e in n.edges})
    types = pool.restricted(used_types)
    typesets = pool.valid_typesets(types)

    h1 = []
    for r in roots:
        for e in r.node.edges:
            h = e.dest.height
            if h > 1:
                raise ValueError("oracle supports statement height <= 2")
            if h == 1 and e.dest not in h1:
                h1.append(e.dest)
    if h1 and len(rels) > 1:
        raise ValueError("height-2 statements need a single relation")

    for n in range(1, max_n + 1):
        nf = 1 << n                 # filler sets per element and relation
        allf = (1 << nf) - 1        # all-ones bitset over that filler space
        full = (1 << n) - 1

        for assign in itertools.combinations_with_replacement(typesets, n):
            ext = {t: 0 for t in types}
            for i, ts in enumerate(assign):
                for t in ts:
                    ext[t] |= 1 << i

            def emask(tname: int) -> int:
                return full if tname == "thing" else ext.get(tname, 0)

            # condition bitsets for edges with height-0 destinations,
            # grouped by relation, per root
            def leaf_condset(root: ORoot, rel: str) -> int:
                cs = allf
                for e in root.node.edges:
                    if e.rel == rel and e.dest.height == 0:
                        cs &= _cond_bitset(emask(e.dest.type), e.lo, e.hi, nf)
                return cs

            leaf_cs = {(id(r), rel): leaf_condset(r, rel)
                       for r in roots for rel in rels}

            # per element, per h1 node: bitset of F making that node true
            h1_cs = []
            for elem in range(n):
                per_node = []
                for d in h1:
                    if not (emask(d.type) >> elem) & 1:
                        per_node.append(0)
                        continue
                    cs = allf
                    for e in d.edges:
                        cs &= _cond_bitset(emask(e.dest.type), e.lo, e.hi, nf)
                    per_node.append(cs)
                h1_cs.append(per_node)

            # rows: committed h1 bit vectors with their F-space bitsets
            def rows_for(elem: int):
                rows = {}
                for bits in itertools.product((0, 1), repeat=len(h1)):
                    cs = allf
                    for j, b in enumerate(bits):
                        node_cs = h1_cs[elem][j]
                        cs &= node_cs if b else (~node_cs & allf)
                    if cs:
                        rows[bits] = cs
                return rows

            all_rows = [rows_for(e) for e in range(n)]
            if any(not r for r in all_rows):
                continue

            s_total = _POPC[emask(specific.node.type)]
            s_ext = emask(specific.node.type)
            if general is not None:
                g_total = _POPC[emask(general.node.type)]
                g_ext = emask(general.node.type)

            for rowchoice in itertools.product(*(r.items() for r in all_rows)):
                satmasks = [0] * len(h1)
                for elem, (bits, _cs) in enumerate(rowchoice):
                    for j, b in enumerate(bits):
                        if b:
                            satmasks[j] |= 1 << elem

                def root_condset(root: ORoot, elem: int, rowcs: int) -> int:
                    # one relation when h1 nodes exist; combine leaf + h1 parts
                    out = {}
                    for rel in rels:
                        cs = leaf_cs[(id(root), rel)]
                        for e in root.node.edges:
                            if e.rel == rel and e.dest.height == 1:
                                m = satmasks[h1.index(e.dest)]
                                cs &= _cond_bitset(m, e.lo, e.hi, nf)
                        out[rel] = cs
                    return out

                # DP over achievable (g_count, s_count)
                states = {(0, 0)}
                feasible = True
                for elem, (bits, rowcs) in enumerate(rowchoice):
                    gsets = root_condset(general, elem, rowcs) if general else None
                    ssets = root_condset(specific, elem, rowcs)
                    per_rel = []
                    for rel in rels:
                        space = rowcs if h1 else allf
                        gcs = (gsets[rel] if general else 0) & space
                        scs = ssets[rel] & space
                        # restrict the 4-region test to the committed space
                        pairs = set()
                        if gcs & scs:
                            pairs.add((1, 1))
                        if gcs & ~scs & space:
                            pairs.add((1, 0))
                        if ~gcs & scs & space:
                            pairs.add((0, 1))
                        if ~gcs & ~scs & space:
                            pairs.add((0, 0))
                        per_rel.append(pairs)
                    if not rels:
                        per_rel = [{(1, 1)}]
                    combos = _combine_pairs(per_rel)
                    if not combos:
                        feasible = False
                        break
                    gate_g = (g_ext >> elem) & 1 if general else 0
                    gate_s = (s_ext >> elem) & 1
                    contribs = {(g & gate_g, s & gate_s) for g, s in combos}
                    states = {(cg + g, cs + s)
                              for cg, cs in states for g, s in contribs}
                if not feasible:
                    continue

                for cg, cs in states:
                    if not _root_truth(specific, cs, s_total):
                        continue
                    if general is None:
                        return {"n": n, "assign": assign}
                    if not _root_truth(general, cg, g_total):
                        return {"n": n, "assign": assign}
    return None


def satisfiable(stmt: StatementGraph, pool: TypePool, max_n: int = 4) -> bool:
    """True when the statement has a model with at most max_n elements."""
    return _search(compile_statement(stmt), None, pool, max_n) is not None


def entails(general: StatementGraph, specific: StatementGraph,
            pool: TypePool, max_n: int = 4) -> bool:
    """True when no model of `specific` (size <= max_n) violates `general`."""
    g = compile_statement(general)
    s = compile_statement(specific)
    return _search(s, g, pool, max_n) is None
