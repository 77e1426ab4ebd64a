"""The knowledge base store: one specialization hierarchy for everything.

Terms and statements are stored as KbObjects.  Every live object sits at a
unique place in a single acyclic hierarchy rooted at the built-in `thing`
term: direct generalization/specialization links form a transitive
reduction of the ordering.  The ordering combines:

* statement vs statement: structural subsumption;
* statement vs term: the statement's root type at-or-below the term, or
  plain subsumption against the bare existential statement of the term;
* term vs term: ontology subtyping;
* explicitly asserted links (the only way informal objects are placed);
* the root generalizes everything.

Statement identity is the content hash of the canonical form plus the
author, so the same sentence by two authors is two objects (beliefs are
per-author).  Term objects are shared, keyed by the term itself.

Writes are serialized by a single lock; objects are immutable once stored
except for their link sets, ownership, and tombstone flag.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .notation import (
    THING,
    ConceptNode,
    Modality,
    Quantifier,
    QuantKind,
    StatementGraph,
    Term,
)
from .ontology import Ontology, bootstrap_ontology
from .subsumption import subsumes

__all__ = [
    "KbObject",
    "KbStore",
    "QueryFilter",
    "ConflictReport",
    "UnknownId",
    "CycleWouldForm",
]


class UnknownId(KeyError):
    pass


class CycleWouldForm(Exception):
    """The object is equal to an existing one; adding it would not get a
    unique place (a duplicate, handled by the editing protocol)."""


Payload = Union[Term, StatementGraph]


@dataclass
class KbObject:
    id: str
    kind: str                    # "term" | "statement"
    payload: Payload
    author: str
    created_at: float
    owner: str
    tombstoned: bool = False
    direct_generalizations: set = field(default_factory=set)
    direct_specializations: set = field(default_factory=set)

    def spelled(self) -> str:
        if self.kind == "term":
            return self.payload.spelled()
        return self.payload.canonical_form()


@dataclass
class QueryFilter:
    spec_of: Optional[StatementGraph] = None
    author_kinds: Optional[object] = None      # predicate over author ids
    min_usefulness: Optional[float] = None

    def __post_init__(self):
        if self.spec_of is None and self.author_kinds is None \
                and self.min_usefulness is None:
            raise ValueError("a query filter needs at least one criterion")


@dataclass
class ConflictReport:
    redundant_with: list = field(default_factory=list)
    inconsistent_with: list = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.redundant_with and not self.inconsistent_with


def statement_id(g: StatementGraph, author: str) -> str:
    return hashlib.sha256(
        (g.canonical_form() + "\x00" + author).encode()).hexdigest()


def term_id(t: Term) -> str:
    return hashlib.sha256(("term\x00" + t.spelled()).encode()).hexdigest()


def trivial_statement(t: Term) -> StatementGraph:
    return StatementGraph(ConceptNode(quantifier=Quantifier.existential(),
                                      type=t))


class KbStore:
    def __init__(self, onto: Optional[Ontology] = None,
                 bootstrap: bool = True):
        self.onto = onto if onto is not None else bootstrap_ontology()
        self.objects: dict[str, KbObject] = {}
        self.term_objects: dict[Term, str] = {}
        self.explicit_links: set[tuple] = set()     # (child_id, parent_id)
        self.related_edges: set[tuple] = set()      # (a, b, label)
        # statement ids keyed by the up-closure of their terms (candidates
        # that may SPECIALIZE a probe) and by their literal terms
        # (candidates that may GENERALIZE a probe)
        self._up_index: dict[Term, set] = {}
        self._term_index: dict[Term, set] = {}
        self._root_index: dict[Term, set] = {}
        self._terms_cache: dict[str, frozenset] = {}
        self._anchors_cache: dict[str, frozenset] = {}
        self._rootinfo_cache: dict[str, object] = {}
        self._sig_cache: dict[str, tuple] = {}
        self._anchorless: set[str] = set()
        self._lock = threading.RLock()

        root_term = THING
        self.root_id = term_id(root_term)
        self.objects[self.root_id] = KbObject(
            id=self.root_id, kind="term", payload=root_term,
            author="system", created_at=0.0, owner="system")
        self.term_objects[root_term] = self.root_id
        if bootstrap:
            for t in sorted(self.onto.terms(), key=lambda x: x.spelled()):
                self._ensure_term(t, "system", 0.0)

    # ------------------------------------------------------------------
    # basics

    def get(self, oid: str) -> KbObject:
        try:
            return self.objects[oid]
        except KeyError:
            raise UnknownId(oid)

    def live_objects(self) -> Iterable[KbObject]:
        return (o for o in self.objects.values() if not o.tombstoned)

    def live_statements(self) -> Iterable[KbObject]:
        return (o for o in self.live_objects() if o.kind == "statement")

    def find_statement(self, g: StatementGraph, author: str) -> Optional[KbObject]:
        obj = self.objects.get(statement_id(g, author))
        if obj is None or obj.tombstoned:
            return None
        return obj

    # ------------------------------------------------------------------
    # ordering

    def _term_up_closure(self, terms: Iterable[Term]) -> set:
        out = set()
        for t in terms:
            if t.is_informal:
                out.add(t)
                continue
            out.add(t)
            out |= self.onto.ancestors(t)
        out.add(THING)
        return out

    def _statement_terms(self, g: StatementGraph) -> frozenset:
        key = g.canonical_form()
        got = self._terms_cache.get(key)
        if got is None:
            got = frozenset(g.terms())
            self._terms_cache[key] = got
        return got

    def _anchor_terms(self, g: StatementGraph) -> frozenset:
        """Type-position terms only (including informal heads, excluding
        `thing` and relation names): a statement can only subsume another
        when at least one of its anchors sits at-or-above one of the
        other's, so these drive comparison candidate selection."""
        key = g.canonical_form()
        got = self._anchors_cache.get(key)
        if got is not None:
            return got

        anchors: set[Term] = set()

        def walk(node: ConceptNode):
            if node.type is not None and node.type != THING:
                anchors.add(node.type)
            if node.embedded is not None:
                walk(node.embedded.body)
            for e in node.attachments:
                walk(e.destination)
                for m in e.meta:
                    walk(m.destination)

        walk(g.root)
        got = frozenset(anchors)
        self._anchors_cache[key] = got
        return got

    def _root_sig(self, g: StatementGraph):
        """Cheap conservative summary used to rule out subsumption without
        walking graphs: (kind, lower, upper, desc-vacuous)."""
        key = g.canonical_form()
        got = self._sig_cache.get(key)
        if got is not None:
            return got
        from .subsumption import _desc_vacuous
        q = g.root.quantifier
        if g.root.is_literal:
            sig = ("other", 0, None, False)
        elif q is None or (q.kind is QuantKind.CARDINALITY):
            lo, hi = (q.min, q.max) if q is not None else (1, None)
            sig = ("card", lo, hi, False)
        elif q.kind is QuantKind.UNIVERSAL:
            sig = ("every", 0, None, _desc_vacuous(g.root))
        else:
            sig = ("pct", 0, None, _desc_vacuous(g.root))
        self._sig_cache[key] = sig
        return sig

    def _maybe_subsumes(self, general: StatementGraph,
                        specific: StatementGraph) -> bool:
        """Necessary conditions only; False means subsumes() must be False."""
        gk, glo, ghi, gvac = self._root_sig(general)
        sk, slo, shi, _ = self._root_sig(specific)
        if gk == "every":
            return gvac or sk == "every"
        if gk == "pct":
            return gvac or sk in ("every", "pct")
        if gk == "card":
            if glo >= 1 and not (sk == "card" and slo >= 1):
                return False
            if ghi is not None and not (sk == "card" and shi is not None):
                return False
        return True

    def _below_base(self, a: KbObject, b: KbObject) -> bool:
        """a strictly below b by the base rules (no closure, no equality)."""
        if a.id == b.id:
            return False
        if b.id == self.root_id:
            return True
        if a.id == self.root_id:
            return False
        if (a.id, b.id) in self.explicit_links:
            return True
        if a.kind == "term" and b.kind == "term":
            return self.onto.is_subtype(a.payload, b.payload) \
                and not self.onto.is_subtype(b.payload, a.payload)
        if a.kind == "statement" and b.kind == "term":
            root = a.payload.root
            if root.type is not None and not root.type.is_informal \
                    and self.onto.is_subtype(root.type, b.payload):
                return True
            return subsumes(trivial_statement(b.payload), a.payload, self.onto)
        if a.kind == "statement" and b.kind == "statement":
            if not self._maybe_subsumes(b.payload, a.payload):
                return False
            return subsumes(b.payload, a.payload, self.onto) \
                and not subsumes(a.payload, b.payload, self.onto)
        return False

    def _reachable_up(self, start: str) -> set:
        """Transitive closure upward over stored direct links."""
        seen, stack = set(), [start]
        while stack:
            for p in self.objects[stack.pop()].direct_generalizations:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    # ------------------------------------------------------------------
    # classification

    def _live(self, ids: set) -> list[KbObject]:
        out = []
        for oid in ids:
            o = self.objects.get(oid)
            if o is not None and not o.tombstoned:
                out.append(o)
        return out

    def _specializer_candidates(self, g: StatementGraph) -> list[KbObject]:
        """Statements that could sit BELOW g: some anchor of theirs must
        lie at or under one of g's anchors."""
        anchors = self._anchor_terms(g)
        if not anchors:
            return list(self.live_statements())
        cand: set[str] = set(self._anchorless)
        for t in anchors:
            cand |= self._up_index.get(t, set())
        return self._live(cand)

    def _generalizer_candidates(self, g: StatementGraph) -> list[KbObject]:
        """Statements that could sit ABOVE g: they must carry an anchor at
        or above one of g's anchors (or have none at all)."""
        anchors = self._anchor_terms(g)
        if not anchors:
            return list(self.live_statements())
        cand: set[str] = set(self._anchorless)
        for t in self._term_up_closure(anchors):
            cand |= self._term_index.get(t, set())
        return self._live(cand)

    def _term_candidates(self, g: StatementGraph) -> list[KbObject]:
        terms = self._statement_terms(g)
        up = self._term_up_closure(terms)
        down = {t for t in self.term_objects
                if any(self.onto.is_subtype(t, gt) for gt in terms
                       if not gt.is_informal)}
        out = []
        for t, oid in self.term_objects.items():
            o = self.objects[oid]
            if not o.tombstoned and (t in up or t in down):
                out.append(o)
        return out

    def classify(self, payload: Payload, author: str = "") -> tuple[set, set]:
        """Compute the transitive-reduction placement for a payload.

        Returns (direct_generalizations, direct_specializations) as id
        sets; raises CycleWouldForm when an equal same-author object is
        already stored.  Idempotent: classifying a stored object's payload
        returns its current links.
        """
        with self._lock:
            if isinstance(payload, Term):
                oid = self.term_objects.get(payload)
                if oid is not None:
                    o = self.objects[oid]
                    return set(o.direct_generalizations), set(o.direct_specializations)
                return self._classify_term(payload)
            existing = self.objects.get(statement_id(payload, author))
            if existing is not None and not existing.tombstoned:
                raise CycleWouldForm(
                    "an equal statement by the same author is already placed")
            return self._classify_statement(payload, author)

    def _classify_term(self, t: Term) -> tuple[set, set]:
        probe = KbObject(id="?", kind="term", payload=t, author="",
                         created_at=0.0, owner="")
        cands = [self.objects[oid] for oid in self.term_objects.values()
                 if not self.objects[oid].tombstoned]
        return self._reduce_placement(probe, cands)

    def _classify_statement(self, g: StatementGraph, author: str) -> tuple[set, set]:
        probe = KbObject(id="?", kind="statement", payload=g, author=author,
                         created_at=0.0, owner=author)
        terms = self._term_candidates(g)
        ups = self._generalizer_candidates(g) + terms
        downs = self._specializer_candidates(g) + terms
        return self._reduce_placement(probe, ups, downs)

    def _reduce_placement(self, probe: KbObject, ups: list[KbObject],
                          downs: Optional[list] = None) -> tuple[set, set]:
        if downs is None:
            downs = ups
        above = [c for c in ups if self._below_base(probe, c)]
        below = [c for c in downs if self._below_base(c, probe)]
        above_ids = {c.id for c in above}
        below_ids = {c.id for c in below}

        # a parent is direct only if no other candidate parent sits below it
        parents = {c.id for c in above
                   if not any(c.id in self._reachable_up(o)
                              for o in above_ids - {c.id})}
        # a child is direct only if no other candidate child sits above it
        children = {cid for cid in below_ids
                    if not (self._reachable_up(cid) & below_ids)}
        if not parents:
            parents = {self.root_id}
        return parents, children

    # ------------------------------------------------------------------
    # insertion / removal

    def _ensure_term(self, t: Term, author: str, ts: float) -> KbObject:
        with self._lock:
            oid = self.term_objects.get(t)
            if oid is not None:
                obj = self.objects[oid]
                if obj.tombstoned:
                    obj.tombstoned = False
                return obj
            gens, specs = self._classify_term(t)
            obj = KbObject(id=term_id(t), kind="term", payload=t,
                           author=author, created_at=ts, owner=author)
            self.objects[obj.id] = obj
            self.term_objects[t] = obj.id
            self._wire(obj, gens, specs)
            return obj

    def add_term(self, t: Term, author: str, ts: float) -> KbObject:
        return self._ensure_term(t, author, ts)

    def add_statement(self, g: StatementGraph, author: str,
                      ts: float) -> KbObject:
        """Store a statement (protocol checks happen upstream)."""
        with self._lock:
            for t in set(g.terms()):
                if not t.is_informal:
                    self._ensure_term(t, author, ts)
            oid = statement_id(g, author)
            existing = self.objects.get(oid)
            if existing is not None and not existing.tombstoned:
                return existing
            gens, specs = self._classify_statement(g, author)
            if existing is not None:
                # resurrect a removed statement under its original identity
                obj = existing
                obj.tombstoned = False
                obj.owner = author
                obj.created_at = ts
            else:
                obj = KbObject(id=oid, kind="statement", payload=g,
                               author=author, created_at=ts, owner=author)
            self.objects[oid] = obj
            anchors = self._anchor_terms(g)
            if not anchors:
                self._anchorless.add(oid)
            for t in self._term_up_closure(anchors):
                self._up_index.setdefault(t, set()).add(oid)
            for t in anchors:
                self._term_index.setdefault(t, set()).add(oid)
            info = self._root_info(g)
            if info is not None:
                self._root_index.setdefault(info[1], set()).add(oid)
            self._wire(obj, gens, specs)
            self._record_ontology_assertions(g)
            return obj

    def _wire(self, obj: KbObject, parents: set, children: set):
        obj.direct_generalizations = set(parents)
        obj.direct_specializations = set(children)
        for p in parents:
            self.objects[p].direct_specializations.add(obj.id)
        for c in children:
            self.objects[c].direct_generalizations.add(obj.id)
        # the new object may sit between a child and its former parent
        for c in children:
            child = self.objects[c]
            for p in parents & child.direct_generalizations:
                child.direct_generalizations.discard(p)
                self.objects[p].direct_specializations.discard(c)

    def _record_ontology_assertions(self, g: StatementGraph):
        """`X subtype: Y` edges between bare formal types feed the ontology."""
        def walk(node: ConceptNode):
            for e in node.attachments:
                d = e.destination
                if (e.relation.name == "subtype" and not e.inverse
                        and node.type is not None and d.type is not None
                        and not node.type.is_informal and not d.type.is_informal
                        and e.modality is Modality.PLAIN):
                    if not self.onto.is_subtype(node.type, d.type):
                        try:
                            self.onto.add_subtype(d.type, node.type)
                        except Exception:
                            pass
                if not d.is_literal and d.embedded is None:
                    walk(d)
                if d.embedded is not None:
                    walk(d.embedded.body)

        walk(g.root)

    def assert_link(self, child_id: str, parent_id: str):
        """Explicitly place child below parent (how informal objects and
        corrective placements enter the hierarchy)."""
        with self._lock:
            child, parent = self.get(child_id), self.get(parent_id)
            if child_id == parent_id or parent_id in self._reachable_up(child_id):
                return
            if child_id in self._reachable_up(parent_id):
                raise CycleWouldForm("link would create a cycle")
            self.explicit_links.add((child_id, parent_id))
            child.direct_generalizations.add(parent_id)
            parent.direct_specializations.add(child_id)
            if self.root_id in child.direct_generalizations \
                    and len(child.direct_generalizations) > 1:
                child.direct_generalizations.discard(self.root_id)
                self.objects[self.root_id].direct_specializations.discard(child_id)

    def add_related_edge(self, a: str, b: str, label: str):
        with self._lock:
            self.related_edges.add((a, b, label))

    def remove_statement(self, oid: str):
        """Tombstone and repair links so reachability survives."""
        with self._lock:
            obj = self.get(oid)
            parents = set(obj.direct_generalizations)
            children = set(obj.direct_specializations)
            for p in parents:
                self.objects[p].direct_specializations.discard(oid)
            for c in children:
                self.objects[c].direct_generalizations.discard(oid)
            for c in children:
                child = self.objects[c]
                for p in parents:
                    if p not in self._reachable_up(c):
                        child.direct_generalizations.add(p)
                        self.objects[p].direct_specializations.add(c)
                if not child.direct_generalizations:
                    child.direct_generalizations.add(self.root_id)
                    self.objects[self.root_id].direct_specializations.add(c)
            obj.tombstoned = True
            obj.direct_generalizations = set()
            obj.direct_specializations = set()
            if obj.kind == "statement":
                anchors = self._anchor_terms(obj.payload)
                self._anchorless.discard(oid)
                for t in self._term_up_closure(anchors):
                    self._up_index.get(t, set()).discard(oid)
                for t in anchors:
                    self._term_index.get(t, set()).discard(oid)
                info = self._root_info(obj.payload)
                if info is not None:
                    self._root_index.get(info[1], set()).discard(oid)

    # ------------------------------------------------------------------
    # conflicts

    def detect_conflict(self, g: StatementGraph, author: str) -> ConflictReport:
        """Sound, deliberately incomplete desk-scale checks: same-author
        redundancy, interval clashes on matched paths, declared-disjoint
        type assertions."""
        report = ConflictReport()
        with self._lock:
            for o in self._specializer_candidates(g):
                if o.author == author and self._maybe_subsumes(g, o.payload) \
                        and subsumes(g, o.payload, self.onto):
                    report.redundant_with.append(o.id)
            for o in self._conflict_candidates(g):
                if self._intervals_clash(g, o.payload):
                    report.inconsistent_with.append(o.id)
            disjoint_hit = self._disjoint_assertion(g)
            if disjoint_hit is not None:
                report.inconsistent_with.append(disjoint_hit)
        report.redundant_with.sort()
        report.inconsistent_with.sort()
        return report

    def _conflict_candidates(self, g: StatementGraph):
        # interval clashes need subtype-related root classes, so only
        # statements whose root type relates to g's can participate
        info = self._root_info(g)
        if info is None:
            return
        groot = info[1]
        related: set[str] = set()
        for t, ids in self._root_index.items():
            if self.onto.is_subtype(t, groot) or self.onto.is_subtype(groot, t):
                related |= ids
        for oid in related:
            o = self.objects.get(oid)
            if o is not None and not o.tombstoned:
                yield o

    def _root_info(self, g: StatementGraph):
        key = g.canonical_form()
        if key in self._rootinfo_cache:
            return self._rootinfo_cache[key]
        q = g.root.quantifier
        t = g.root.type
        info = None
        if t is not None and not t.is_informal and q is not None:
            if q.kind is QuantKind.UNIVERSAL:
                info = ("universal", t)
            elif q.kind is QuantKind.CARDINALITY and q.min >= 1:
                info = ("exists", t)
        self._rootinfo_cache[key] = info
        return info

    def _intervals_clash(self, g1: StatementGraph, g2: StatementGraph) -> bool:
        """Two statements impose empty-intersection counts on a matched
        path.  Universal statements are read with existential import."""
        i1, i2 = self._root_info(g1), self._root_info(g2)
        if i1 is None or i2 is None:
            return False
        k1, t1 = i1
        k2, t2 = i2
        if "universal" not in (k1, k2):
            return False        # two existentials may describe two objects
        if not (self.onto.is_subtype(t1, t2) or self.onto.is_subtype(t2, t1)):
            return False
        if k1 == "exists" and not self.onto.is_subtype(t1, t2):
            return False
        if k2 == "exists" and not self.onto.is_subtype(t2, t1):
            return False
        for e1 in g1.root.attachments:
            for e2 in g2.root.attachments:
                if e1.relation != e2.relation or e1.inverse != e2.inverse:
                    continue
                if (e1.modality is not Modality.PLAIN
                        or e2.modality is not Modality.PLAIN):
                    continue
                d1, d2 = e1.destination, e2.destination
                if d1.type is None or d2.type is None:
                    continue
                q1, q2 = d1.quantifier, d2.quantifier
                if q1 is None or q2 is None \
                        or q1.kind is not QuantKind.CARDINALITY \
                        or q2.kind is not QuantKind.CARDINALITY:
                    continue
                # lower bound on a subtype vs upper bound on a supertype
                if q2.max is not None and q1.min > q2.max \
                        and self.onto.is_subtype(d1.type, d2.type):
                    return True
                if q1.max is not None and q2.min > q1.max \
                        and self.onto.is_subtype(d2.type, d1.type):
                    return True
        return False

    def _disjoint_assertion(self, g: StatementGraph) -> Optional[str]:
        """A subtype assertion or modifier between declared-disjoint types."""
        from .notation import ATTR

        def walk(node: ConceptNode):
            if node.type is not None and not node.type.is_informal:
                for e in node.attachments:
                    d = e.destination
                    if d.type is None or d.type.is_informal:
                        continue
                    if e.relation.name in ("subtype", "specialization") \
                            and self.onto.are_disjoint(node.type, d.type):
                        return d.type
                    if e.relation == ATTR \
                            and self.onto.are_disjoint(node.type, d.type):
                        return d.type
            for e in node.attachments:
                d = e.destination
                if not d.is_literal and d.embedded is None:
                    got = walk(d)
                    if got is not None:
                        return got
            return None

        t = walk(g.root)
        if t is None:
            return None
        oid = self.term_objects.get(t)
        return oid if oid is not None else self.root_id

    # ------------------------------------------------------------------
    # queries

    def query(self, f: QueryFilter,
              scores: Optional[dict] = None) -> tuple[list, list]:
        """Matching statements plus the induced specialization edges among
        the results (child_id, parent_id)."""
        with self._lock:
            results = []
            for o in self.live_statements():
                if f.spec_of is not None \
                        and not subsumes(f.spec_of, o.payload, self.onto):
                    continue
                if f.author_kinds is not None and not f.author_kinds(o.author):
                    continue
                if f.min_usefulness is not None:
                    score = (scores or {}).get(o.id, 0.0)
                    if score < f.min_usefulness:
                        continue
                results.append(o)
            results.sort(key=lambda o: o.id)
            ids = {o.id for o in results}
            edges = []
            for o in results:
                for other in results:
                    if o.id == other.id:
                        continue
                    if self._orders_below(o, other) \
                            and not self._has_intermediate(o, other, ids):
                        edges.append((o.id, other.id))
            return results, sorted(edges)

    def _orders_below(self, a: KbObject, b: KbObject) -> bool:
        if b.id in self._reachable_up(a.id):
            return True
        return self._below_base(a, b)

    def _has_intermediate(self, a: KbObject, b: KbObject, ids: set) -> bool:
        for mid in ids - {a.id, b.id}:
            m = self.objects[mid]
            if self._orders_below(a, m) and self._orders_below(m, b):
                return True
        return False

    def neighborhood(self, oid: str, depth: int) -> tuple[list, list]:
        """Objects within `depth` hops over hierarchy, term-usage, and
        registered related edges; returns (objects, labeled edges)."""
        with self._lock:
            self.get(oid)
            adj: dict[str, set] = {}

            def connect(a, b, label):
                adj.setdefault(a, set()).add((b, label))
                adj.setdefault(b, set()).add((a, label))

            for o in self.live_objects():
                for p in o.direct_generalizations:
                    connect(o.id, p, "specializes")
                if o.kind == "statement":
                    for t in set(o.payload.terms()):
                        tid = self.term_objects.get(t)
                        if tid is not None:
                            connect(o.id, tid, "uses")
            for a, b, label in self.related_edges:
                connect(a, b, label)

            seen = {oid}
            frontier = [oid]
            edges = set()
            for _ in range(depth):
                nxt = []
                for cur in frontier:
                    for other, label in adj.get(cur, ()):
                        edges.add((min(cur, other), max(cur, other), label))
                        if other not in seen:
                            seen.add(other)
                            nxt.append(other)
                frontier = nxt
            objs = [self.objects[i] for i in sorted(seen)]
            return objs, sorted(edges)

    # ------------------------------------------------------------------
    # invariant checks and exports

    def check_hierarchy(self) -> None:
        """Raise when acyclicity or transitive reduction is violated."""
        live = {o.id: o for o in self.live_objects()}
        colors: dict[str, int] = {}

        def dfs(oid):
            colors[oid] = 1
            for p in live[oid].direct_generalizations:
                if p not in live:
                    raise AssertionError(f"dangling parent link {oid}->{p}")
                c = colors.get(p, 0)
                if c == 1:
                    raise AssertionError("cycle in hierarchy")
                if c == 0:
                    dfs(p)
            colors[oid] = 2

        for oid in live:
            if colors.get(oid, 0) == 0:
                dfs(oid)
        for o in live.values():
            if o.id != self.root_id and not o.direct_generalizations:
                raise AssertionError(f"{o.id} unreachable from root")
            for p in o.direct_generalizations:
                for p2 in o.direct_generalizations:
                    if p != p2 and p in self._reachable_up(p2):
                        raise AssertionError("direct link duplicates a path")

    def dump_fl(self) -> str:
        """External bulk format: one canonical statement per line with the
        author carried in a trailing comment."""
        lines = []
        for o in sorted(self.live_statements(), key=lambda o: o.id):
            lines.append(f"{o.payload.canonical_form()} // author={o.author}")
        return "\n".join(lines) + ("\n" if lines else "")

    def load_fl(self, text: str, default_author: str = "p",
                ts: float = 0.0) -> list[KbObject]:
        """Load a bulk FL file (the dump format); `// author=X` comments
        attribute the following statement."""
        from .notation import parse

        out = []
        author = default_author
        pending: list[str] = []
        for rawline in text.splitlines():
            line = rawline.strip()
            if "// author=" in rawline:
                author = rawline.split("// author=", 1)[1].strip()
            if not line or line.startswith("//"):
                continue
            code = line.split("//", 1)[0].rstrip()
            pending.append(code)
            if code.endswith(";"):
                stmt = parse(" ".join(pending))
                out.append(self.add_statement(stmt, author, ts))
                pending = []
                author = default_author
        if pending:
            stmt = parse(" ".join(pending))
            out.append(self.add_statement(stmt, author, ts))
        return out

    def hierarchy_edges(self) -> str:
        """`childId<TAB>parentId` edge list of the live hierarchy."""
        rows = []
        for o in sorted(self.live_objects(), key=lambda o: o.id):
            for p in sorted(o.direct_generalizations):
                rows.append(f"{o.id}\t{p}")
        return "\n".join(rows) + ("\n" if rows else "")
