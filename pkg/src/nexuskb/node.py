"""A knowledge base node: store + journal + protocol + ratings.

State is rebuilt by replaying the journal; `state_dump()` is a
deterministic full-state rendering, so two nodes with the same journal
produce bit-identical dumps.  All mutations go through the protocol and
are journaled before they are acknowledged.
"""

from __future__ import annotations

from typing import Callable, Optional, Union

from .notation import StatementGraph, parse
from .ontology import Ontology
from .protocol import (
    CorrectiveLink,
    EditEvent,
    EditProtocol,
    Journal,
)
from .store import KbStore, QueryFilter, UnknownId
from .valuation import (
    OutOfRange,
    RatingBook,
    UsefulnessScores,
    ValuationParams,
    compute_usefulness,
)

__all__ = ["KbNode"]


class KbNode:
    def __init__(self, journal_path: Optional[str] = None,
                 node_id: str = "node",
                 clock: Optional[Callable[[], float]] = None,
                 params: Optional[ValuationParams] = None,
                 onto: Optional[Ontology] = None):
        self.node_id = node_id
        self.params = params or ValuationParams()
        self.store = KbStore(onto=onto)
        self.journal = Journal(journal_path)
        self.ratings = RatingBook()
        self.protocol = EditProtocol(self.store, self.journal, clock)
        self.advertised_terms: list[str] = []
        if self.journal.events:
            self._replay(self.journal.events)

    # ------------------------------------------------------------------
    # replay

    def _replay(self, events: list[EditEvent]):
        for ev in events:
            self._apply_event(ev)

    def _apply_event(self, ev: EditEvent):
        if ev.action == "add":
            stmt = parse(ev.details["fl"])
            links = [CorrectiveLink.from_json(d)
                     for d in ev.details.get("links", [])]
            self.protocol._apply_add(ev.actor, stmt, links, ev.seq,
                                     ev.timestamp)
        elif ev.action == "remove":
            self.store.remove_statement(ev.object_id)
        elif ev.action == "clone":
            self.store.objects[ev.object_id].owner = ev.details["new_owner"]
        elif ev.action == "rate":
            self.ratings.apply(ev.actor, ev.object_id,
                               ev.details["criterion"], ev.details["value"],
                               ev.timestamp)
        elif ev.action == "advertise":
            term = ev.details["term"]
            if term not in self.advertised_terms:
                self.advertised_terms.append(term)

    # ------------------------------------------------------------------
    # operations

    def submit(self, actor: str, text: Union[str, StatementGraph],
               links: Optional[list] = None):
        return self.protocol.submit_add(actor, text, links)

    def remove(self, actor: str, object_id: str):
        return self.protocol.submit_remove(actor, object_id)

    def rate(self, rater: str, object_id: str, criterion: str, value: float):
        obj = self.store.objects.get(object_id)
        if obj is None or obj.tombstoned:
            raise UnknownId(object_id)
        if not (-1.0 <= value <= 1.0):
            raise OutOfRange(f"rating {value} outside [-1, 1]")
        ev = self.protocol.record_rating(rater, object_id, criterion, value)
        return self.ratings.apply(rater, object_id, criterion, value,
                                  ev.timestamp)

    def query(self, f: QueryFilter, with_scores: bool = False):
        scores = None
        if f.min_usefulness is not None or with_scores:
            scores = self.compute_scores().statement_score
        return self.store.query(f, scores)

    def neighborhood(self, object_id: str, depth: int):
        return self.store.neighborhood(object_id, depth)

    def argumentation(self, object_id: str) -> dict:
        return self.protocol.list_disagreements(object_id)

    def compute_scores(self, params: Optional[ValuationParams] = None
                       ) -> UsefulnessScores:
        statements = {o.id: o.author for o in self.store.live_statements()}
        links = [l for l in self.protocol.links.values()]
        return compute_usefulness(statements, links, self.ratings,
                                  params or self.params,
                                  as_of_seq=len(self.journal.events))

    def advertise(self, term: str):
        self.protocol.record_advertise(self.node_id, term)
        if term not in self.advertised_terms:
            self.advertised_terms.append(term)

    # ------------------------------------------------------------------
    # dumps and verification

    def state_dump(self) -> str:
        """Deterministic full-state text; replaying the same journal must
        reproduce this byte for byte."""
        out = []
        for o in sorted(self.store.objects.values(), key=lambda o: o.id):
            out.append("object\t%s\t%s\t%s\t%s\t%s\t%s" % (
                o.id, o.kind, o.author, o.owner,
                "dead" if o.tombstoned else "live", o.spelled()))
            for p in sorted(o.direct_generalizations):
                out.append(f"gen\t{o.id}\t{p}")
        for (c, p) in sorted(self.store.explicit_links):
            out.append(f"explicit\t{c}\t{p}")
        for lid in sorted(self.protocol.links,
                          key=lambda l: tuple(map(int, l.split(".")))):
            rec = self.protocol.links[lid]
            out.append("link\t%s\t%s\t%s\t%s\t%s\t%s" % (
                rec.id, rec.kind, rec.source, rec.target,
                "onlink" if rec.on_link else "onobject", rec.author))
        for key in sorted(self.ratings.records):
            e = self.ratings.records[key]
            out.append("rating\t%s\t%s\t%s\t%r\t%r" % (
                e.rater, e.object, e.criterion, e.value, e.timestamp))
        for t in self.advertised_terms:
            out.append(f"nexus\t{t}")
        return "\n".join(out) + "\n"

    def verify_journal(self) -> tuple[bool, str]:
        """Replay this node's journal into a fresh node and compare dumps
        bit-exactly; also re-check hierarchy invariants."""
        fresh = KbNode(node_id=self.node_id, params=self.params)
        fresh._replay(self.journal.events)
        self.store.check_hierarchy()
        a, b = self.state_dump(), fresh.state_dump()
        if a != b:
            for la, lb in zip(a.splitlines(), b.splitlines()):
                if la != lb:
                    return False, f"first divergence: {la!r} vs {lb!r}"
            return False, "dumps differ in length"
        return True, "journal replay reproduces the state bit-exactly"

    def close(self):
        self.journal.close()
