"""Cooperative editing protocol and the append-only journal.

Rules enforced on every submission:

* a statement redundant with the submitter's own live knowledge is
  rejected (cross-author redundancy is allowed: beliefs are per-author);
* a statement inconsistent with the submitter's own knowledge is
  rejected outright;
* a statement inconsistent with another author's knowledge is accepted
  only when the submission carries a corrective or objection link to every
  conflicting object: disagreement must be stated explicitly;
* nobody removes or modifies someone else's knowledge; removing one's own
  knowledge that others rely on reassigns ownership to the earliest
  relying user instead of deleting (the knowledge base is loss-less).

Every accepted mutation appends one journal event before it is
acknowledged; replaying the journal reproduces the exact state.  Journal
lines are `seq|timestamp|actor|action|object-id|details-json`.

Argumentation structure is materialized twice over: from the `links`
argument of a submission, and from corrective-family edges found inside
submitted statements themselves (so a corpus file carrying a full
argumentation example yields queryable links).  Objections written in a
relation's meta block target the link, not its destination.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .notation import (
    ConceptNode,
    ParseContext,
    StatementGraph,
    parse,
)
from .store import CycleWouldForm, KbObject, KbStore, UnknownId, statement_id

__all__ = [
    "EditEvent",
    "Journal",
    "JournalCorrupt",
    "CorrectiveLink",
    "LinkRecord",
    "EditProtocol",
    "Accepted",
    "Rejected",
    "Removed",
    "ClonedTo",
    "CORRECTIVE_KINDS",
    "SPECIALIZING_KINDS",
]

CORRECTIVE_KINDS = frozenset({
    "correction", "corrective_precision", "corrective_generalization",
    "restrictive_correction", "objection", "argument",
})

#: corrective kinds that also place the new object in the hierarchy
SPECIALIZING_KINDS = {
    "corrective_precision": "below",
    "restrictive_correction": "below",
    "corrective_generalization": "above",
}

#: in-graph relations that materialize links when a statement is stored
LINKING_RELATIONS = CORRECTIVE_KINDS | {"specialization_or_equivalent_object"}


class JournalCorrupt(Exception):
    def __init__(self, seq, reason):
        self.seq = seq
        super().__init__(f"journal corrupt at record {seq}: {reason}")


@dataclass(frozen=True)
class EditEvent:
    seq: int
    timestamp: float
    actor: str
    action: str          # add | remove | clone | rate | advertise
    object_id: str
    details: dict

    def to_line(self) -> str:
        return "|".join([
            str(self.seq), repr(self.timestamp), self.actor, self.action,
            self.object_id, json.dumps(self.details, sort_keys=True)])

    @staticmethod
    def from_line(line: str, lineno: int) -> "EditEvent":
        parts = line.split("|", 5)
        if len(parts) != 6:
            raise JournalCorrupt(lineno, "wrong field count")
        try:
            seq = int(parts[0])
            ts = float(parts[1])
            details = json.loads(parts[5])
        except ValueError as exc:
            raise JournalCorrupt(lineno, str(exc))
        if parts[3] not in ("add", "remove", "clone", "rate", "advertise"):
            raise JournalCorrupt(lineno, f"unknown action {parts[3]!r}")
        return EditEvent(seq, ts, parts[2], parts[3], parts[4], details)


class Journal:
    """Append-only event log, optionally file-backed."""

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self.events: list[EditEvent] = []
        self._fh = None
        if path:
            self._load()
            self._fh = open(path, "a", encoding="utf-8")

    def _load(self):
        try:
            fh = open(self.path, "r", encoding="utf-8")
        except FileNotFoundError:
            return
        with fh:
            expected = 1
            for i, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                ev = EditEvent.from_line(line, i)
                if ev.seq != expected:
                    raise JournalCorrupt(i, f"sequence gap: saw {ev.seq}, "
                                            f"wanted {expected}")
                expected += 1
                self.events.append(ev)

    @property
    def next_seq(self) -> int:
        return len(self.events) + 1

    def append(self, actor: str, action: str, object_id: str, details: dict,
               timestamp: float) -> EditEvent:
        ev = EditEvent(self.next_seq, timestamp, actor, action, object_id,
                       dict(details))
        self.events.append(ev)
        if self._fh is not None:
            self._fh.write(ev.to_line() + "\n")
            self._fh.flush()
        return ev

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None


# ---------------------------------------------------------------------------
# submission results


@dataclass(frozen=True)
class Accepted:
    id: str
    ok = True


@dataclass(frozen=True)
class Rejected:
    reason: str          # Redundant | SelfInconsistent | MissingCorrectiveLink
    #                    # | UnknownLinkTarget | NotOwner | UnknownId | BadLink
    details: tuple = ()
    ok = False


@dataclass(frozen=True)
class Removed:
    id: str
    ok = True


@dataclass(frozen=True)
class ClonedTo:
    id: str
    new_owner: str
    ok = True


@dataclass
class CorrectiveLink:
    kind: str
    target: str
    meta: list = field(default_factory=list)

    def to_json(self):
        return {"kind": self.kind, "target": self.target,
                "meta": [m.to_json() for m in self.meta]}

    @staticmethod
    def from_json(d) -> "CorrectiveLink":
        return CorrectiveLink(d["kind"], d["target"],
                              [CorrectiveLink.from_json(m)
                               for m in d.get("meta", [])])


@dataclass
class LinkRecord:
    id: str
    kind: str
    source: str                      # object id
    target: str                      # object id, or link id when on_link
    on_link: bool
    author: str
    seq: int


class EditProtocol:
    """The single writer over a store + journal pair."""

    def __init__(self, store: KbStore, journal: Journal,
                 clock: Callable[[], float] = None,
                 parse_ctx: Optional[ParseContext] = None):
        self.store = store
        self.journal = journal
        self.clock = clock or (lambda: float(self.journal.next_seq))
        self.ctx = parse_ctx or ParseContext()
        self.links: dict[str, LinkRecord] = {}
        self.links_by_target: dict[str, list] = {}

    # ------------------------------------------------------------------
    # helpers

    def _new_link(self, kind: str, source: str, target: str, on_link: bool,
                  author: str, seq: int, ordinal: int) -> LinkRecord:
        lid = f"{seq}.{ordinal}"
        rec = LinkRecord(lid, kind, source, target, on_link, author, seq)
        self.links[lid] = rec
        self.links_by_target.setdefault(target, []).append(lid)
        self.store.add_related_edge(source, target if not on_link else
                                    self.links[target].target, kind)
        return rec

    def _parse(self, g: Union[str, StatementGraph]) -> StatementGraph:
        if isinstance(g, StatementGraph):
            return g
        return parse(g, self.ctx)

    # ------------------------------------------------------------------
    # add

    def submit_add(self, actor: str, g: Union[str, StatementGraph],
                   links: Optional[list] = None,
                   _replay_ts: Optional[float] = None):
        links = list(links or [])
        try:
            stmt = self._parse(g)
        except Exception:
            raise
        for link in links:
            if link.kind not in CORRECTIVE_KINDS:
                return Rejected("BadLink", (link.kind,))
            if link.target not in self.store.objects \
                    or self.store.objects[link.target].tombstoned:
                return Rejected("UnknownLinkTarget", (link.target,))

        if self.store.find_statement(stmt, actor) is not None:
            dup = statement_id(stmt, actor)
            return Rejected("Redundant", (dup,))

        report = self.store.detect_conflict(stmt, actor)
        if report.redundant_with:
            return Rejected("Redundant", tuple(report.redundant_with))
        own = [oid for oid in report.inconsistent_with
               if self.store.objects[oid].author == actor]
        if own:
            return Rejected("SelfInconsistent", tuple(own))
        foreign = [oid for oid in report.inconsistent_with
                   if self.store.objects[oid].author != actor]
        covered = {l.target for l in links}
        missing = [oid for oid in foreign if oid not in covered]
        if missing:
            return Rejected("MissingCorrectiveLink", tuple(missing))

        ts = _replay_ts if _replay_ts is not None else self.clock()
        ev = self.journal.append(actor, "add", statement_id(stmt, actor), {
            "fl": stmt.canonical_form(),
            "links": [l.to_json() for l in links],
        }, ts)
        obj = self._apply_add(actor, stmt, links, ev.seq, ts)
        return Accepted(obj.id)

    def _apply_add(self, actor: str, stmt: StatementGraph,
                   links: list, seq: int, ts: float) -> KbObject:
        obj = self.store.add_statement(stmt, actor, ts)
        ordinal = 1
        for link in links:
            rec = self._new_link(link.kind, obj.id, link.target, False,
                                 actor, seq, ordinal)
            ordinal += 1
            ordinal = self._apply_meta_links(link.meta, rec, actor, seq, ordinal)
            place = SPECIALIZING_KINDS.get(link.kind)
            try:
                if place == "below":
                    self.store.assert_link(obj.id, link.target)
                elif place == "above":
                    self.store.assert_link(link.target, obj.id)
            except CycleWouldForm:
                pass
        self._materialize_graph_links(obj, actor, seq, ordinal)
        return obj

    def _apply_meta_links(self, metas: list, parent: LinkRecord, actor: str,
                          seq: int, ordinal: int) -> int:
        for m in metas:
            rec = self._new_link(m.kind, m.target, parent.id, True,
                                 actor, seq, ordinal)
            ordinal += 1
            ordinal = self._apply_meta_links(m.meta, rec, actor, seq, ordinal)
        return ordinal

    # -- in-graph argumentation -------------------------------------------

    def _materialize_graph_links(self, obj: KbObject, actor: str,
                                 seq: int, ordinal: int) -> int:
        """Corrective-family edges inside the statement body become link
        records; their destinations become objects of their own."""

        def author_from_meta(edge) -> str:
            for m in edge.meta:
                if m.relation.name == "author" and m.destination.type is not None:
                    return m.destination.type.name
            return actor

        def ensure_object(node: ConceptNode, author: str) -> KbObject:
            sub = StatementGraph(node)
            existing = self.store.find_statement(sub, author)
            if existing is not None:
                return existing
            return self.store.add_statement(sub, author, float(seq))

        def walk(node: ConceptNode, node_obj: KbObject, ordinal: int) -> int:
            for edge in node.attachments:
                name = edge.relation.name
                if name not in LINKING_RELATIONS or edge.inverse:
                    continue
                dest = edge.destination
                if dest.is_literal or dest.variable is not None:
                    continue
                body = dest.embedded.body if dest.embedded is not None else dest
                author = author_from_meta(edge)
                dest_obj = ensure_object(body, author)
                rec = self._new_link(name, dest_obj.id, node_obj.id, False,
                                     author, seq, ordinal)
                ordinal += 1
                try:
                    if name in ("corrective_precision", "restrictive_correction",
                                "specialization_or_equivalent_object"):
                        self.store.assert_link(dest_obj.id, node_obj.id)
                    elif name == "corrective_generalization":
                        self.store.assert_link(node_obj.id, dest_obj.id)
                except CycleWouldForm:
                    pass
                # objections written in the meta block dispute the link
                for m in edge.meta:
                    mname = m.relation.name
                    if mname == "author":
                        continue
                    if mname in LINKING_RELATIONS and not m.destination.is_literal:
                        mbody = (m.destination.embedded.body
                                 if m.destination.embedded is not None
                                 else m.destination)
                        mobj = ensure_object(mbody, actor)
                        self._new_link(mname, mobj.id, rec.id, True,
                                       actor, seq, ordinal)
                        ordinal += 1
                ordinal = walk(body, dest_obj, ordinal)
            return ordinal

        return walk(obj.payload.root, obj, ordinal)

    # ------------------------------------------------------------------
    # remove

    def submit_remove(self, actor: str, oid: str,
                      _replay: Optional[dict] = None):
        try:
            obj = self.store.get(oid)
        except UnknownId:
            return Rejected("UnknownId", (oid,))
        if obj.tombstoned:
            return Rejected("UnknownId", (oid,))
        if obj.owner != actor:
            return Rejected("NotOwner", (obj.owner,))

        dependants = self._dependants(oid, exclude=actor)
        ts = self.clock() if _replay is None else _replay["ts"]
        if not dependants:
            self.journal.append(actor, "remove", oid, {}, ts)
            if obj.kind == "statement":
                self.store.remove_statement(oid)
            else:
                self.store.remove_statement(oid)
            return Removed(oid)
        dependants.sort()
        new_owner = dependants[0][1]
        self.journal.append(actor, "clone", oid, {"new_owner": new_owner}, ts)
        obj.owner = new_owner
        return ClonedTo(oid, new_owner)

    def _dependants(self, oid: str, exclude: str) -> list:
        """(seq, user) pairs of other users relying on the object: links
        touching it from either side, statements using a term object."""
        out = []
        obj = self.store.objects[oid]
        for rec in self.links.values():
            if rec.author == exclude:
                continue
            if rec.target == oid or rec.source == oid:
                out.append((rec.seq, rec.author))
            elif rec.source in self.store.objects \
                    and self.store.objects[rec.source].tombstoned is False \
                    and rec.on_link and rec.target in self.links \
                    and oid in (self.links[rec.target].source,
                                self.links[rec.target].target):
                out.append((rec.seq, rec.author))
        if obj.kind == "term":
            for other in self.store.live_statements():
                if other.author == exclude:
                    continue
                if obj.payload in set(other.payload.terms()):
                    out.append((0, other.author))
        return out

    # ------------------------------------------------------------------
    # argumentation views

    def list_disagreements(self, oid: str) -> dict:
        """The argumentation structure around an object: links targeting
        it, each with author, meta links (objections on the link), and the
        recursive structure of its source object."""
        self.store.get(oid)
        return self._structure(oid, set())

    def _structure(self, oid: str, seen: set) -> dict:
        obj = self.store.objects[oid]
        node = {
            "id": oid,
            "author": obj.author,
            "text": obj.spelled(),
            "links": [],
        }
        if oid in seen:
            node["cycle"] = True
            return node
        seen = seen | {oid}
        for lid in sorted(self.links_by_target.get(oid, []),
                          key=lambda l: self.links[l].seq):
            rec = self.links[lid]
            if rec.on_link:
                continue
            node["links"].append(self._link_view(rec, seen))
        return node

    def _link_view(self, rec: LinkRecord, seen: set) -> dict:
        view = {
            "link_id": rec.id,
            "kind": rec.kind,
            "author": rec.author,
            "source": self._structure(rec.source, seen),
            "meta": [],
        }
        for lid in sorted(self.links_by_target.get(rec.id, []),
                          key=lambda l: self.links[l].seq):
            sub = self.links[lid]
            view["meta"].append(self._link_view(sub, seen))
        return view

    # ------------------------------------------------------------------
    # rating passthrough (journaled here, aggregated in valuation)

    def record_rating(self, rater: str, object_id: str, criterion: str,
                      value: float, ts: Optional[float] = None):
        ts = self.clock() if ts is None else ts
        return self.journal.append(rater, "rate", object_id, {
            "criterion": criterion, "value": value}, ts)

    def record_advertise(self, node_id: str, term: str,
                         ts: Optional[float] = None):
        ts = self.clock() if ts is None else ts
        return self.journal.append(node_id, "advertise", "", {"term": term}, ts)
