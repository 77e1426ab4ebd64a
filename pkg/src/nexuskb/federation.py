"""Per-term nexus replication between knowledge base nodes.

A node commits to be a *nexus* for a term by advertising; directories
record who advertised what.  For every term a node stores it keeps exactly
one routing entry: itself as nexus, an explicit nexus list, or a directory
referral (one indirection in the well-configured case; a time-to-live
bounds misconfigured referral loops).  Statement additions are forwarded
to every nexus of every formal term they mention; each receiving nexus
runs its *own* editing protocol before storing, and deliveries are
idempotent by content hash.  Queries fan out the same way and merge.

Transport is an in-process simulated network driven by a seeded scheduler
(so interleavings, duplicate deliveries, and convergence are all
reproducible and testable); the HTTP service exposes the same message
codec for real deployments.  Messages are length-prefixed text records:

    <length>:kind|origin|ttl|hash|payload-json

Delivery to a stopped node is retried three times with exponential
backoff, then parked for periodic anti-entropy re-offers (bounded, so a
permanently dead peer cannot keep the scheduler busy forever).
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field

from .node import KbNode
from .notation import StatementGraph, parse
from .protocol import Accepted
from .store import QueryFilter, statement_id
from .subsumption import subsumes

__all__ = [
    "Message",
    "encode_message",
    "decode_message",
    "FederationNode",
    "SimNetwork",
    "Harness",
    "run_scenario",
    "ScenarioError",
]

MESSAGE_KINDS = ("Advertise", "PutStatement", "Query", "Results",
                 "WhoIsNexus", "NexusAnswer")
DEFAULT_TTL = 8
RETRY_LIMIT = 3
ANTI_ENTROPY_PERIOD = 50.0
ANTI_ENTROPY_PASSES = 5


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class Message:
    kind: str
    origin: str
    ttl: int
    hash: str
    payload: dict

    def forwarded(self, **updates) -> "Message":
        data = {"kind": self.kind, "origin": self.origin,
                "ttl": self.ttl - 1, "hash": self.hash,
                "payload": self.payload}
        data.update(updates)
        return Message(**data)


def encode_message(m: Message) -> str:
    body = "|".join([m.kind, m.origin, str(m.ttl), m.hash,
                     json.dumps(m.payload, sort_keys=True)])
    return f"{len(body)}:{body}"


def decode_message(text: str) -> Message:
    length, _, rest = text.partition(":")
    body = rest[:int(length)]
    if len(body) != int(length):
        raise ValueError("truncated message record")
    kind, origin, ttl, hash_, payload = body.split("|", 4)
    if kind not in MESSAGE_KINDS:
        raise ValueError(f"unknown message kind {kind!r}")
    return Message(kind, origin, int(ttl), hash_, json.loads(payload))


# ---------------------------------------------------------------------------
# node


@dataclass
class PendingQuery:
    qid: str
    spec_of: str
    waiting: set
    results: dict = field(default_factory=dict)    # id -> {fl, author}
    unreachable: list = field(default_factory=list)
    done: bool = False


class FederationNode:
    """One KBMS participating in the replication protocol."""

    def __init__(self, addr: str, network: "SimNetwork",
                 directory: bool = False):
        self.addr = addr
        self.net = network
        self.kb = KbNode(node_id=addr)
        self.up = True
        self.is_directory = directory
        self.routing: dict[str, tuple] = {}       # term -> entry
        self.directory_table: dict[str, object] = {}   # term -> set | referral
        self.default_directories: list[str] = []
        self.unrouted: list[dict] = []             # parked {fl, author, term}
        self.anti_entropy_left = ANTI_ENTROPY_PASSES
        self.delivery_reports: dict[str, dict] = {}
        self.pending_queries: dict[str, PendingQuery] = {}
        self._pending_puts: dict[str, list] = {}   # term -> puts awaiting answer
        self.ttl_drops: list[str] = []

    # -- descriptor -------------------------------------------------------

    def descriptor(self) -> dict:
        return {"node_id": self.addr, "base_address": self.addr,
                "roles": {t: e[0] for t, e in sorted(self.routing.items())}}

    # -- routing table ------------------------------------------------------

    def advertise(self, term: str):
        self.routing[term] = ("self",)
        self.kb.advertise(term)
        for d in self.default_directories:
            self.net.send(self.addr, d, Message(
                "Advertise", self.addr, DEFAULT_TTL, "", {"term": term}))

    def set_nexus_list(self, term: str, addrs: list[str]):
        self.routing[term] = ("nexus", tuple(addrs))

    def set_directory_ref(self, term: str, addr: str):
        self.routing[term] = ("directory", addr)

    def use_directory(self, addr: str):
        if addr not in self.default_directories:
            self.default_directories.append(addr)

    def refer(self, term: str, other_directory: str):
        """Directory-side referral (the misconfiguration ttl guards against)."""
        self.directory_table[term] = ("refer", other_directory)

    def _resolve(self, term: str) -> tuple:
        entry = self.routing.get(term)
        if entry is not None:
            return entry
        if self.default_directories:
            return ("directory", self.default_directories[0])
        return ("none",)

    # -- adds ---------------------------------------------------------------

    def local_add(self, author: str, fl: str, links=None):
        """The origin-side half of route_add: the statement must pass this
        node's own protocol before any replication happens."""
        res = self.kb.submit(author, fl, links)
        if not isinstance(res, Accepted):
            return res
        self.route_add(res.id, fl, author)
        return res

    def route_add(self, oid: str, fl: str, author: str):
        g = parse(fl)
        self.delivery_reports.setdefault(oid, {
            "fl": g.canonical_form(), "author": author,
            "per_nexus": {}, "unrouted": [], "ttl_exhausted": False})
        for term in sorted({t.spelled() for t in g.terms(formal_only=True)}):
            self._route_term(oid, g, author, term)

    def _route_term(self, oid: str, g: StatementGraph, author: str, term: str):
        report = self.delivery_reports[oid]
        entry = self._resolve(term)
        if entry[0] == "self":
            report["per_nexus"][self.addr] = "accepted"
        elif entry[0] == "nexus":
            for addr in entry[1]:
                self._send_put(addr, oid, g, author, DEFAULT_TTL)
        elif entry[0] == "directory":
            self._pending_puts.setdefault(term, []).append(
                {"oid": oid, "fl": g.canonical_form(), "author": author})
            self.net.send(self.addr, entry[1], Message(
                "WhoIsNexus", self.addr, DEFAULT_TTL, "", {"term": term}))
        else:
            report["unrouted"].append(term)
            self.unrouted.append({"oid": oid, "fl": g.canonical_form(),
                                  "author": author, "term": term})
            self.net.note_unrouted(self)

    def _send_put(self, addr: str, oid: str, g: StatementGraph, author: str,
                  ttl: int):
        if addr == self.addr:
            self.delivery_reports[oid]["per_nexus"][self.addr] = "accepted"
            return
        self.net.send(self.addr, addr, Message(
            "PutStatement", self.addr, ttl, oid,
            {"fl": g.canonical_form(), "author": author}))

    # -- queries ----------------------------------------------------------

    def route_query(self, qid: str, fl: str):
        g = parse(fl)
        targets = set()
        for term in sorted({t.spelled() for t in g.terms(formal_only=True)}):
            entry = self._resolve(term)
            if entry[0] == "nexus":
                targets.update(entry[1])
            elif entry[0] == "directory":
                # queries resolve through the same directory indirection
                self._pending_puts.setdefault(term, [])
                self.net.send(self.addr, entry[1], Message(
                    "WhoIsNexus", self.addr, DEFAULT_TTL, "",
                    {"term": term, "qid": qid, "query": g.canonical_form()}))
        targets.discard(self.addr)
        pq = PendingQuery(qid=qid, spec_of=g.canonical_form(),
                          waiting=set(targets))
        self.pending_queries[qid] = pq
        # local results always participate
        for obj, _ in [(o, None) for o in self._local_matches(g)]:
            pq.results[obj.id] = {"fl": obj.payload.canonical_form(),
                                  "author": obj.author}
        for addr in sorted(targets):
            self.net.send(self.addr, addr, Message(
                "Query", self.addr, DEFAULT_TTL, qid,
                {"spec_of": g.canonical_form(), "qid": qid}))
        if not targets:
            pq.done = True
        return pq

    def _local_matches(self, g: StatementGraph):
        results, _ = self.kb.store.query(QueryFilter(spec_of=g))
        return results

    def query_result(self, qid: str) -> dict:
        pq = self.pending_queries[qid]
        merged = sorted(pq.results)
        edges = self._order_results(pq)
        return {"qid": qid, "ids": merged,
                "statements": {i: pq.results[i] for i in merged},
                "edges": edges,
                "partial": sorted(pq.unreachable)}

    def _order_results(self, pq: PendingQuery) -> list:
        graphs = {i: parse(r["fl"]) for i, r in pq.results.items()}
        onto = self.kb.store.onto
        below = {}
        for a, ga in graphs.items():
            for b, gb in graphs.items():
                if a != b and subsumes(gb, ga, onto) \
                        and not subsumes(ga, gb, onto):
                    below.setdefault(a, set()).add(b)
        edges = []
        for a, ups in below.items():
            for b in ups:
                if not any(b in below.get(mid, ()) for mid in ups if mid != b):
                    edges.append((a, b))
        return sorted(edges)

    # -- message handling -----------------------------------------------------

    def on_message(self, src: str, m: Message):
        if m.kind == "Advertise":
            entry = self.directory_table.get(m.payload["term"])
            if not isinstance(entry, set):
                entry = set()
                self.directory_table[m.payload["term"]] = entry
            entry.add(m.origin)
        elif m.kind == "WhoIsNexus":
            entry = self.directory_table.get(m.payload["term"], set())
            if isinstance(entry, tuple) and entry[0] == "refer":
                if m.ttl <= 0:
                    self.ttl_drops.append(m.payload["term"])
                    self.net.note_ttl_drop(self.addr, m.payload["term"])
                    return
                self.net.send(self.addr, entry[1], m.forwarded())
                return
            self.net.send(self.addr, m.origin, Message(
                "NexusAnswer", self.addr, DEFAULT_TTL, "",
                {"term": m.payload["term"], "nexuses": sorted(entry),
                 **{k: m.payload[k] for k in ("qid", "query")
                    if k in m.payload}}))
        elif m.kind == "NexusAnswer":
            self._on_nexus_answer(m)
        elif m.kind == "PutStatement":
            self._on_put(src, m)
        elif m.kind == "Query":
            g = parse(m.payload["spec_of"])
            rows = [{"id": o.id, "fl": o.payload.canonical_form(),
                     "author": o.author} for o in self._local_matches(g)]
            self.net.send(self.addr, m.origin, Message(
                "Results", self.addr, DEFAULT_TTL, m.payload["qid"],
                {"qid": m.payload["qid"], "rows": rows}))
        elif m.kind == "Results":
            if "put" in m.payload:
                report = self.delivery_reports.get(m.payload["put"])
                if report is not None:
                    report["per_nexus"][m.origin] = m.payload["status"]
                return
            pq = self.pending_queries.get(m.payload["qid"])
            if pq is None:
                return
            for row in m.payload["rows"]:
                pq.results[row["id"]] = {"fl": row["fl"],
                                         "author": row["author"]}
            pq.waiting.discard(m.origin)
            if not pq.waiting:
                pq.done = True

    def _on_nexus_answer(self, m: Message):
        term = m.payload["term"]
        nexuses = m.payload["nexuses"]
        if nexuses:
            self.routing.setdefault(term, ("nexus", tuple(nexuses)))
        puts = self._pending_puts.pop(term, [])
        for item in puts:
            if not nexuses:
                self.delivery_reports[item["oid"]]["unrouted"].append(term)
                self.unrouted.append(dict(item, term=term))
                self.net.note_unrouted(self)
                continue
            g = parse(item["fl"])
            for addr in nexuses:
                self._send_put(addr, item["oid"], g, item["author"],
                               DEFAULT_TTL)
        if "qid" in m.payload:
            pq = self.pending_queries.get(m.payload["qid"])
            if pq is not None:
                for addr in nexuses:
                    if addr != self.addr and addr not in pq.results:
                        pq.waiting.add(addr)
                        self.net.send(self.addr, addr, Message(
                            "Query", self.addr, DEFAULT_TTL, pq.qid,
                            {"spec_of": pq.spec_of, "qid": pq.qid}))

    def _on_put(self, src: str, m: Message):
        fl, author = m.payload["fl"], m.payload["author"]
        g = parse(fl)
        oid = statement_id(g, author)
        existing = self.kb.store.objects.get(oid)
        if existing is not None and not existing.tombstoned:
            status = "accepted"          # idempotent by content hash
        else:
            res = self.kb.submit(author, g)
            if isinstance(res, Accepted):
                status = "accepted"
            else:
                status = f"rejected:{res.reason}"
        self.net.send(self.addr, m.origin, Message(
            "Results", self.addr, DEFAULT_TTL, oid,
            {"put": oid, "status": status}))

    # -- anti-entropy -------------------------------------------------------

    def anti_entropy_pass(self):
        if not self.unrouted or self.anti_entropy_left <= 0:
            return False
        self.anti_entropy_left -= 1
        parked, self.unrouted = self.unrouted, []
        for item in parked:
            entry = self._resolve(item["term"])
            if entry[0] == "none":
                self.unrouted.append(item)
                continue
            report = self.delivery_reports[item["oid"]]
            if item["term"] in report["unrouted"]:
                report["unrouted"].remove(item["term"])
            self._route_term(item["oid"], parse(item["fl"]), item["author"],
                             item["term"])
        return bool(self.unrouted)


# ---------------------------------------------------------------------------
# simulated network


class SimNetwork:
    def __init__(self, seed: int = 0, duplicate: bool = False):
        self.rng = random.Random(seed)
        self.nodes: dict[str, FederationNode] = {}
        self.heap: list = []
        self.time = 0.0
        self.counter = 0
        self.trace: list[str] = []
        self.duplicate = duplicate
        self.message_count = 0
        self.ttl_drops: list[str] = []
        self._anti_entropy_scheduled = False

    def add_node(self, addr: str, directory: bool = False) -> FederationNode:
        node = FederationNode(addr, self, directory=directory)
        self.nodes[addr] = node
        return node

    def note_ttl_drop(self, addr: str, term: str):
        self.ttl_drops.append(f"{addr}:{term}")
        self.trace.append(f"t={self.time:.1f} {addr} drop ttl-exhausted {term}")

    def note_unrouted(self, node: FederationNode):
        if not self._anti_entropy_scheduled:
            self._anti_entropy_scheduled = True
            self._push(self.time + ANTI_ENTROPY_PERIOD, "antientropy", None)

    def _push(self, when: float, kind: str, item, attempt: int = 1):
        self.counter += 1
        heapq.heappush(self.heap, (when, self.counter, kind, item, attempt))

    def send(self, src: str, dest: str, msg: Message):
        if msg.ttl <= 0:
            self.note_ttl_drop(src, msg.payload.get("term", msg.kind))
            return
        self.message_count += 1
        latency = 1.0 + self.rng.random()
        self._push(self.time + latency, "deliver", (src, dest, msg))
        if self.duplicate and self.rng.random() < 0.5:
            self._push(self.time + latency + self.rng.random(), "deliver",
                       (src, dest, msg))

    def run_until_quiet(self, max_events: int = 100000):
        events = 0
        while self.heap:
            events += 1
            if events > max_events:
                raise ScenarioError("scheduler did not quiesce")
            when, _, kind, item, attempt = heapq.heappop(self.heap)
            self.time = max(self.time, when)
            if kind == "antientropy":
                self._anti_entropy_scheduled = False
                again = False
                for node in sorted(self.nodes.values(), key=lambda n: n.addr):
                    if node.up and node.anti_entropy_pass():
                        again = True
                if again:
                    self.note_unrouted(next(iter(self.nodes.values())))
                continue
            src, dest, msg = item
            node = self.nodes.get(dest)
            if node is None or not node.up:
                if attempt < RETRY_LIMIT:
                    backoff = 2.0 ** attempt
                    self._push(when + backoff, "deliver", item, attempt + 1)
                else:
                    self._fail_delivery(src, dest, msg)
                continue
            self.trace.append(
                f"t={when:.1f} {src}->{dest} "
                f"{msg.kind}|{msg.origin}|{msg.ttl}|{msg.hash}"
                f"|{json.dumps(msg.payload, sort_keys=True)}")
            node.on_message(src, msg)

    def _fail_delivery(self, src: str, dest: str, msg: Message):
        self.trace.append(f"t={self.time:.1f} {src}->{dest} FAILED {msg.kind}")
        sender = self.nodes.get(src)
        if sender is None:
            return
        if msg.kind == "PutStatement":
            report = sender.delivery_reports.get(msg.hash)
            if report is not None:
                report["per_nexus"][dest] = "unreachable"
        elif msg.kind == "Query":
            pq = sender.pending_queries.get(msg.payload.get("qid", ""))
            if pq is not None:
                pq.waiting.discard(dest)
                pq.unreachable.append(dest)
                if not pq.waiting:
                    pq.done = True


# ---------------------------------------------------------------------------
# scenario harness


class Harness:
    """Drives a scripted scenario; checks run after quiescence."""

    def __init__(self, seed: int = 0, duplicate: bool = False):
        self.net = SimNetwork(seed=seed, duplicate=duplicate)
        self.queries: dict[str, tuple[str, str]] = {}
        self.checks: list[tuple[str, bool, str]] = []
        self.accepted: list[dict] = []

    # -- command execution ---------------------------------------------------

    def run_line(self, line: str):
        line = line.split("//", 1)[0].strip()
        if not line:
            return
        parts = _split_script_line(line)
        cmd = parts[0]
        handler = getattr(self, "cmd_" + cmd.replace("-", "_"), None)
        if handler is None:
            raise ScenarioError(f"unknown command {cmd!r}")
        handler(parts[1:])

    def node(self, addr: str) -> FederationNode:
        try:
            return self.net.nodes[addr]
        except KeyError:
            raise ScenarioError(f"unknown node {addr!r}")

    def cmd_node(self, args):
        self.net.add_node(args[0])

    def cmd_directory(self, args):
        self.net.add_node(args[0], directory=True)

    def cmd_start(self, args):
        self.node(args[0]).up = True

    def cmd_stop(self, args):
        self.node(args[0]).up = False

    def cmd_use_directory(self, args):
        self.node(args[0]).use_directory(args[1])

    def cmd_advertise(self, args):
        self.node(args[0]).advertise(args[1])

    def cmd_nexuslist(self, args):
        self.node(args[0]).set_nexus_list(args[1], args[2:])

    def cmd_refer(self, args):
        self.node(args[0]).refer(args[1], args[2])

    def cmd_directory_ref(self, args):
        self.node(args[0]).set_directory_ref(args[1], args[2])

    def cmd_add(self, args):
        addr, fl = args[0], args[1]
        author = args[3] if len(args) > 3 and args[2] == "by" else addr
        res = self.node(addr).local_add(author, fl)
        if isinstance(res, Accepted):
            self.accepted.append({"id": res.id, "fl": parse(fl).canonical_form(),
                                  "author": author, "origin": addr})
        else:
            self.checks.append((f"add at {addr}", False,
                                f"rejected: {res.reason}"))

    def cmd_query(self, args):
        addr, fl = args[0], args[1]
        qid = args[3] if len(args) > 3 and args[2] == "as" else f"q{len(self.queries)}"
        self.node(addr).route_query(qid, fl)
        self.queries[qid] = (addr, fl)

    def cmd_quiesce(self, args):
        self.net.run_until_quiet()

    def cmd_dup(self, args):
        self.net.duplicate = args[0] == "on"

    # -- checks ---------------------------------------------------------------

    def cmd_check(self, args):
        kind = args[0]
        if kind == "convergence":
            skip = set(args[2:]) if len(args) > 2 and args[1] == "skip" else set()
            self.check_convergence(skip)
        elif kind == "partial":
            qid, unreachable = args[1], args[2]
            res = self.node(self.queries[qid][0]).query_result(qid)
            ok = unreachable in res["partial"]
            self.checks.append((f"partial {qid}", ok,
                                f"partial={res['partial']}"))
        elif kind == "results":
            qid, op, value = args[1], args[2], args[3]
            res = self.node(self.queries[qid][0]).query_result(qid)
            if op == "count":
                ok = len(res["ids"]) == int(value)
                detail = f"got {len(res['ids'])}"
            elif op == "contains":
                want = parse(value).canonical_form()
                ok = any(r["fl"] == want for r in res["statements"].values())
                detail = f"{len(res['ids'])} rows"
            else:
                raise ScenarioError(f"unknown results check {op!r}")
            self.checks.append((f"results {qid} {op}", ok, detail))
        elif kind == "holds":
            addr, fl = args[1], args[2]
            author = args[4] if len(args) > 4 else addr
            oid = statement_id(parse(fl), author)
            obj = self.node(addr).kb.store.objects.get(oid)
            ok = obj is not None and not obj.tombstoned
            self.checks.append((f"holds {addr}", ok, oid[:12]))
        elif kind == "ttl-drop":
            ok = bool(self.net.ttl_drops)
            self.checks.append(("ttl-drop", ok, str(self.net.ttl_drops)))
        elif kind == "message-bound":
            bound = int(args[1])
            ok = self.net.message_count <= bound
            self.checks.append(("message-bound", ok,
                                f"{self.net.message_count} <= {bound}"))
        else:
            raise ScenarioError(f"unknown check {kind!r}")

    def check_convergence(self, skip: set):
        """Every nexus for T holds exactly the accepted statements
        mentioning T."""
        per_term: dict[str, set] = {}
        for node in self.net.nodes.values():
            for term, entry in node.routing.items():
                if entry[0] == "self" and node.addr not in skip:
                    per_term.setdefault(term, set()).add(node.addr)
        ok_all, details = True, []
        for term, nexuses in sorted(per_term.items()):
            expected = set()
            for item in self.accepted:
                g = parse(item["fl"])
                terms = {t.spelled() for t in g.terms(formal_only=True)}
                if term in terms:
                    expected.add(statement_id(g, item["author"]))
            for addr in sorted(nexuses):
                node = self.net.nodes[addr]
                held = set()
                for o in node.kb.store.live_statements():
                    terms = {t.spelled() for t in o.payload.terms(formal_only=True)}
                    if term in terms:
                        held.add(o.id)
                if held != expected:
                    ok_all = False
                    details.append(f"{addr} holds {len(held)} of "
                                   f"{len(expected)} for {term}")
        self.checks.append(("convergence", ok_all,
                            "; ".join(details) or "exact per-term sets"))

    # -- results ---------------------------------------------------------------

    def report(self) -> dict:
        return {
            "trace": list(self.net.trace),
            "checks": list(self.checks),
            "all_passed": all(ok for _, ok, _ in self.checks),
            "messages": self.net.message_count,
            "dumps": {addr: n.kb.state_dump()
                      for addr, n in sorted(self.net.nodes.items())},
        }


def _split_script_line(line: str) -> list[str]:
    """Split on spaces, honoring double-quoted segments."""
    out, buf, quoted = [], [], False
    for ch in line:
        if ch == '"':
            quoted = not quoted
            continue
        if ch == " " and not quoted:
            if buf:
                out.append("".join(buf))
                buf = []
            continue
        buf.append(ch)
    if quoted:
        raise ScenarioError("unbalanced quote in scenario line")
    if buf:
        out.append("".join(buf))
    return out


def run_scenario(script: str, seed: int = 0, duplicate: bool = False) -> dict:
    """Execute a scenario script and return its trace + check report."""
    h = Harness(seed=seed, duplicate=duplicate)
    for line in script.splitlines():
        h.run_line(line)
    h.net.run_until_quiet()
    return h.report()
