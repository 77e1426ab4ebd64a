"""HTTP service: the knowledge base behind a JSON request/response API.

Responses fall into four disjoint classes clients can branch on without
parsing messages:

    transport-error      malformed request, unknown endpoint        (400)
    syntax-error         FL text did not parse; carries line/column (422)
    protocol-violation   the editing protocol refused the change    (409)
    not-found            unknown object id                          (404)

State-changing endpoints append their journal record before the response
is written (the journal append happens inside the protocol call, under
the writer lock), so an acknowledged change is always durable.  Startup
replays the journal; a corrupt journal refuses to start and names the
first bad record.

Endpoint reference lives in docs/api.md; bodies and responses are JSON,
content-hash ids are lowercase hex.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from .federation import Message, decode_message, encode_message
from .node import KbNode
from .notation import FlSyntaxError, parse
from .protocol import Accepted, ClonedTo, CorrectiveLink, Rejected
from .store import QueryFilter, UnknownId, statement_id
from .valuation import OutOfRange, ValuationParams, parse_params

__all__ = ["ServiceConfig", "KbService", "serve", "ApiError"]


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 0                       # 0: pick a free port
    journal_path: Optional[str] = None
    node_id: str = "node"
    params_path: Optional[str] = None
    peer_directories: list = field(default_factory=list)


class ApiError(Exception):
    def __init__(self, class_: str, code: str, message: str, details=None,
                 http_status: int = 400):
        self.class_ = class_
        self.code = code
        self.message = message
        self.details = details or {}
        self.http_status = http_status
        super().__init__(message)

    def body(self) -> dict:
        return {"error": {"class": self.class_, "code": self.code,
                          "message": self.message, **self.details}}


_REJECTION_CODES = {
    "Redundant": "redundant",
    "SelfInconsistent": "self-inconsistent",
    "MissingCorrectiveLink": "missing-corrective-link",
    "UnknownLinkTarget": "unknown-link-target",
    "NotOwner": "not-owner",
    "BadLink": "bad-link",
    "UnknownId": "unknown-id",
}


def _rejection_error(res: Rejected) -> ApiError:
    code = _REJECTION_CODES.get(res.reason, res.reason.lower())
    if res.reason == "UnknownId":
        return ApiError("not-found", "unknown-id", "no such object",
                        {"ids": list(res.details)}, 404)
    return ApiError("protocol-violation", code,
                    f"the editing protocol rejected this change "
                    f"({res.reason})",
                    {"conflicts": list(res.details)}, 409)


class KbService:
    """The service core: one node plus the request dispatch table.

    Separated from the HTTP plumbing so tests can drive dispatch directly.
    """

    def __init__(self, config: ServiceConfig):
        self.config = config
        params = ValuationParams()
        if config.params_path:
            with open(config.params_path, encoding="utf-8") as fh:
                params = parse_params(fh.read())
        self.node = KbNode(journal_path=config.journal_path,
                           node_id=config.node_id, params=params)
        self.directory_table: dict[str, set] = {}
        self._write_lock = threading.Lock()

    # ------------------------------------------------------------------
    # dispatch

    def dispatch(self, method: str, endpoint: str, body: dict) -> dict:
        handler = getattr(self, "ep_" + endpoint.replace("-", "_"), None)
        if handler is None:
            raise ApiError("transport-error", "unknown-endpoint",
                           f"no endpoint {endpoint!r}", http_status=404)
        return handler(body)

    @staticmethod
    def _need(body: dict, *keys):
        for k in keys:
            if k not in body:
                raise ApiError("transport-error", "missing-field",
                               f"required field {k!r} missing")
        return [body[k] for k in keys]

    def _parse_fl(self, text: str):
        try:
            return parse(text)
        except FlSyntaxError as exc:
            raise ApiError("syntax-error", "fl-syntax", str(exc),
                           {"line": exc.line, "column": exc.column,
                            "expectation": exc.expectation}, 422)

    # ------------------------------------------------------------------
    # endpoints

    def ep_health(self, body: dict) -> dict:
        return {"status": "ok", "node": self.node.node_id,
                "seq": len(self.node.journal.events),
                "advertised": list(self.node.advertised_terms)}

    def ep_submit_statement(self, body: dict) -> dict:
        user, fl = self._need(body, "user", "fl")
        stmt = self._parse_fl(fl)
        links = [CorrectiveLink.from_json(d) for d in body.get("links", [])]
        with self._write_lock:
            res = self.node.submit(user, stmt, links)
        if isinstance(res, Rejected):
            raise _rejection_error(res)
        return {"status": "accepted", "id": res.id,
                "canonical": stmt.canonical_form()}

    def ep_remove_statement(self, body: dict) -> dict:
        user, oid = self._need(body, "user", "id")
        with self._write_lock:
            res = self.node.remove(user, oid)
        if isinstance(res, Rejected):
            raise _rejection_error(res)
        if isinstance(res, ClonedTo):
            return {"status": "cloned", "id": res.id,
                    "new_owner": res.new_owner}
        return {"status": "removed", "id": res.id}

    def ep_rate(self, body: dict) -> dict:
        user, oid, criterion, value = self._need(
            body, "user", "object", "criterion", "value")
        try:
            with self._write_lock:
                ev = self.node.rate(user, oid, criterion, float(value))
        except UnknownId:
            raise ApiError("not-found", "unknown-id", "no such object",
                           {"ids": [oid]}, 404)
        except (OutOfRange, ValueError) as exc:
            raise ApiError("transport-error", "out-of-range", str(exc))
        return {"status": "rated", "object": ev.object,
                "criterion": ev.criterion, "value": ev.value}

    def ep_query(self, body: dict) -> dict:
        spec_of = None
        if body.get("spec_of"):
            spec_of = self._parse_fl(body["spec_of"])
        author_pred = None
        if body.get("authors"):
            allowed = set(body["authors"])
            author_pred = lambda u: u in allowed    # noqa: E731
        min_u = body.get("min_usefulness")
        try:
            f = QueryFilter(spec_of=spec_of, author_kinds=author_pred,
                            min_usefulness=min_u)
        except ValueError as exc:
            raise ApiError("transport-error", "bad-filter", str(exc))
        scores = None
        if min_u is not None or body.get("with_scores"):
            scores = self.node.compute_scores().statement_score
        results, edges = self.node.store.query(f, scores)
        rows = [{"id": o.id, "fl": o.payload.canonical_form(),
                 "author": o.author, "owner": o.owner,
                 **({"score": scores.get(o.id, 0.0)} if scores else {})}
                for o in results]
        total = len(rows)
        offset = int(body.get("offset", 0))
        limit = body.get("limit")
        if offset or limit is not None:
            end = offset + int(limit) if limit is not None else None
            page_ids = {r["id"] for r in rows[offset:end]}
            rows = rows[offset:end]
            edges = [e for e in edges if e[0] in page_ids and e[1] in page_ids]
        return {"results": rows, "edges": [list(e) for e in edges],
                "total": total}

    def ep_scores(self, body: dict) -> dict:
        scores = self.node.compute_scores()
        return {"statements": dict(sorted(scores.statement_score.items())),
                "users": dict(sorted(scores.user_score.items())),
                "iterations": scores.iterations_run,
                "converged": scores.converged,
                "as_of_seq": scores.as_of_seq}

    def ep_hierarchy(self, body: dict) -> dict:
        edges = []
        objects = {}
        for o in sorted(self.node.store.live_objects(), key=lambda o: o.id):
            objects[o.id] = {"kind": o.kind, "author": o.author,
                             "text": o.spelled()}
            for p in sorted(o.direct_generalizations):
                edges.append([o.id, p])
        return {"root": self.node.store.root_id, "objects": objects,
                "edges": edges}

    def ep_neighborhood(self, body: dict) -> dict:
        oid, depth = self._need(body, "id", "depth")
        try:
            objs, edges = self.node.neighborhood(oid, int(depth))
        except UnknownId:
            raise ApiError("not-found", "unknown-id", "no such object",
                           {"ids": [oid]}, 404)
        return {"objects": [{"id": o.id, "kind": o.kind, "text": o.spelled()}
                            for o in objs],
                "edges": [list(e) for e in edges]}

    def ep_argumentation(self, body: dict) -> dict:
        (oid,) = self._need(body, "id")
        try:
            return self.node.argumentation(oid)
        except UnknownId:
            raise ApiError("not-found", "unknown-id", "no such object",
                           {"ids": [oid]}, 404)

    def ep_nexus_advertise(self, body: dict) -> dict:
        (term,) = self._need(body, "term")
        with self._write_lock:
            self.node.advertise(term)
            self.directory_table.setdefault(term, set()).add(
                self.node.node_id)
        notified = self._notify_directories(term)
        return {"status": "advertised", "term": term,
                "node": self.node.node_id, "directories": notified}

    def _notify_directories(self, term: str) -> dict:
        """Best-effort push of the advertisement to the configured peer
        directories through their replicate-intake endpoints."""
        out = {}
        if not self.config.peer_directories:
            return out
        from .client import ClientError, ServiceClient
        record = encode_message(Message(
            "Advertise", self.node.node_id, 8, "", {"term": term}))
        for addr in self.config.peer_directories:
            try:
                ServiceClient(addr, timeout=3.0).replicate(record)
                out[addr] = "recorded"
            except ClientError as exc:
                out[addr] = f"unreachable:{exc.code}"
        return out

    def ep_who_is_nexus(self, body: dict) -> dict:
        (term,) = self._need(body, "term")
        local = {self.node.node_id} if term in self.node.advertised_terms \
            else set()
        return {"term": term,
                "nexuses": sorted(self.directory_table.get(term, set())
                                  | local)}

    def ep_replicate_intake(self, body: dict) -> dict:
        """Federation over the wire: one codec record in, one out."""
        (record,) = self._need(body, "record")
        try:
            msg = decode_message(record)
        except (ValueError, KeyError) as exc:
            raise ApiError("transport-error", "bad-record", str(exc))
        if msg.kind == "Advertise":
            with self._write_lock:
                self.directory_table.setdefault(
                    msg.payload["term"], set()).add(msg.origin)
            reply = Message("Results", self.node.node_id, 8, "",
                            {"status": "recorded"})
        elif msg.kind == "WhoIsNexus":
            answer = self.ep_who_is_nexus({"term": msg.payload["term"]})
            reply = Message("NexusAnswer", self.node.node_id, 8, "",
                            {"term": msg.payload["term"],
                             "nexuses": answer["nexuses"]})
        elif msg.kind == "PutStatement":
            fl, author = msg.payload["fl"], msg.payload["author"]
            stmt = self._parse_fl(fl)
            oid = statement_id(stmt, author)
            with self._write_lock:
                existing = self.node.store.objects.get(oid)
                if existing is not None and not existing.tombstoned:
                    status = "accepted"
                else:
                    res = self.node.submit(author, stmt)
                    status = "accepted" if isinstance(res, Accepted) \
                        else f"rejected:{res.reason}"
            reply = Message("Results", self.node.node_id, 8, oid,
                            {"put": oid, "status": status})
        else:
            raise ApiError("transport-error", "bad-record",
                           f"{msg.kind} is not accepted over intake")
        return {"reply": encode_message(reply)}

    def ep_journal_verify(self, body: dict) -> dict:
        ok, detail = self.node.verify_journal()
        return {"ok": ok, "detail": detail}


# ---------------------------------------------------------------------------
# HTTP plumbing


class _Handler(BaseHTTPRequestHandler):
    service: KbService = None
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):      # tests stay quiet
        pass

    def _reply(self, status: int, payload: dict):
        data = json.dumps(payload, sort_keys=True).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def _dispatch(self, body: dict):
        path = self.path.split("?", 1)[0]
        if not path.startswith("/api/"):
            self._reply(404, {"error": {"class": "transport-error",
                                        "code": "unknown-endpoint",
                                        "message": path}})
            return
        endpoint = path[len("/api/"):].strip("/")
        try:
            result = self.service.dispatch(self.command, endpoint, body)
            self._reply(200, result)
        except ApiError as exc:
            self._reply(exc.http_status, exc.body())
        except Exception as exc:    # noqa: BLE001 - surfaced as a 500
            self._reply(500, {"error": {"class": "transport-error",
                                        "code": "internal",
                                        "message": repr(exc)}})

    def do_GET(self):
        self._dispatch({})

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b"{}"
        try:
            body = json.loads(raw.decode() or "{}")
            if not isinstance(body, dict):
                raise ValueError("body must be a JSON object")
        except (ValueError, UnicodeDecodeError) as exc:
            self._reply(400, {"error": {"class": "transport-error",
                                        "code": "bad-json",
                                        "message": str(exc)}})
            return
        self._dispatch(body)

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()


@dataclass
class ServiceHandle:
    service: KbService
    server: ThreadingHTTPServer
    thread: threading.Thread

    @property
    def address(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def stop(self):
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5)
        self.service.node.close()


def serve(config: ServiceConfig) -> ServiceHandle:
    """Start the service; raises JournalCorrupt instead of serving from a
    bad journal."""
    service = KbService(config)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((config.host, config.port), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return ServiceHandle(service=service, server=server, thread=thread)
