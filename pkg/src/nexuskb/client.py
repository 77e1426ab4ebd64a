"""Thin HTTP client for the service API (used by the CLI's --server mode)."""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from typing import Optional


class ClientError(Exception):
    """A non-2xx reply or an unreachable service, keyed by error class."""

    def __init__(self, class_: str, code: str, message: str, details=None):
        self.class_ = class_
        self.code = code
        self.details = details or {}
        super().__init__(message)


class ServiceClient:
    def __init__(self, base: str, timeout: float = 10.0):
        self.base = base.rstrip("/")
        if not self.base.startswith("http"):
            self.base = "http://" + self.base
        self.timeout = timeout

    def call(self, endpoint: str, body: Optional[dict] = None,
             method: str = "POST") -> dict:
        url = f"{self.base}/api/{endpoint}"
        data = None
        headers = {}
        if method == "POST":
            data = json.dumps(body or {}).encode()
            headers["Content-Type"] = "application/json"
        req = urllib.request.Request(url, data=data, headers=headers,
                                     method=method)
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode())
        except urllib.error.HTTPError as exc:
            try:
                err = json.loads(exc.read().decode())["error"]
            except Exception:
                raise ClientError("transport-error", "bad-reply",
                                  f"HTTP {exc.code} without an error body")
            details = {k: v for k, v in err.items()
                       if k not in ("class", "code", "message")}
            raise ClientError(err["class"], err["code"], err["message"],
                              details)
        except urllib.error.URLError as exc:
            raise ClientError("transport-error", "unreachable", str(exc))

    # convenience wrappers ---------------------------------------------------

    def health(self):
        return self.call("health", method="GET")

    def submit(self, user: str, fl: str, links: Optional[list] = None):
        return self.call("submit-statement",
                         {"user": user, "fl": fl, "links": links or []})

    def remove(self, user: str, oid: str):
        return self.call("remove-statement", {"user": user, "id": oid})

    def rate(self, user: str, oid: str, criterion: str, value: float):
        return self.call("rate", {"user": user, "object": oid,
                                  "criterion": criterion, "value": value})

    def query(self, **kwargs):
        return self.call("query", kwargs)

    def scores(self):
        return self.call("scores", method="GET")

    def hierarchy(self):
        return self.call("hierarchy", method="GET")

    def neighborhood(self, oid: str, depth: int):
        return self.call("neighborhood", {"id": oid, "depth": depth})

    def argumentation(self, oid: str):
        return self.call("argumentation", {"id": oid})

    def advertise(self, term: str):
        return self.call("nexus-advertise", {"term": term})

    def who_is_nexus(self, term: str):
        return self.call("who-is-nexus", {"term": term})

    def replicate(self, record: str):
        return self.call("replicate-intake", {"record": record})

    def journal_verify(self):
        return self.call("journal-verify", method="GET")
