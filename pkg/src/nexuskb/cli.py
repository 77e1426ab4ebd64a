"""Command-line entry point.

Every operation is drivable here, either against a local journal-backed
knowledge base (`--kb journal-path`, ephemeral when omitted) or against a
running service (`--server address`); the command surface is identical in
both modes because the local mode drives the same endpoint dispatch the
service exposes over HTTP.

Exit codes: 0 success, 1 failed checks, 2 usage, 3 protocol violation,
4 syntax error, 5 transport error, 6 not found.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .client import ClientError, ServiceClient
from .federation import run_scenario
from .logic import export_logic, expressiveness_report
from .notation import FlSyntaxError, parse, print_statement
from .protocol import JournalCorrupt
from .service import ApiError, KbService, ServiceConfig, serve

EXIT_CHECKS = 1
EXIT_USAGE = 2
EXIT_PROTOCOL = 3
EXIT_SYNTAX = 4
EXIT_TRANSPORT = 5
EXIT_NOT_FOUND = 6

_CLASS_EXITS = {
    "protocol-violation": EXIT_PROTOCOL,
    "syntax-error": EXIT_SYNTAX,
    "transport-error": EXIT_TRANSPORT,
    "not-found": EXIT_NOT_FOUND,
}


class _Driver:
    """One call surface over either the in-process service core or HTTP."""

    def __init__(self, args):
        self.args = args
        self.remote = None
        self.local = None
        if args.server:
            self.remote = ServiceClient(args.server)
        else:
            config = ServiceConfig(journal_path=args.kb,
                                   params_path=args.params)
            self.local = KbService(config)

    def call(self, endpoint: str, body: Optional[dict] = None,
             method: str = "POST") -> dict:
        if self.remote is not None:
            return self.remote.call(endpoint, body or {}, method=method)
        return self.local.dispatch(method, endpoint, body or {})

    def close(self):
        if self.local is not None:
            self.local.node.close()


def _emit(args, payload: dict, text_lines):
    if args.format == "machine":
        print(json.dumps(payload, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _error_exit(args, class_: str, code: str, message: str, details) -> int:
    payload = {"error": {"class": class_, "code": code, "message": message,
                         **(details or {})}}
    if args.format == "machine":
        print(json.dumps(payload, sort_keys=True))
    else:
        print(f"error ({class_}/{code}): {message}", file=sys.stderr)
        if details:
            print(f"  {json.dumps(details, sort_keys=True)}", file=sys.stderr)
    return _CLASS_EXITS.get(class_, EXIT_TRANSPORT)


# ---------------------------------------------------------------------------
# commands


def cmd_parse(args) -> int:
    try:
        g = parse(args.fl)
    except FlSyntaxError as exc:
        return _error_exit(args, "syntax-error", "fl-syntax", str(exc),
                           {"line": exc.line, "column": exc.column})
    canonical = print_statement(g)
    report = {t: {"expressible": r.expressible, "offending": r.offending}
              for t, r in expressiveness_report(g).items()}
    _emit(args, {"canonical": canonical, "expressiveness": report},
          [canonical])
    return 0


def cmd_export_logic(args) -> int:
    try:
        g = parse(args.fl)
    except FlSyntaxError as exc:
        return _error_exit(args, "syntax-error", "fl-syntax", str(exc),
                           {"line": exc.line, "column": exc.column})
    out = export_logic(g)
    _emit(args, {"logic": out.text, "extended": out.extended},
          [out.text] + (["; extended encoding used"] if out.extended else []))
    return 0


def _driver_command(fn):
    def wrapped(args) -> int:
        driver = _Driver(args)
        try:
            return fn(args, driver)
        except ApiError as exc:
            return _error_exit(args, exc.class_, exc.code, str(exc),
                               exc.details)
        except ClientError as exc:
            return _error_exit(args, exc.class_, exc.code, str(exc),
                               exc.details)
        except JournalCorrupt as exc:
            return _error_exit(args, "transport-error", "journal-corrupt",
                               str(exc), {"seq": exc.seq})
        finally:
            driver.close()
    return wrapped


@_driver_command
def cmd_add(args, driver) -> int:
    links = []
    for spec in args.link or []:
        kind, _, target = spec.partition(":")
        if not target:
            raise ApiError("transport-error", "bad-link-flag",
                           "links are written kind:target-id")
        links.append({"kind": kind, "target": target, "meta": []})
    res = driver.call("submit-statement",
                      {"user": args.user, "fl": args.fl, "links": links})
    _emit(args, res, [f"accepted {res['id']}", res["canonical"]])
    return 0


@_driver_command
def cmd_remove(args, driver) -> int:
    res = driver.call("remove-statement", {"user": args.user, "id": args.id})
    line = (f"cloned to {res['new_owner']}" if res["status"] == "cloned"
            else "removed")
    _emit(args, res, [f"{line} {res['id']}"])
    return 0


@_driver_command
def cmd_query(args, driver) -> int:
    body = {}
    if args.spec:
        body["spec_of"] = args.spec
    if args.min_usefulness is not None:
        body["min_usefulness"] = args.min_usefulness
    if args.authors:
        body["authors"] = args.authors.split(",")
    res = driver.call("query", body)
    lines = []
    for row in res["results"]:
        score = f"\t{row['score']:+.4f}" if "score" in row else ""
        lines.append(f"{row['id']}\t{row['author']}{score}\t{row['fl']}")
    for child, parent in res["edges"]:
        lines.append(f"edge\t{child}\t->\t{parent}")
    _emit(args, res, lines or ["no matches"])
    return 0


@_driver_command
def cmd_rate(args, driver) -> int:
    res = driver.call("rate", {"user": args.user, "object": args.id,
                               "criterion": args.criterion,
                               "value": args.value})
    _emit(args, res, [f"rated {res['object']} {res['criterion']}="
                      f"{res['value']}"])
    return 0


@_driver_command
def cmd_scores(args, driver) -> int:
    res = driver.call("scores", method="GET")
    lines = [f"{oid}\t{score:+.6f}"
             for oid, score in res["statements"].items()]
    lines += [f"user\t{u}\t{score:.6f}" for u, score in res["users"].items()]
    lines.append(f"converged={res['converged']} "
                 f"iterations={res['iterations']}")
    _emit(args, res, lines)
    return 0


@_driver_command
def cmd_hierarchy(args, driver) -> int:
    res = driver.call("hierarchy", method="GET")
    lines = [f"{child}\t{parent}" for child, parent in res["edges"]]
    _emit(args, res, lines or ["empty"])
    return 0


@_driver_command
def cmd_argumentation(args, driver) -> int:
    res = driver.call("argumentation", {"id": args.id})

    def render(node, indent=0):
        pad = "  " * indent
        out = [f"{pad}{node['id'][:12]} by {node['author']}: "
               f"{node['text'][:70]}"]
        for link in node["links"]:
            out.append(f"{pad}  <{link['kind']} by {link['author']}>")
            out.extend(render(link["source"], indent + 2))
            for meta in link["meta"]:
                out.append(f"{pad}    [on the link: {meta['kind']} "
                           f"by {meta['author']}]")
                out.extend(render(meta["source"], indent + 3))
        return out

    _emit(args, res, render(res))
    return 0


@_driver_command
def cmd_journal_verify(args, driver) -> int:
    res = driver.call("journal-verify", method="GET")
    _emit(args, res, [res["detail"]])
    return 0 if res["ok"] else EXIT_CHECKS


@_driver_command
def cmd_peer(args, driver) -> int:
    if args.peer_command == "advertise":
        res = driver.call("nexus-advertise", {"term": args.term})
        _emit(args, res, [f"now a nexus for {res['term']}"])
        return 0
    if args.term:
        res = driver.call("who-is-nexus", {"term": args.term})
        _emit(args, res, [f"{res['term']}: "
                          f"{', '.join(res['nexuses']) or '(none known)'}"])
        return 0
    res = driver.call("health", method="GET")
    _emit(args, res, [f"node {res['node']} advertises: "
                      f"{', '.join(res.get('advertised', [])) or '(nothing)'}"])
    return 0


def cmd_serve(args) -> int:
    host, _, port = args.listen.partition(":")
    config = ServiceConfig(host=host or "127.0.0.1",
                           port=int(port or 0),
                           journal_path=args.kb,
                           node_id=args.node_id,
                           params_path=args.params)
    try:
        handle = serve(config)
    except JournalCorrupt as exc:
        return _error_exit(args, "transport-error", "journal-corrupt",
                           str(exc), {"seq": exc.seq})
    print(f"serving on {handle.address} (journal: {args.kb or 'ephemeral'})")
    try:
        handle.thread.join()
    except KeyboardInterrupt:
        handle.stop()
    return 0


def cmd_scenario(args) -> int:
    with open(args.file, encoding="utf-8") as fh:
        script = fh.read()
    report = run_scenario(script, seed=args.seed, duplicate=args.dup)
    if args.format == "machine":
        print(json.dumps({"checks": report["checks"],
                          "all_passed": report["all_passed"],
                          "messages": report["messages"],
                          "trace": report["trace"]}, sort_keys=True))
    else:
        for line in report["trace"]:
            print(line)
        for name, ok, detail in report["checks"]:
            print(f"{'pass' if ok else 'FAIL'}  {name}: {detail}")
        print("all checks passed" if report["all_passed"]
              else "SOME CHECKS FAILED")
    return 0 if report["all_passed"] else EXIT_CHECKS


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="nexuskb",
        description="Collaborative knowledge base: parse, edit, rate, "
                    "replicate.")
    top.add_argument("--kb", help="journal path for in-process mode")
    top.add_argument("--server", help="service address for remote mode")
    top.add_argument("--format", choices=("text", "machine"), default="text")
    top.add_argument("--params", help="valuation parameter file (key=value)")
    # the same flags are accepted after the subcommand; SUPPRESS keeps an
    # omitted trailing flag from clobbering one given up front
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--kb", default=argparse.SUPPRESS)
    shared.add_argument("--server", default=argparse.SUPPRESS)
    shared.add_argument("--format", choices=("text", "machine"),
                        default=argparse.SUPPRESS)
    shared.add_argument("--params", default=argparse.SUPPRESS)
    sub = top.add_subparsers(dest="command", required=True,
                             parser_class=lambda **kw: argparse.ArgumentParser(
                                 parents=[shared], **kw))

    p = sub.add_parser("parse", help="parse FL text, print canonical form")
    p.add_argument("fl")
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("export-logic", help="s-expression logic export")
    p.add_argument("fl")
    p.set_defaults(fn=cmd_export_logic)

    p = sub.add_parser("add", help="submit a statement")
    p.add_argument("fl")
    p.add_argument("--user", required=True)
    p.add_argument("--link", action="append",
                   help="corrective link kind:target-id (repeatable)")
    p.set_defaults(fn=cmd_add)

    p = sub.add_parser("remove", help="remove (or clone away) a statement")
    p.add_argument("id")
    p.add_argument("--user", required=True)
    p.set_defaults(fn=cmd_remove)

    p = sub.add_parser("query", help="hierarchy-ordered search")
    p.add_argument("--spec", help="FL statement results must specialize")
    p.add_argument("--min-usefulness", type=float)
    p.add_argument("--authors", help="comma-separated author filter")
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("rate", help="rate an object on a criterion")
    p.add_argument("id")
    p.add_argument("criterion")
    p.add_argument("value", type=float)
    p.add_argument("--user", required=True)
    p.set_defaults(fn=cmd_rate)

    p = sub.add_parser("scores", help="usefulness fixed point")
    p.set_defaults(fn=cmd_scores)

    p = sub.add_parser("hierarchy", help="childId<TAB>parentId edges")
    p.set_defaults(fn=cmd_hierarchy)

    p = sub.add_parser("argumentation", help="argumentation structure")
    p.add_argument("id")
    p.set_defaults(fn=cmd_argumentation)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--listen", default="127.0.0.1:7341")
    p.add_argument("--node-id", default="node")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("journal-verify",
                       help="replay the journal and compare state dumps")
    p.set_defaults(fn=cmd_journal_verify)

    p = sub.add_parser("peer", help="nexus advertisement and lookup")
    p.add_argument("peer_command", choices=("advertise", "list"))
    p.add_argument("term", nargs="?")
    p.set_defaults(fn=cmd_peer)

    p = sub.add_parser("scenario", help="run a replication scenario script")
    p.add_argument("scenario_command", choices=("run",))
    p.add_argument("file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dup", action="store_true",
                   help="duplicate-delivery scheduler")
    p.set_defaults(fn=cmd_scenario)

    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "peer" and args.peer_command == "advertise" \
            and not args.term:
        print("peer advertise needs a term", file=sys.stderr)
        return EXIT_USAGE
    return args.fn(args)


def console() -> None:     # pragma: no cover - setuptools entry point
    sys.exit(main())


if __name__ == "__main__":   # pragma: no cover
    sys.exit(main())
