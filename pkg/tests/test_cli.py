"""CLI surface: exit codes, formats, golden stability, both drivers."""

import json
from pathlib import Path

import pytest

from nexuskb.cli import main
from nexuskb.service import ServiceConfig, serve

SCENARIOS = Path(__file__).parent.parent / "scenarios"
JOE = 'a p#man p#name: "Joe", p#part: a p#leg'


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------------------
# pure commands


def test_parse_prints_canonical(capsys):
    code, out, _ = run(capsys, "parse", JOE)
    assert code == 0
    assert out.strip() == 'a p#man p#name: "Joe", p#part: a p#leg;'


def test_parse_syntax_error_exit_4(capsys):
    code, _, err = run(capsys, "parse", "a p#man p#part:")
    assert code == 4
    assert "syntax-error" in err


def test_export_logic(capsys):
    code, out, _ = run(capsys, "export-logic", JOE)
    assert code == 0
    assert out.startswith("(exists ((?m p#man)")


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["add", "a p#man"])      # missing required --user
    assert exc.value.code == 2


def test_global_flags_accepted_after_subcommand(tmp_path, capsys):
    kb = str(tmp_path / "kb.journal")
    code, out, _ = run(capsys, "add", JOE, "--user", "p",
                       "--kb", kb, "--format", "machine")
    assert code == 0
    oid = json.loads(out)["id"]
    code, out, _ = run(capsys, "query", "--spec", "a p#man", "--kb", kb)
    assert code == 0 and oid in out


# ---------------------------------------------------------------------------
# kb-file mode


def test_add_query_rate_scores_flow(tmp_path, capsys):
    kb = str(tmp_path / "kb.journal")
    code, out, _ = run(capsys, "--kb", kb, "--format", "machine",
                       "add", JOE, "--user", "p")
    assert code == 0
    oid = json.loads(out)["id"]

    code, out, _ = run(capsys, "--kb", kb, "rate", oid, "veracity", "0.8",
                       "--user", "q")
    assert code == 0

    code, out, _ = run(capsys, "--kb", kb, "--format", "machine",
                       "query", "--spec", "a p#man",
                       "--min-usefulness", "0.2")
    assert code == 0
    res = json.loads(out)
    assert [r["id"] for r in res["results"]] == [oid]
    assert res["results"][0]["score"] > 0.2

    code, out, _ = run(capsys, "--kb", kb, "scores")
    assert code == 0 and oid in out


def test_remove_not_owner_exit_3(tmp_path, capsys):
    kb = str(tmp_path / "kb.journal")
    _, out, _ = run(capsys, "--kb", kb, "--format", "machine",
                    "add", "a p#cat", "--user", "p")
    oid = json.loads(out)["id"]
    code, _, err = run(capsys, "--kb", kb, "remove", oid, "--user", "q")
    assert code == 3
    assert "not-owner" in err


def test_unknown_id_exit_6(tmp_path, capsys):
    kb = str(tmp_path / "kb.journal")
    code, _, err = run(capsys, "--kb", kb, "argumentation", "0" * 64)
    assert code == 6


def test_add_with_link_flag(tmp_path, capsys):
    kb = str(tmp_path / "kb.journal")
    _, out, _ = run(capsys, "--kb", kb, "--format", "machine",
                    "add", "every p#man p#part: at most 2 p#leg",
                    "--user", "p")
    first = json.loads(out)["id"]
    code, _, err = run(capsys, "--kb", kb, "add",
                       "every p#man p#part: at least 3 p#leg", "--user", "q")
    assert code == 3
    code, out, _ = run(capsys, "--kb", kb, "--format", "machine", "add",
                       "every p#man p#part: at least 3 p#leg", "--user", "q",
                       "--link", f"objection:{first}")
    assert code == 0


def test_hierarchy_and_journal_verify(tmp_path, capsys):
    kb = str(tmp_path / "kb.journal")
    run(capsys, "--kb", kb, "add", JOE, "--user", "p")
    code, out, _ = run(capsys, "--kb", kb, "hierarchy")
    assert code == 0 and "\t" in out.splitlines()[0]
    code, out, _ = run(capsys, "--kb", kb, "journal-verify")
    assert code == 0 and "bit-exactly" in out


def test_machine_output_stable_across_runs(tmp_path, capsys):
    """Identical command sequences on fresh journals produce identical
    machine output (content-hash ids, logical timestamps)."""

    def drive(kb):
        lines = []
        for argv in (
            ["--kb", kb, "--format", "machine", "add", JOE, "--user", "p"],
            ["--kb", kb, "--format", "machine", "add",
             "every p#man p#part: at most 2 p#leg", "--user", "q"],
            ["--kb", kb, "--format", "machine", "query", "--spec", "a p#man"],
            ["--kb", kb, "--format", "machine", "scores"],
            ["--kb", kb, "--format", "machine", "hierarchy"],
        ):
            code = main(argv)
            assert code == 0
            lines.append(capsys.readouterr().out)
        return "".join(lines)

    a = drive(str(tmp_path / "one.journal"))
    b = drive(str(tmp_path / "two.journal"))
    assert a == b


def test_scores_golden(tmp_path, capsys):
    kb = str(tmp_path / "kb.journal")
    run(capsys, "--kb", kb, "--format", "machine", "add", "a p#cat",
        "--user", "p")
    _, query_out, _ = run(capsys, "--kb", kb, "--format", "machine",
                          "query", "--spec", "a p#cat")
    oid = json.loads(query_out)["results"][0]["id"]
    run(capsys, "--kb", kb, "rate", oid, "veracity", "1.0", "--user", "q")
    code, out, _ = run(capsys, "--kb", kb, "--format", "machine", "scores")
    res = json.loads(out)
    golden = (Path(__file__).parent / "fixtures" / "scores_golden.json")
    expected = json.loads(golden.read_text())
    assert res == expected


# ---------------------------------------------------------------------------
# scenario and peers


def test_scenario_run_reports_all_checks(capsys):
    code, out, _ = run(capsys, "scenario", "run",
                       str(SCENARIOS / "convergence_basic.scn"),
                       "--seed", "7")
    assert code == 0
    assert "all checks passed" in out


def test_peer_advertise_and_list(tmp_path, capsys):
    kb = str(tmp_path / "kb.journal")
    code, out, _ = run(capsys, "--kb", kb, "peer", "advertise", "p#man")
    assert code == 0 and "nexus for p#man" in out
    code, out, _ = run(capsys, "--kb", kb, "peer", "list", "p#man")
    assert code == 0 and "p#man:" in out


# ---------------------------------------------------------------------------
# server mode


def test_cli_against_live_server(tmp_path, capsys):
    handle = serve(ServiceConfig(journal_path=str(tmp_path / "kb.journal")))
    try:
        code, out, _ = run(capsys, "--server", handle.address,
                           "--format", "machine", "add", JOE, "--user", "p")
        assert code == 0
        oid = json.loads(out)["id"]
        code, out, _ = run(capsys, "--server", handle.address, "query",
                           "--spec", "a p#man")
        assert code == 0 and oid in out
    finally:
        handle.stop()


def test_unreachable_server_exit_5(capsys):
    code, _, err = run(capsys, "--server", "http://127.0.0.1:1",
                       "query", "--spec", "a p#man")
    assert code == 5
    assert "transport-error" in err
