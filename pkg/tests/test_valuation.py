"""Usefulness scoring: fixed point vs the naive oracle, plus properties."""

import math
import random
from pathlib import Path

import pytest

from nexuskb.node import KbNode
from nexuskb.notation import parse_many
from nexuskb.valuation import (
    OutOfRange,
    RatingBook,
    ValuationParams,
    compute_usefulness,
    criterion_mean,
    display_weight,
    params_to_text,
    parse_params,
)

from .gennets import NetLink, gen_network
from .oracles.valuation_oracle import run_fixed_point

FIXTURES = Path(__file__).parent / "fixtures"


def book_from(ratings):
    book = RatingBook()
    for i, r in enumerate(ratings):
        book.apply(r["rater"], r["object"], r["criterion"], r["value"], float(i))
    return book


def run_both(statements, links, ratings):
    ours = compute_usefulness(statements, links, book_from(ratings))
    theirs = run_fixed_point(statements, [l.as_dict() for l in links], ratings)
    return ours, theirs


# ---------------------------------------------------------------------------
# reference cases


def test_empty_kb_converges_immediately():
    scores = compute_usefulness({}, [], RatingBook())
    assert scores.statement_score == {} and scores.user_score == {}
    assert scores.converged and scores.iterations_run == 1


def test_single_statement_single_rater_closed_form():
    # one author, one rater at 0.5, no links: direct == rating; the rater's
    # weight cancels in the normalized mean
    statements = {"s1": "author"}
    ratings = [{"rater": "rater", "object": "s1",
                "criterion": "veracity", "value": 0.5}]
    ours, (eff, user, _, conv) = run_both(statements, [], ratings)
    assert conv
    assert math.isclose(ours.statement_score["s1"], 0.5, abs_tol=1e-9)
    assert math.isclose(eff["s1"], 0.5, abs_tol=1e-9)
    # author's score: beta*(1+0.5)/2 + gamma*0; rater's: beta*0.5 + gamma*0.1
    assert math.isclose(ours.user_score["author"], 0.7 * 0.75, abs_tol=1e-9)
    assert math.isclose(ours.user_score["rater"],
                        0.7 * 0.5 + 0.3 * 0.1, abs_tol=1e-9)
    assert math.isclose(user["author"], ours.user_score["author"], abs_tol=1e-12)


def test_meta_objection_attenuates_objection():
    # argument and objection both rated +1; a meta-objection on the
    # objection link, rated +1, weakens the objection's pull
    statements = {"root": "p", "arg": "q", "obj": "oc", "meta": "p"}
    links = [
        NetLink("1.1", "argument", "arg", "root", False),
        NetLink("1.2", "objection", "obj", "root", False),
        NetLink("1.3", "objection", "meta", "1.2", True),
    ]
    ratings = [
        {"rater": "q", "object": "arg", "criterion": "veracity", "value": 1.0},
        {"rater": "q", "object": "obj", "criterion": "veracity", "value": 1.0},
        {"rater": "p", "object": "meta", "criterion": "veracity", "value": 1.0},
    ]
    with_meta, (oracle_with, _, _, _) = run_both(statements, links, ratings)
    ablated_links = links[:2]
    without_meta, (oracle_without, _, _, _) = run_both(
        statements, ablated_links, ratings)
    assert with_meta.statement_score["root"] > without_meta.statement_score["root"]
    assert oracle_with["root"] > oracle_without["root"]


def test_corpus_example_meta_objection_through_the_node():
    n = KbNode()
    stmts = parse_many((FIXTURES / "corpus.fl").read_text())
    res = n.submit("p", stmts[5])
    root_id = res.id
    tree = n.argumentation(root_id)
    arg = next(l for l in tree["links"] if l["kind"] == "argument")
    obj = next(l for l in tree["links"] if l["kind"] == "objection")
    meta_obj = obj["meta"][0]["source"]["id"]
    n.rate("q", arg["source"]["id"], "veracity", 1.0)
    n.rate("q", obj["source"]["id"], "veracity", 1.0)
    n.rate("p", meta_obj, "veracity", 1.0)

    full = n.compute_scores()
    statements = {o.id: o.author for o in n.store.live_statements()}
    ablated = [l for l in n.protocol.links.values()
               if not (l.on_link and l.source == meta_obj)]
    partial = compute_usefulness(statements, ablated, n.ratings, n.params)
    assert full.statement_score[root_id] > partial.statement_score[root_id]


# ---------------------------------------------------------------------------
# oracle equivalence


def test_oracle_equivalence_on_random_networks():
    rng = random.Random(17)
    for _ in range(60):
        statements, links, ratings = gen_network(rng)
        ours, (eff, user, _, _) = run_both(statements, links, ratings)
        for s in statements:
            assert abs(ours.statement_score[s] - eff[s]) < 1e-9
        for u in ours.user_score:
            assert abs(ours.user_score[u] - user[u]) < 1e-9


def test_determinism_bitwise():
    rng = random.Random(23)
    statements, links, ratings = gen_network(rng)
    a = compute_usefulness(statements, links, book_from(ratings))
    b = compute_usefulness(statements, links, book_from(ratings))
    assert a.statement_score == b.statement_score
    assert a.user_score == b.user_score


# ---------------------------------------------------------------------------
# properties


def test_scores_stay_bounded():
    rng = random.Random(31)
    for _ in range(40):
        statements, links, ratings = gen_network(rng)
        scores = compute_usefulness(statements, links, book_from(ratings))
        assert all(-1.0 <= v <= 1.0 for v in scores.statement_score.values())
        assert all(0.0 <= v <= 1.0 for v in scores.user_score.values())


def one_step(statements, links, book):
    params = ValuationParams(max_iters=1, tolerance=1e-30)
    return compute_usefulness(statements, links, book, params)


def test_positive_rating_monotone_at_step_level():
    rng = random.Random(37)
    for _ in range(25):
        statements, links, ratings = gen_network(rng)
        sid = sorted(statements)[0]
        base = one_step(statements, links, book_from(ratings))
        extra = ratings + [{"rater": "fresh", "object": sid,
                            "criterion": "veracity", "value": 1.0}]
        bumped = one_step(statements, links, book_from(extra))
        assert bumped.statement_score[sid] >= base.statement_score[sid] - 1e-12


def test_objection_monotone_at_step_level():
    statements = {"s": "p", "o": "q"}
    ratings = [{"rater": "r", "object": "s", "criterion": "veracity", "value": 0.6},
               {"rater": "r", "object": "o", "criterion": "veracity", "value": 0.9}]
    book = book_from(ratings)
    # two steps so the objection has a positive effective score to apply
    params = ValuationParams(max_iters=2, tolerance=1e-30)
    without = compute_usefulness(statements, [], book, params)
    with_obj = compute_usefulness(
        statements, [NetLink("1.1", "objection", "o", "s", False)], book, params)
    assert with_obj.statement_score["s"] <= without.statement_score["s"] + 1e-12


def test_cyclic_objections_terminate():
    statements = {"a": "p", "b": "q"}
    links = [NetLink("1.1", "objection", "a", "b", False),
             NetLink("2.1", "objection", "b", "a", False)]
    ratings = [{"rater": "r", "object": "a", "criterion": "veracity", "value": 1.0},
               {"rater": "r", "object": "b", "criterion": "veracity", "value": 1.0}]
    scores = compute_usefulness(statements, links, book_from(ratings))
    assert scores.iterations_run <= ValuationParams().max_iters
    assert all(-1 <= v <= 1 for v in scores.statement_score.values())


# ---------------------------------------------------------------------------
# ratings plumbing and display


def test_rate_supersedes():
    n = KbNode()
    a = n.submit("p", "a p#cat")
    n.rate("q", a.id, "veracity", 1.0)
    n.rate("q", a.id, "veracity", 0.2)
    live = [e for e in n.ratings.live() if e.object == a.id]
    assert len(live) == 1 and live[0].value == 0.2


def test_rate_unknown_object():
    n = KbNode()
    with pytest.raises(KeyError):
        n.rate("q", "ghost", "veracity", 1.0)


def test_rate_out_of_range():
    n = KbNode()
    a = n.submit("p", "a p#cat")
    with pytest.raises(OutOfRange):
        n.rate("q", a.id, "veracity", 1.5)


def test_other_criteria_aggregate_separately():
    book = RatingBook()
    book.apply("u1", "s1", "originality", 0.4, 1.0)
    book.apply("u2", "s1", "originality", 0.8, 2.0)
    mean = criterion_mean(book, "s1", "originality")
    assert 0.4 < mean < 0.8
    assert criterion_mean(book, "s1", "significance") is None


def test_display_weight_reference_points():
    assert display_weight(-1.0) == 0.5
    assert display_weight(0.0) == 1.0
    assert display_weight(1.0) == 2.0
    xs = [x / 10 for x in range(-10, 11)]
    ys = [display_weight(x) for x in xs]
    assert ys == sorted(ys)
    assert all(0.5 <= y <= 2.0 for y in ys)


def test_params_file_round_trip():
    p = ValuationParams(depth_damping=0.4, user_mix=0.6, participation_mix=0.4)
    text = params_to_text(p)
    assert parse_params(text) == p
    with pytest.raises(ValueError):
        parse_params("nonsense=1\n")
    with pytest.raises(OutOfRange):
        parse_params("user_mix=0.9\n")   # gamma no longer complements
