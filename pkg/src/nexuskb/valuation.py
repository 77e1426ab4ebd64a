"""Ratings and the default usefulness measure.

Users rate objects per criterion in [-1, +1]; one live record per
(rater, object, criterion), re-rating supersedes.  The default "average
usefulness" combines those ratings with the argumentation structure in a
damped fixed point:

    weight(u)   = max(user_score(u) ** user_weight_exponent, 0.01)
    direct(s)   = weight-averaged veracity ratings of s (0 when unrated)
    validity(l) = clamp01(1 - link_attenuation * sum over
                                  objections-on-l of max(0, effective(source)))
    effective(s)= clamp[-1,1](direct(s)
                   + alpha * sum over arguments  max(0, eff) * validity
                   - alpha * sum over objections max(0, eff) * validity)
    user(u)     = beta * (1 + mean effective of u's statements) / 2
                  + gamma * min(1, ratings_given(u) / 10)

All updates are synchronous (each round reads the previous round's
values); iteration starts from user scores of 0.5 and effective scores of
0 and stops when the largest change falls below the tolerance.  Every
constant is a ValuationParams field: the measure is explicitly arbitrary
and meant to be re-parameterized per user.  Only veracity feeds the
recursion; other criteria aggregate to plain weighted means and are never
auto-combined across criteria.  Negative effective scores never flip an
argument into an objection (they simply stop counting).

Computation runs on a read snapshot and returns an immutable result
stamped with the journal position it reflects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

__all__ = [
    "Evaluation",
    "ValuationParams",
    "UsefulnessScores",
    "RatingBook",
    "OutOfRange",
    "UnknownObject",
    "compute_usefulness",
    "display_weight",
    "parse_params",
    "params_to_text",
]

CRITERIA_BASE = ("veracity", "originality", "significance", "usefulness")


class OutOfRange(ValueError):
    pass


class UnknownObject(KeyError):
    pass


@dataclass(frozen=True)
class Evaluation:
    rater: str
    object: str
    criterion: str
    value: float
    timestamp: float


@dataclass(frozen=True)
class ValuationParams:
    depth_damping: float = 0.5           # alpha in (0, 1]
    user_weight_exponent: float = 0.5    # the square-root stage
    user_mix: float = 0.7                # beta
    participation_mix: float = 0.3       # gamma, beta + gamma == 1
    link_attenuation: float = 0.5        # objections-on-links damping
    weight_floor: float = 0.01
    max_iters: int = 500
    tolerance: float = 1e-12

    def __post_init__(self):
        if not (0 < self.depth_damping <= 1):
            raise OutOfRange("depth_damping must lie in (0, 1]")
        if not (0 <= self.link_attenuation <= 1):
            raise OutOfRange("link_attenuation must lie in [0, 1]")
        if abs(self.user_mix + self.participation_mix - 1.0) > 1e-9:
            raise OutOfRange("user_mix + participation_mix must equal 1")
        if self.user_weight_exponent < 0:
            raise OutOfRange("user_weight_exponent must be nonnegative")
        if self.max_iters < 1 or self.tolerance <= 0:
            raise OutOfRange("bad iteration controls")


@dataclass(frozen=True)
class UsefulnessScores:
    statement_score: dict
    user_score: dict
    iterations_run: int
    converged: bool
    as_of_seq: int = 0


class RatingBook:
    """Live Evaluation records; one per (rater, object, criterion)."""

    def __init__(self):
        self.records: dict[tuple, Evaluation] = {}

    def apply(self, rater: str, object_id: str, criterion: str,
              value: float, timestamp: float) -> Evaluation:
        if not (-1.0 <= value <= 1.0):
            raise OutOfRange(f"rating {value} outside [-1, 1]")
        ev = Evaluation(rater, object_id, criterion, float(value), timestamp)
        self.records[(rater, object_id, criterion)] = ev
        return ev

    def live(self) -> Iterable[Evaluation]:
        return self.records.values()

    def for_object(self, object_id: str, criterion: str) -> list:
        return sorted((e for e in self.records.values()
                       if e.object == object_id and e.criterion == criterion),
                      key=lambda e: e.rater)

    def given_counts(self) -> dict:
        out: dict[str, int] = {}
        for e in self.records.values():
            out[e.rater] = out.get(e.rater, 0) + 1
        return out


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def compute_usefulness(statements: dict, links: list, ratings: RatingBook,
                       params: Optional[ValuationParams] = None,
                       as_of_seq: int = 0) -> UsefulnessScores:
    """Run the damped fixed point over a snapshot.

    `statements` maps statement id to author; `links` is an iterable of
    LinkRecord-shaped objects (id, kind, source, target, on_link).
    """
    p = params or ValuationParams()
    stmt_ids = sorted(statements)
    users = sorted(set(statements.values())
                   | {e.rater for e in ratings.live()})

    veracity: dict[str, list] = {}
    for e in ratings.live():
        if e.criterion == "veracity" and e.object in statements:
            veracity.setdefault(e.object, []).append(e)
    for lst in veracity.values():
        lst.sort(key=lambda e: e.rater)
    given = ratings.given_counts()

    arguments: dict[str, list] = {}
    objections: dict[str, list] = {}
    meta_objections: dict[str, list] = {}
    for l in links:
        if l.on_link:
            if l.kind == "objection":
                meta_objections.setdefault(l.target, []).append(l)
            continue
        if l.kind == "argument":
            arguments.setdefault(l.target, []).append(l)
        elif l.kind == "objection":
            objections.setdefault(l.target, []).append(l)

    eff = {s: 0.0 for s in stmt_ids}
    user = {u: 0.5 for u in users}
    iterations = 0
    converged = False

    def validity(link) -> float:
        hit = sum(max(0.0, eff.get(m.source, 0.0))
                  for m in meta_objections.get(link.id, []))
        return _clamp(1.0 - p.link_attenuation * hit, 0.0, 1.0)

    while iterations < p.max_iters:
        iterations += 1
        weights = {u: max(user[u] ** p.user_weight_exponent, p.weight_floor)
                   for u in users}

        new_eff = {}
        for s in stmt_ids:
            evs = veracity.get(s, [])
            den = sum(weights.get(e.rater, p.weight_floor) for e in evs)
            num = sum(weights.get(e.rater, p.weight_floor) * e.value
                      for e in evs)
            direct = num / den if den > 0 else 0.0
            total = direct
            for l in arguments.get(s, []):
                if l.source in eff:
                    total += (p.depth_damping * max(0.0, eff[l.source])
                              * validity(l))
            for l in objections.get(s, []):
                if l.source in eff:
                    total -= (p.depth_damping * max(0.0, eff[l.source])
                              * validity(l))
            new_eff[s] = _clamp(total, -1.0, 1.0)

        new_user = {}
        for u in users:
            mine = [new_eff[s] for s in stmt_ids if statements[s] == u]
            mean = sum(mine) / len(mine) if mine else 0.0
            part = min(1.0, given.get(u, 0) / 10.0)
            new_user[u] = (p.user_mix * (1.0 + mean) / 2.0
                           + p.participation_mix * part)

        delta = max(
            max((abs(new_eff[s] - eff[s]) for s in stmt_ids), default=0.0),
            max((abs(new_user[u] - user[u]) for u in users), default=0.0))
        eff, user = new_eff, new_user
        if delta < p.tolerance:
            converged = True
            break

    return UsefulnessScores(statement_score=eff, user_score=user,
                            iterations_run=iterations, converged=converged,
                            as_of_seq=as_of_seq)


def criterion_mean(ratings: RatingBook, object_id: str, criterion: str,
                   user_scores: Optional[dict] = None,
                   params: Optional[ValuationParams] = None) -> Optional[float]:
    """Plain weighted mean for non-veracity criteria (never auto-combined
    across criteria)."""
    p = params or ValuationParams()
    evs = ratings.for_object(object_id, criterion)
    if not evs:
        return None
    scores = user_scores or {}
    den = num = 0.0
    for e in evs:
        w = max(scores.get(e.rater, 0.5) ** p.user_weight_exponent,
                p.weight_floor)
        den += w
        num += w * e.value
    return num / den


def display_weight(score: float) -> float:
    """Font-scale factor: monotone, 2**score maps -1/0/+1 to 0.5/1.0/2.0."""
    return 2.0 ** _clamp(score, -1.0, 1.0)


# ---------------------------------------------------------------------------
# flat key=value parameter files


_FIELDS = {
    "depth_damping": float,
    "user_weight_exponent": float,
    "user_mix": float,
    "participation_mix": float,
    "link_attenuation": float,
    "weight_floor": float,
    "max_iters": int,
    "tolerance": float,
}


def parse_params(text: str) -> ValuationParams:
    values = {}
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {i}: expected key=value")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _FIELDS:
            raise ValueError(f"line {i}: unknown parameter {key!r}")
        values[key] = _FIELDS[key](val.strip())
    return ValuationParams(**values)


def params_to_text(p: ValuationParams) -> str:
    return "".join(f"{k}={getattr(p, k)}\n" for k in _FIELDS)
