"""Type ontology: subtype edges, disjointness, relation signatures.

The shipped bootstrap ontology is deliberately small: it contains the
terms used by the example corpus plus a handful of umbrella types, enough
to classify the corpus and to exercise disjointness checks.  It is not a
general-purpose upper ontology.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .notation import THING, Term

__all__ = ["Ontology", "OntologyCycle", "bootstrap_ontology"]


class OntologyCycle(Exception):
    """Adding this subtype edge would make the subtype graph cyclic."""


@dataclass
class Ontology:
    parents: dict[Term, set[Term]] = field(default_factory=dict)
    disjoint_pairs: set[frozenset] = field(default_factory=set)
    signatures: dict[Term, tuple] = field(default_factory=dict)

    # -- subtype lattice ----------------------------------------------------

    def add_subtype(self, child: Term, parent: Term) -> None:
        if parent == child:
            return
        if self.is_subtype(parent, child):
            raise OntologyCycle(f"{parent.spelled()} is already below {child.spelled()}")
        self.parents.setdefault(child, set()).add(parent)
        self._anc_cache = {}

    def ancestors(self, t: Term) -> frozenset:
        cache = getattr(self, "_anc_cache", None)
        if cache is None:
            cache = self._anc_cache = {}
        got = cache.get(t)
        if got is not None:
            return got
        seen: set[Term] = set()
        stack = [t]
        while stack:
            cur = stack.pop()
            for p in self.parents.get(cur, ()):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        got = frozenset(seen)
        cache[t] = got
        return got

    def is_subtype(self, a: Term, b: Term) -> bool:
        """Reflexive-transitive subtype test; `thing` is the top."""
        if a == b or b == THING:
            return True
        if a.is_informal or b.is_informal:
            return False
        return b in self.ancestors(a)

    # -- disjointness ---------------------------------------------------------

    def add_disjoint(self, a: Term, b: Term) -> None:
        common = ({a} | self.descendants_probe(a)) & ({b} | self.descendants_probe(b))
        if a == b or common:
            raise ValueError("disjoint types must not share a subtype")
        self.disjoint_pairs.add(frozenset((a, b)))

    def descendants_probe(self, t: Term) -> set[Term]:
        return {c for c in self.parents if self.is_subtype(c, t) and c != t}

    def are_disjoint(self, a: Term, b: Term) -> bool:
        ups_a = {a} | self.ancestors(a)
        ups_b = {b} | self.ancestors(b)
        for pa in ups_a:
            for pb in ups_b:
                if frozenset((pa, pb)) in self.disjoint_pairs:
                    return True
        return False

    # -- relation signatures -------------------------------------------------

    def set_signature(self, rel: Term, domain: Term | None, range_: Term | None):
        self.signatures[rel] = (domain, range_)

    def terms(self) -> set[Term]:
        out = set(self.parents)
        for ps in self.parents.values():
            out |= ps
        return out


def _t(name: str) -> Term:
    return Term(name, "p")


def bootstrap_ontology() -> Ontology:
    """The small ontology shipped with a fresh knowledge base."""
    onto = Ontology()
    edges = [
        # agents and bodies
        ("man", "person"), ("woman", "person"), ("person", "animal"),
        ("bird", "animal"), ("cat", "animal"),
        ("leg", "body_part"), ("head", "body_part"), ("arm", "body_part"),
        # processes
        ("flight", "process"),
        ("information_sharing", "process"),
        ("information_diffusion", "information_sharing_subtask"),
        ("information_retrieval", "information_sharing_subtask"),
        ("information_validation", "information_sharing_subtask"),
        ("information_sharing_subtask", "process"),
        ("peer_reviewing", "information_validation"),
        # artifacts and values
        ("information_object", "object"),
        ("car", "vehicle"), ("vehicle", "object"),
        ("kg", "measurement_unit"),
        ("weight", "attribute_kind"), ("color", "attribute_kind"),
        ("red", "color_value"),
        # places
        ("France", "country"), ("country", "location"),
        # argumentation relations, organized as terms too
        ("corrective_precision", "correction"),
        ("corrective_generalization", "correction"),
        ("restrictive_correction", "correction"),
    ]
    for child, parent in edges:
        onto.add_subtype(_t(child), _t(parent))
    onto.add_disjoint(_t("animal"), _t("object"))
    onto.add_disjoint(_t("person"), _t("body_part"))
    onto.add_disjoint(_t("man"), _t("cat"))
    onto.set_signature(_t("part"), THING, THING)
    onto.set_signature(_t("name"), THING, None)
    return onto
