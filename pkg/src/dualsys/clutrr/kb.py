"""Kinship knowledge base: ground relation atoms saturated under a rule set.

Relations are gender neutral and read left to right: ``child(x, y)`` means
*the child of x is y*; the ``inv_`` prefix marks inverses; ``grand`` is the
grandchild relation and ``un`` the aunt/uncle relation. Saturation closes an
atom set under the composition, inverse, symmetry, ancestor and
sibling-transitivity rules, introduces Skolem witnesses for the two
existential rules, and then evaluates the negative constraints:

- nobody is their own (or a mutual) ancestor;
- nobody is their own sibling;
- a parent cannot be an aunt/uncle of the same person;
- spouses cannot be siblings.

The engine is a forward-chaining fixpoint over ground Horn clauses. Skolem
individuals get deterministic names (``_s0``, ``_s1``, ...), introduced in
lexicographic order of their triggering atoms, so saturation of equal inputs
is bit-for-bit reproducible.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

CHILD = "child"
INV_CHILD = "inv_child"
GRAND = "grand"
INV_GRAND = "inv_grand"
SIBLING = "sibling"
SO = "SO"
UN = "un"
INV_UN = "inv_un"
IN_LAW = "in_law"
INV_IN_LAW = "inv_in_law"
ANCESTOR = "ancestor"

RELATIONS = (
    CHILD, INV_CHILD, GRAND, INV_GRAND, SIBLING, SO,
    UN, INV_UN, IN_LAW, INV_IN_LAW, ANCESTOR,
)

# first(x, z) and second(z, y) imply out(x, y); the flag demands x != y.
COMPOSITION_RULES: tuple[tuple[str, str, str, bool], ...] = (
    (CHILD, CHILD, GRAND, False),
    (GRAND, SIBLING, GRAND, False),
    (INV_CHILD, INV_CHILD, INV_GRAND, False),
    (SIBLING, INV_GRAND, INV_GRAND, False),
    (CHILD, SIBLING, CHILD, False),
    (SO, CHILD, CHILD, False),
    (SIBLING, INV_CHILD, INV_CHILD, False),
    (CHILD, INV_GRAND, INV_CHILD, False),
    (INV_CHILD, CHILD, SIBLING, True),
    (CHILD, SO, IN_LAW, False),
    (SO, INV_CHILD, INV_IN_LAW, False),
    (SIBLING, CHILD, INV_UN, False),
    (INV_CHILD, SIBLING, UN, False),
    (SIBLING, SIBLING, SIBLING, True),
    (ANCESTOR, ANCESTOR, ANCESTOR, False),
)

# a(x, y) implies b(y, x). Inverse pairs both ways, the two symmetric
# relations, and the ancestor definition.
FLIP_RULES: tuple[tuple[str, str], ...] = (
    (CHILD, INV_CHILD),
    (INV_CHILD, CHILD),
    (IN_LAW, INV_IN_LAW),
    (INV_IN_LAW, IN_LAW),
    (GRAND, INV_GRAND),
    (INV_GRAND, GRAND),
    (UN, INV_UN),
    (INV_UN, UN),
    (SIBLING, SIBLING),
    (SO, SO),
    (CHILD, ANCESTOR),
    (GRAND, ANCESTOR),
)

Atom = tuple[str, str, str]


@dataclass(frozen=True, order=True)
class RelationAtom:
    rel: str
    subject: str
    object: str

    def to_json(self) -> dict[str, str]:
        return {"rel": self.rel, "subject": self.subject, "object": self.object}

    def as_tuple(self) -> Atom:
        return (self.rel, self.subject, self.object)

    @classmethod
    def from_tuple(cls, t: Atom) -> "RelationAtom":
        return cls(*t)

    def __str__(self) -> str:
        return f"{self.rel}({self.subject}, {self.object})"


@dataclass(frozen=True)
class Contradiction:
    """A violated negative constraint and the atoms instantiating it."""

    constraint: str
    atoms: tuple[RelationAtom, ...]

    def __str__(self) -> str:
        shown = ", ".join(str(a) for a in self.atoms)
        return f"{self.constraint}: {shown}"


class SkolemBudgetExceeded(RuntimeError):
    """Internal marker; exhaustion is reported on the KB, never raised out."""


def _horn_close(atoms: set[Atom]) -> set[Atom]:
    """Least fixpoint of the composition and flip rules (worklist)."""
    by_first: dict[tuple[str, str], set[str]] = {}
    by_second: dict[tuple[str, str], set[str]] = {}
    left_rules: dict[str, list[tuple[str, str, bool]]] = {}
    right_rules: dict[str, list[tuple[str, str, bool]]] = {}
    for r1, r2, out, distinct in COMPOSITION_RULES:
        left_rules.setdefault(r1, []).append((r2, out, distinct))
        right_rules.setdefault(r2, []).append((r1, out, distinct))
    flips: dict[str, list[str]] = {}
    for a, b in FLIP_RULES:
        flips.setdefault(a, []).append(b)

    closed: set[Atom] = set()
    queue: deque[Atom] = deque(atoms)

    def push(atom: Atom) -> None:
        if atom not in closed:
            closed.add(atom)
            queue.append(atom)
            rel, x, y = atom
            by_first.setdefault((rel, x), set()).add(y)
            by_second.setdefault((rel, y), set()).add(x)

    pending = list(queue)
    queue.clear()
    for atom in pending:
        push(atom)

    while queue:
        rel, x, y = queue.popleft()
        for out in flips.get(rel, ()):
            push((out, y, x))
        # atom as the left literal: rel(x, y) joins r2(y, w) -> out(x, w)
        for r2, out, distinct in left_rules.get(rel, ()):
            for w in by_first.get((r2, y), ()):
                if distinct and x == w:
                    continue
                push((out, x, w))
        # atom as the right literal: r1(v, x) joins rel(x, y) -> out(v, y)
        for r1, out, distinct in right_rules.get(rel, ()):
            for v in by_second.get((r1, x), ()):
                if distinct and v == y:
                    continue
                push((out, v, y))
    return closed


def _find_violation(atoms: set[Atom]) -> Contradiction | None:
    # sorted scan keeps the reported witness stable across runs
    for rel, x, y in sorted(atoms):
        if rel == ANCESTOR and (ANCESTOR, y, x) in atoms:
            return Contradiction(
                "ancestor-antisymmetry",
                (RelationAtom(ANCESTOR, x, y), RelationAtom(ANCESTOR, y, x)),
            )
        if rel == SIBLING and x == y:
            return Contradiction("self-sibling", (RelationAtom(SIBLING, x, x),))
        if rel == UN and (INV_CHILD, x, y) in atoms:
            return Contradiction(
                "parent-uncle-exclusion",
                (RelationAtom(UN, x, y), RelationAtom(INV_CHILD, x, y)),
            )
        if rel == SO and (SIBLING, x, y) in atoms:
            return Contradiction(
                "spouse-sibling-exclusion",
                (RelationAtom(SO, x, y), RelationAtom(SIBLING, x, y)),
            )
    return None


def _unwitnessed_triggers(atoms: set[Atom]) -> list[Atom]:
    """Existential trigger atoms with no witness in the current closure."""
    parents: dict[str, set[str]] = {}
    sibs: dict[str, set[str]] = {}
    for rel, x, y in atoms:
        if rel == CHILD:
            parents.setdefault(y, set()).add(x)
        elif rel == SIBLING:
            sibs.setdefault(x, set()).add(y)
    pending = []
    for atom in atoms:
        rel, x, y = atom
        if rel == SIBLING:
            # needs z with child(z, x) and child(z, y)
            if not (parents.get(x, set()) & parents.get(y, set())):
                pending.append(atom)
        elif rel == INV_UN:
            # needs z with sibling(x, z) and child(z, y)
            if not (sibs.get(x, set()) & parents.get(y, set())):
                pending.append(atom)
    return sorted(pending)


def _witnessed(atoms: set[Atom], trigger: Atom) -> bool:
    rel, x, y = trigger
    if rel == SIBLING:
        return any(
            (CHILD, z, y) in atoms
            for (r, z, v) in atoms
            if r == CHILD and v == x
        )
    return any(
        (CHILD, z, y) in atoms
        for (r, v, z) in atoms
        if r == SIBLING and v == x
    )


class KnowledgeBase:
    """Immutable-by-convention saturated atom set over a finite person set.

    ``skolem_budget`` allows that many fresh witnesses per distinct
    existential trigger; ``skolem_cap`` optionally bounds the total. Running
    out of budget is reported via ``budget_exhausted`` and never treated as
    a contradiction: missing witnesses can only hide models, not create
    contradictions.
    """

    def __init__(
        self,
        persons: Iterable[str] = (),
        atoms: Iterable[Atom] = (),
        asserted: Iterable[Atom] = (),
        skolem_budget: int = 2,
        skolem_cap: int | None = None,
        skolem_count: int = 0,
        budget_exhausted: bool = False,
    ) -> None:
        self.persons = frozenset(persons)
        self.atoms = frozenset(atoms)
        self.asserted = frozenset(asserted)
        self.skolem_budget = skolem_budget
        self.skolem_cap = skolem_cap
        self.skolem_count = skolem_count
        self.budget_exhausted = budget_exhausted

    @classmethod
    def empty(cls, skolem_budget: int = 2, skolem_cap: int | None = None) -> "KnowledgeBase":
        return cls(skolem_budget=skolem_budget, skolem_cap=skolem_cap)

    def skolems(self) -> frozenset[str]:
        return frozenset(p for p in self.persons if p.startswith("_s"))

    # -- saturation -----------------------------------------------------------

    def _saturate_atoms(
        self, atoms: set[Atom], persons: set[str], skolem_count: int
    ) -> tuple[set[Atom], set[str], int, bool]:
        closed = _horn_close(atoms)
        exhausted = False
        triggers_seen: set[Atom] = set()
        introduced = skolem_count
        while True:
            pending = _unwitnessed_triggers(closed)
            if not pending:
                break
            progress = False
            new_atoms: set[Atom] = set()
            for trigger in pending:
                if _witnessed(closed | new_atoms, trigger):
                    continue
                triggers_seen.add(trigger)
                allowed = self.skolem_budget * len(triggers_seen)
                if self.skolem_cap is not None:
                    allowed = min(allowed, self.skolem_cap)
                if introduced - skolem_count + 1 > allowed:
                    exhausted = True
                    continue
                witness = f"_s{introduced}"
                introduced += 1
                persons.add(witness)
                rel, x, y = trigger
                if rel == SIBLING:
                    new_atoms.add((CHILD, witness, x))
                    new_atoms.add((CHILD, witness, y))
                else:  # INV_UN
                    new_atoms.add((SIBLING, x, witness))
                    new_atoms.add((CHILD, witness, y))
                progress = True
            if not progress:
                break
            closed = _horn_close(closed | new_atoms)
        return closed, persons, introduced, exhausted

    def saturated(self) -> "KnowledgeBase":
        atoms, persons, count, exhausted = self._saturate_atoms(
            set(self.atoms), set(self.persons), self.skolem_count
        )
        return KnowledgeBase(
            persons=persons,
            atoms=atoms,
            asserted=self.asserted,
            skolem_budget=self.skolem_budget,
            skolem_cap=self.skolem_cap,
            skolem_count=count,
            budget_exhausted=self.budget_exhausted or exhausted,
        )

    # -- assertion ------------------------------------------------------------

    def assert_facts(self, facts: Sequence[RelationAtom]) -> "AssertOutcome":
        """Add facts, saturate, and evaluate the negative constraints.

        Transactional: on contradiction the receiver is returned unchanged.
        """
        new_tuples = {f.as_tuple() for f in facts}
        persons = set(self.persons)
        for f in facts:
            persons.add(f.subject)
            persons.add(f.object)
        atoms, persons, count, exhausted = self._saturate_atoms(
            set(self.atoms) | new_tuples, persons, self.skolem_count
        )
        violation = _find_violation(atoms)
        if violation is not None:
            return AssertOutcome(consistent=False, kb=self, contradiction=violation)
        kb = KnowledgeBase(
            persons=persons,
            atoms=atoms,
            asserted=self.asserted | new_tuples,
            skolem_budget=self.skolem_budget,
            skolem_cap=self.skolem_cap,
            skolem_count=count,
            budget_exhausted=self.budget_exhausted or exhausted,
        )
        return AssertOutcome(consistent=True, kb=kb, contradiction=None)

    def entails(self, atom: RelationAtom) -> bool:
        """Membership in the saturated closure. Unknown persons entail nothing."""
        return atom.as_tuple() in self.atoms

    def relation_atoms(self) -> list[RelationAtom]:
        return [RelationAtom.from_tuple(t) for t in sorted(self.atoms)]

    # -- serialization ----------------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        return {
            "persons": sorted(self.persons),
            "atoms": [
                {
                    "rel": rel,
                    "subject": s,
                    "object": o,
                    "asserted": (rel, s, o) in self.asserted,
                }
                for rel, s, o in sorted(self.atoms)
            ],
            "budget_exhausted": self.budget_exhausted,
        }

    @classmethod
    def from_json(cls, payload: dict[str, Any], **kwargs: Any) -> "KnowledgeBase":
        atoms = {(a["rel"], a["subject"], a["object"]) for a in payload["atoms"]}
        asserted = {
            (a["rel"], a["subject"], a["object"])
            for a in payload["atoms"]
            if a.get("asserted")
        }
        kb = cls(
            persons=payload["persons"],
            atoms=atoms,
            asserted=asserted,
            budget_exhausted=payload.get("budget_exhausted", False),
            **kwargs,
        )
        return kb.saturated()


@dataclass(frozen=True)
class AssertOutcome:
    consistent: bool
    kb: KnowledgeBase
    contradiction: Contradiction | None


def saturate(kb: KnowledgeBase) -> KnowledgeBase:
    return kb.saturated()


def assert_facts(kb: KnowledgeBase, facts: Sequence[RelationAtom]) -> AssertOutcome:
    return kb.assert_facts(facts)


def entails(kb: KnowledgeBase, atom: RelationAtom) -> bool:
    return kb.entails(atom)


class ClutrrWorld:
    """Engine world-model adapter around an immutable knowledge base.

    Since the KB is a value, snapshots are just references.
    """

    def __init__(self, kb: KnowledgeBase | None = None) -> None:
        self.kb = kb if kb is not None else KnowledgeBase.empty()

    def check(self, facts: Sequence[RelationAtom]) -> "Verdict":
        from dualsys.engine import CAUSE_CONTRADICTION, Verdict

        outcome = self.kb.assert_facts(list(facts))
        if outcome.consistent:
            return Verdict.accept()
        return Verdict.reject(CAUSE_CONTRADICTION, str(outcome.contradiction))

    def apply(self, facts: Sequence[RelationAtom]) -> None:
        outcome = self.kb.assert_facts(list(facts))
        if not outcome.consistent:
            raise ValueError(f"apply of contradictory facts: {outcome.contradiction}")
        self.kb = outcome.kb

    def snapshot(self) -> KnowledgeBase:
        return self.kb

    def restore(self, handle: KnowledgeBase) -> None:
        self.kb = handle
