"""Minimal story world: people, objects and locations with partial knowledge.

The model tracks only what the story has said so far. Unknowns are
unconstrained: a fact about an unmentioned location never blocks an action.
Constraints enforced on actions:

- a person or object can only be in one place at a time;
- an object can only be possessed by a single person at a time;
- a person cannot go to a room they are already in;
- a person cannot pick up an object whose stated location differs from
  theirs, or one held by someone else;
- a person can only drop an object they hold.

Entity kinds (person/object/location) are inferred from the argument
position of the first mention; a re-mention with a conflicting kind is a
contradiction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from dualsys.engine import CAUSE_CONTRADICTION, CAUSE_PRECONDITION, Verdict
from dualsys.babi.parser import BabiAction

PERSON = "person"
OBJECT = "object"
LOCATION = "location"


class UnknownEntity(KeyError):
    """Query about a name the story never mentioned."""


@dataclass
class PersonState:
    location: str | None = None
    inventory: set[str] = field(default_factory=set)


@dataclass
class ObjectState:
    holder: str | None = None
    location: str | None = None


class BabiWorld:
    """World model over lists of :class:`BabiAction` facts."""

    def __init__(self) -> None:
        self.kinds: dict[str, str] = {}
        self.persons: dict[str, PersonState] = {}
        self.objects: dict[str, ObjectState] = {}

    # -- registry -----------------------------------------------------------

    def _kind_ok(self, name: str, kind: str) -> bool:
        return self.kinds.get(name, kind) == kind

    def _register(self, name: str, kind: str) -> None:
        self.kinds[name] = kind
        if kind == PERSON and name not in self.persons:
            self.persons[name] = PersonState()
        elif kind == OBJECT and name not in self.objects:
            self.objects[name] = ObjectState()

    # -- checking and application -------------------------------------------

    def _check_action(self, action: BabiAction) -> Verdict:
        p, t = action.person, action.target
        target_kind = LOCATION if action.op == "go" else OBJECT
        for name, kind in ((p, PERSON), (t, target_kind)):
            if not self._kind_ok(name, kind):
                return Verdict.reject(
                    CAUSE_CONTRADICTION,
                    f"{name} is a {self.kinds[name]}, not a {kind}",
                )
        person = self.persons.get(p, PersonState())
        if action.op == "go":
            if person.location == t:
                return Verdict.reject(
                    CAUSE_PRECONDITION, f"{p} is already in the {t}"
                )
            return Verdict.accept()
        obj = self.objects.get(t, ObjectState())
        if action.op == "pickup":
            if obj.holder is not None and obj.holder != p:
                return Verdict.reject(
                    CAUSE_PRECONDITION, f"the {t} is held by {obj.holder}"
                )
            if (
                obj.location is not None
                and person.location is not None
                and obj.location != person.location
            ):
                return Verdict.reject(
                    CAUSE_PRECONDITION,
                    f"the {t} is in the {obj.location}, not with {p}",
                )
            return Verdict.accept()
        if action.op == "drop":
            if obj.holder != p:
                return Verdict.reject(
                    CAUSE_PRECONDITION, f"{p} does not hold the {t}"
                )
            return Verdict.accept()
        return Verdict.reject(CAUSE_PRECONDITION, f"unknown op {action.op!r}")

    def _apply_action(self, action: BabiAction) -> None:
        p, t = action.person, action.target
        self._register(p, PERSON)
        if action.op == "go":
            self._register(t, LOCATION)
            self.persons[p].location = t
        elif action.op == "pickup":
            self._register(t, OBJECT)
            obj = self.objects[t]
            obj.holder = p
            obj.location = None
            self.persons[p].inventory.add(t)
        elif action.op == "drop":
            self._register(t, OBJECT)
            obj = self.objects[t]
            obj.holder = None
            obj.location = self.persons[p].location
            self.persons[p].inventory.discard(t)

    def check_and_apply(self, action: BabiAction) -> Verdict:
        """Check one action against the current state; apply it iff it passes."""
        verdict = self._check_action(action)
        if verdict.ok:
            self._apply_action(action)
        return verdict

    # -- WorldModel protocol --------------------------------------------------

    def check(self, facts: list[BabiAction]) -> Verdict:
        """Pure check of a fact sequence: state is restored afterwards."""
        handle = self.snapshot()
        try:
            for action in facts:
                verdict = self.check_and_apply(action)
                if not verdict.ok:
                    return verdict
            return Verdict.accept()
        finally:
            self.restore(handle)

    def apply(self, facts: list[BabiAction]) -> None:
        for action in facts:
            verdict = self.check_and_apply(action)
            if not verdict.ok:
                raise ValueError(f"apply of rejected fact: {verdict.detail}")

    def snapshot(self) -> Any:
        return (
            dict(self.kinds),
            {n: PersonState(s.location, set(s.inventory)) for n, s in self.persons.items()},
            {n: ObjectState(s.holder, s.location) for n, s in self.objects.items()},
        )

    def restore(self, handle: Any) -> None:
        try:
            kinds, persons, objects = handle
        except (TypeError, ValueError) as exc:
            raise ValueError("invalid snapshot handle") from exc
        self.kinds = dict(kinds)
        self.persons = {n: PersonState(s.location, set(s.inventory)) for n, s in persons.items()}
        self.objects = {n: ObjectState(s.holder, s.location) for n, s in objects.items()}

    # -- queries --------------------------------------------------------------

    def query_obj_loc(self, name: str) -> str | None:
        """Effective location of an object, or None when unknown.

        An object travels with its holder; otherwise its last stated location
        applies.
        """
        if name not in self.kinds:
            raise UnknownEntity(name)
        obj = self.objects.get(name)
        if obj is None:
            raise UnknownEntity(name)
        if obj.holder is not None:
            holder_loc = self.persons[obj.holder].location
            if holder_loc is not None:
                return holder_loc
        return obj.location

    def to_json(self) -> dict[str, Any]:
        return {
            "kinds": dict(sorted(self.kinds.items())),
            "persons": {
                n: {"location": s.location, "inventory": sorted(s.inventory)}
                for n, s in sorted(self.persons.items())
            },
            "objects": {
                n: {"holder": s.holder, "location": s.location}
                for n, s in sorted(self.objects.items())
            },
        }

    def serialize(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)
