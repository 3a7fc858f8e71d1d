"""Proposal sources: seeded template generators, a ground-truth story
simulator, and a generic HTTP client for an external language model.

Template proposers are deliberately state-blind by default (``fault_rate``
1.0): they sample over the whole vocabulary without regard to the world
state, which is exactly what makes the consistency check do work. With
``fault_rate`` below 1.0 a proposer replays its context through a private
world model and, at that rate, emits only lines the model would accept.

Every emitted sentence is rendered through the domain parser's own surface
templates, so template proposals always parse.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

import requests

from dualsys.babi.parser import (
    BabiAction,
    is_question,
    parse_statement,
    render_question,
    render_statement,
)
from dualsys.babi.textio import Question, Statement, Story
from dualsys.babi.world import BabiWorld
from dualsys.clutrr.kb import ClutrrWorld
from dualsys.clutrr.parser import TERM_TABLE, Clause, render_clause
from dualsys.engine import ProposalSourceFailure

DEFAULT_PERSONS = ("Mary", "John", "Daniel", "Sandra", "Bob", "Max", "Kevin", "Susan")
DEFAULT_OBJECTS = ("apple", "football", "milk", "cup", "pie", "toothbrush")
DEFAULT_LOCATIONS = ("bedroom", "office", "garden", "bathroom", "kitchen", "hallway")

DEFAULT_FAMILY = ("Alma", "Bruce", "Carla", "Dennis", "Elsie", "Frank", "Gail", "Homer")
DEFAULT_TERMS = tuple(t for t in TERM_TABLE if " " not in t and "-" not in t)

FILLER_LINES = (
    "They had a wonderful time.",
    "Everyone enjoyed the evening.",
    "It was a long day.",
    "The weather was lovely.",
)


@dataclass
class BabiProposerConfig:
    persons: tuple[str, ...] = DEFAULT_PERSONS
    objects: tuple[str, ...] = DEFAULT_OBJECTS
    locations: tuple[str, ...] = DEFAULT_LOCATIONS
    # go / pickup / drop
    action_weights: tuple[float, float, float] = (0.5, 0.3, 0.2)
    question_prob: float = 0.2
    fault_rate: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if not (self.persons and self.objects and self.locations):
            raise ValueError("vocabulary must be non-empty")
        if any(w <= 0 for w in self.action_weights):
            raise ValueError("action weights must be positive")
        for p in (self.question_prob, self.fault_rate):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")


class BabiTemplateProposer:
    """Seeded story-line generator over a fixed vocabulary."""

    def __init__(self, config: BabiProposerConfig):
        config.validate()
        self.config = config
        self.rng = random.Random(config.seed)

    def _blind_action(self) -> BabiAction:
        cfg = self.config
        op = self.rng.choices(("go", "pickup", "drop"), weights=cfg.action_weights)[0]
        person = self.rng.choice(cfg.persons)
        target = self.rng.choice(cfg.locations if op == "go" else cfg.objects)
        return BabiAction(op, person, target)

    def _replay(self, context: Sequence[str]) -> BabiWorld:
        world = BabiWorld()
        for line in context:
            if is_question(line):
                continue
            world.apply([parse_statement(line)])
        return world

    def _valid_actions(self, world: BabiWorld) -> list[BabiAction]:
        cfg = self.config
        out = []
        for person in cfg.persons:
            for loc in cfg.locations:
                out.append(BabiAction("go", person, loc))
            for obj in cfg.objects:
                out.append(BabiAction("pickup", person, obj))
                out.append(BabiAction("drop", person, obj))
        return [a for a in out if world.check([a]).ok]

    def _render(self, action: BabiAction) -> str:
        there = action.op != "go" and self.rng.random() < 0.5
        return render_statement(action, there=there, rng=self.rng)

    def next_candidate(self, context: Sequence[str]) -> str:
        cfg = self.config
        state_aware = self.rng.random() >= cfg.fault_rate
        ask = self.rng.random() < cfg.question_prob
        if not state_aware:
            if ask:
                return render_question(self.rng.choice(cfg.objects))
            return self._render(self._blind_action())
        world = self._replay(context)
        if ask:
            answerable = [
                o for o in cfg.objects
                if o in world.objects and world.query_obj_loc(o) is not None
            ]
            if answerable:
                return render_question(self.rng.choice(answerable))
        valid = self._valid_actions(world)
        weights = [cfg.action_weights[("go", "pickup", "drop").index(a.op)] for a in valid]
        return self._render(self.rng.choices(valid, weights=weights)[0])


@dataclass
class ClutrrProposerConfig:
    persons: tuple[str, ...] = DEFAULT_FAMILY
    terms: tuple[str, ...] = DEFAULT_TERMS
    filler_prob: float = 0.15
    fault_rate: float = 1.0
    seed: int = 0
    max_consistent_tries: int = 200

    def validate(self) -> None:
        if len(self.persons) < 2 or not self.terms:
            raise ValueError("need at least two persons and one term")
        unknown = [t for t in self.terms if t not in TERM_TABLE]
        if unknown:
            raise ValueError(f"terms outside the accepted vocabulary: {unknown}")
        for p in (self.filler_prob, self.fault_rate):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")


class ClutrrTemplateProposer:
    """Seeded kinship-sentence generator over a fixed cast of names."""

    def __init__(self, config: ClutrrProposerConfig):
        config.validate()
        self.config = config
        self.rng = random.Random(config.seed)

    def _random_clause(self) -> Clause:
        a, b = self.rng.sample(self.config.persons, 2)
        return Clause(a, self.rng.choice(self.config.terms), b)

    def _render(self, clause: Clause) -> str:
        template = self.rng.randrange(3)
        if template == 0:
            return render_clause(clause)
        if template == 1:
            return f"{clause.person_b}'s {clause.term}, {clause.person_a}, came to visit."
        pronoun = self.rng.choice(("his", "her"))
        return (
            f"{clause.person_b} and {pronoun} {clause.term} "
            f"{clause.person_a} spent the afternoon together."
        )

    def _replay(self, context: Sequence[str]) -> ClutrrWorld:
        from dualsys.clutrr.parser import ClutrrExtractor

        world = ClutrrWorld()
        extractor = ClutrrExtractor()
        for line in context:
            world.apply(extractor.extract(line, ()))
        return world

    def next_candidate(self, context: Sequence[str]) -> str:
        cfg = self.config
        state_aware = self.rng.random() >= cfg.fault_rate
        if self.rng.random() < cfg.filler_prob:
            return self.rng.choice(FILLER_LINES)
        if not state_aware:
            return self._render(self._random_clause())
        from dualsys.clutrr.parser import ClutrrExtractor

        world = self._replay(context)
        extractor = ClutrrExtractor()
        for _ in range(cfg.max_consistent_tries):
            text = self._render(self._random_clause())
            if world.check(extractor.extract(text, context)).ok:
                return text
        return self.rng.choice(FILLER_LINES)


class ScriptedSource:
    """Plays back a fixed list of candidates; used for tests."""

    def __init__(self, lines: Sequence[str]):
        self.lines = list(lines)
        self._next = 0

    def next_candidate(self, context: Sequence[str]) -> str:
        if self._next >= len(self.lines):
            raise ProposalSourceFailure("script exhausted")
        line = self.lines[self._next]
        self._next += 1
        return line


class HttpProposalSource:
    """Fetches candidate batches from an external proposal service.

    Speaks a minimal wire protocol: ``POST endpoint`` with
    ``{"context": [lines], "n": batch_size}``, answered by
    ``{"candidates": [strings]}``. Candidates are buffered per context and
    handed to the engine in server order. Network, decoding and schema
    problems surface as :class:`ProposalSourceFailure`.
    """

    def __init__(self, endpoint: str, batch_size: int = 10, timeout: float = 10.0):
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.endpoint = endpoint
        self.batch_size = batch_size
        self.timeout = timeout
        self._context: tuple[str, ...] | None = None
        self._queue: list[str] = []

    def _fetch(self, context: tuple[str, ...]) -> list[str]:
        try:
            response = requests.post(
                self.endpoint,
                json={"context": list(context), "n": self.batch_size},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ProposalSourceFailure(f"network: {exc}") from exc
        if response.status_code != 200:
            raise ProposalSourceFailure(f"http-status: {response.status_code}")
        try:
            payload = response.json()
        except ValueError as exc:
            raise ProposalSourceFailure(f"decode: {exc}") from exc
        candidates = payload.get("candidates") if isinstance(payload, dict) else None
        if not isinstance(candidates, list) or not all(isinstance(c, str) for c in candidates):
            raise ProposalSourceFailure("schema: expected {'candidates': [str, ...]}")
        if not candidates:
            raise ProposalSourceFailure("empty: server returned no candidates")
        return candidates

    def next_candidate(self, context: Sequence[str]) -> str:
        ctx = tuple(context)
        if self._context != ctx or not self._queue:
            self._queue = self._fetch(ctx)
            self._context = ctx
        return self._queue.pop(0)


# -- ground-truth simulator ----------------------------------------------------


@dataclass
class SimulatorConfig:
    persons: tuple[str, ...] = DEFAULT_PERSONS
    objects: tuple[str, ...] = DEFAULT_OBJECTS
    locations: tuple[str, ...] = DEFAULT_LOCATIONS
    question_prob: float = 0.25
    min_lines: int = 2
    max_lines: int = 10
    seed: int = 0


@dataclass
class _SimState:
    person_loc: dict[str, str] = field(default_factory=dict)
    person_go_line: dict[str, int] = field(default_factory=dict)
    holder: dict[str, str] = field(default_factory=dict)
    obj_loc: dict[str, str] = field(default_factory=dict)
    pickup_line: dict[str, int] = field(default_factory=dict)
    drop_support: dict[str, tuple[int, int]] = field(default_factory=dict)


class GroundTruthSimulator:
    """State-aware story generator with gold question answers.

    Every emitted action is valid in the simulator's own world, so replaying
    a simulated story through :class:`BabiWorld` never produces a rejection,
    and the recorded answers/supporting lines come from the simulator's
    bookkeeping rather than from the world model under test.
    """

    def __init__(self, config: SimulatorConfig | None = None):
        self.config = config or SimulatorConfig()
        self.rng = random.Random(self.config.seed)

    def _valid_actions(self, sim: _SimState) -> list[BabiAction]:
        cfg = self.config
        actions: list[BabiAction] = []
        for p in cfg.persons:
            for loc in cfg.locations:
                if sim.person_loc.get(p) != loc:
                    actions.append(BabiAction("go", p, loc))
            for o in cfg.objects:
                held_by = sim.holder.get(o)
                if held_by is None:
                    known = sim.obj_loc.get(o)
                    if known is None or known == sim.person_loc.get(p):
                        actions.append(BabiAction("pickup", p, o))
                elif held_by == p:
                    actions.append(BabiAction("drop", p, o))
        return actions

    def _answerable(self, sim: _SimState) -> dict[str, tuple[str, list[int]]]:
        gold: dict[str, tuple[str, list[int]]] = {}
        for o in self.config.objects:
            held_by = sim.holder.get(o)
            if held_by is not None:
                loc = sim.person_loc.get(held_by)
                if loc is not None:
                    supports = sorted({sim.pickup_line[o], sim.person_go_line[held_by]})
                    gold[o] = (loc, supports)
            elif o in sim.obj_loc:
                gold[o] = (sim.obj_loc[o], sorted(set(sim.drop_support[o])))
        return gold

    def _apply(self, sim: _SimState, action: BabiAction, line_no: int) -> None:
        if action.op == "go":
            sim.person_loc[action.person] = action.target
            sim.person_go_line[action.person] = line_no
        elif action.op == "pickup":
            sim.holder[action.target] = action.person
            sim.obj_loc.pop(action.target, None)
            sim.pickup_line[action.target] = line_no
        else:
            del sim.holder[action.target]
            loc = sim.person_loc.get(action.person)
            if loc is not None:
                sim.obj_loc[action.target] = loc
                sim.drop_support[action.target] = (line_no, sim.person_go_line[action.person])
            sim.pickup_line.pop(action.target, None)

    def _weighted_choice(self, actions: list[BabiAction]) -> BabiAction:
        weights = {"go": 0.5, "pickup": 0.3, "drop": 0.2}
        return self.rng.choices(actions, weights=[weights[a.op] for a in actions])[0]

    def story(self) -> Story:
        cfg = self.config
        sim = _SimState()
        items: list[Statement | Question] = []
        line_no = 0
        while True:
            gold = self._answerable(sim)
            ask = (
                line_no >= cfg.min_lines
                and gold
                and (self.rng.random() < cfg.question_prob or line_no >= cfg.max_lines)
            )
            if ask:
                obj = self.rng.choice(sorted(gold))
                answer, supports = gold[obj]
                items.append(Question(render_question(obj), answer, supports))
                return Story(items)
            if line_no >= cfg.max_lines:
                # force an answerable object into existence, then ask:
                # prefer moving an existing holder so their cargo gets a
                # known location on the next line
                holders = sorted(set(sim.holder.values()))
                person = self.rng.choice(holders) if holders else self.rng.choice(cfg.persons)
                away = [l for l in cfg.locations if l != sim.person_loc.get(person)]
                forced_actions = [BabiAction("go", person, self.rng.choice(away))]
                if person not in set(sim.holder.values()):
                    pickup = self._forced_pickup(sim, person)
                    if pickup is not None:
                        forced_actions.append(pickup)
                for forced in forced_actions:
                    line_no += 1
                    self._apply(sim, forced, line_no)
                    items.append(Statement(render_statement(forced, rng=self.rng)))
                continue
            action = self._weighted_choice(self._valid_actions(sim))
            line_no += 1
            self._apply(sim, action, line_no)
            items.append(Statement(render_statement(action, rng=self.rng)))

    def _forced_pickup(self, sim: _SimState, person: str) -> BabiAction | None:
        options = [
            o for o in self.config.objects
            if sim.holder.get(o) is None
            and (sim.obj_loc.get(o) is None or sim.obj_loc.get(o) == sim.person_loc.get(person))
        ]
        if not options:
            return None
        return BabiAction("pickup", person, self.rng.choice(options))

    def stories(self, n: int) -> list[Story]:
        return [self.story() for _ in range(n)]
