"""Gridworld executor, pass-through consistency check and budgeted filtering.

The executor is a pure function of (state, actions). Failures never raise:
a step that would leave the grid halts with status ``out-of-bounds``, and
pushing or pulling an object into an occupied cell halts with ``blocked``,
so search code can score failed candidates.

The consistency check is deliberately weak: a candidate passes iff execution
stays in bounds and the agent's path visits the target cell at some point.
Push/pull commands move the target object away from its starting cell, so
requiring the *final* agent cell to equal the target would over-reject.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Protocol, Sequence

HEADINGS = ("N", "E", "S", "W")
_DELTA = {"N": (-1, 0), "E": (0, 1), "S": (1, 0), "W": (0, -1)}
_LEFT = {"N": "W", "W": "S", "S": "E", "E": "N"}
_RIGHT = {v: k for k, v in _LEFT.items()}

STATUS_OK = "ok"
STATUS_OOB = "out-of-bounds"
STATUS_BLOCKED = "blocked"

HEAVY_SIZES = (3, 4)


class LowAction(str, Enum):
    WALK = "WALK"
    TURN_LEFT = "TURN_LEFT"
    TURN_RIGHT = "TURN_RIGHT"
    PUSH = "PUSH"
    PULL = "PULL"
    STAY = "STAY"


class Unreachable(ValueError):
    """No walk/turn sequence reaches the target."""


class ProposerFailure(RuntimeError):
    """An action proposal source cannot produce a candidate."""


@dataclass(frozen=True)
class SceneObject:
    id: str
    shape: str
    color: str
    size: int
    row: int
    col: int


@dataclass
class GridWorld:
    """Agent pose plus objects on a bounded square grid."""

    size: int = 6
    agent_row: int = 0
    agent_col: int = 0
    heading: str = "E"
    objects: list[SceneObject] = field(default_factory=list)

    def validate(self) -> None:
        if self.size < 1:
            raise ValueError("grid size must be positive")
        if not self._in_bounds(self.agent_row, self.agent_col):
            raise ValueError("agent out of bounds")
        if self.heading not in HEADINGS:
            raise ValueError(f"bad heading {self.heading!r}")
        cells = set()
        for obj in self.objects:
            if not self._in_bounds(obj.row, obj.col):
                raise ValueError(f"object {obj.id} out of bounds")
            if obj.size not in (1, 2, 3, 4):
                raise ValueError(f"object {obj.id} has bad size {obj.size}")
            if (obj.row, obj.col) in cells:
                raise ValueError(f"two objects share cell {(obj.row, obj.col)}")
            cells.add((obj.row, obj.col))

    def _in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.size and 0 <= col < self.size

    def object_at(self, row: int, col: int) -> SceneObject | None:
        for obj in self.objects:
            if obj.row == row and obj.col == col:
                return obj
        return None

    def copy(self) -> "GridWorld":
        return GridWorld(
            self.size, self.agent_row, self.agent_col, self.heading, list(self.objects)
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "size": self.size,
            "agent": {"row": self.agent_row, "col": self.agent_col, "heading": self.heading},
            "objects": [
                {
                    "id": o.id,
                    "shape": o.shape,
                    "color": o.color,
                    "size": o.size,
                    "row": o.row,
                    "col": o.col,
                }
                for o in self.objects
            ],
        }


@dataclass
class ExecutionResult:
    final_state: GridWorld
    visited: list[tuple[int, int]]
    status: str


def execute(state: GridWorld, actions: Sequence[LowAction]) -> ExecutionResult:
    """Deterministically run an action sequence from the given state.

    Heavy objects (size 3 or 4) advance one cell per two consecutive
    push/pull actions. A push or pull with no object in the faced cell is a
    no-op.
    """
    world = state.copy()
    visited = [(world.agent_row, world.agent_col)]
    push_charge = 0
    pull_charge = 0

    def move_agent(row: int, col: int) -> None:
        world.agent_row, world.agent_col = row, col
        visited.append((row, col))

    for action in actions:
        if action is not LowAction.PUSH:
            push_charge = 0
        if action is not LowAction.PULL:
            pull_charge = 0
        if action is LowAction.STAY:
            continue
        if action is LowAction.TURN_LEFT:
            world.heading = _LEFT[world.heading]
            continue
        if action is LowAction.TURN_RIGHT:
            world.heading = _RIGHT[world.heading]
            continue
        dr, dc = _DELTA[world.heading]
        if action is LowAction.WALK:
            nr, nc = world.agent_row + dr, world.agent_col + dc
            if not world._in_bounds(nr, nc):
                return ExecutionResult(world, visited, STATUS_OOB)
            move_agent(nr, nc)
            continue
        # push or pull
        fr, fc = world.agent_row + dr, world.agent_col + dc
        obj = world.object_at(fr, fc) if world._in_bounds(fr, fc) else None
        if obj is None:
            continue
        if action is LowAction.PUSH:
            if obj.size in HEAVY_SIZES:
                push_charge += 1
                if push_charge < 2:
                    continue
                push_charge = 0
            obj_dest = (fr + dr, fc + dc)
            if not world._in_bounds(*obj_dest):
                return ExecutionResult(world, visited, STATUS_OOB)
            if world.object_at(*obj_dest) is not None:
                return ExecutionResult(world, visited, STATUS_BLOCKED)
            world.objects[world.objects.index(obj)] = replace(
                obj, row=obj_dest[0], col=obj_dest[1]
            )
            move_agent(fr, fc)
        else:  # PULL: agent and object both step backward
            if obj.size in HEAVY_SIZES:
                pull_charge += 1
                if pull_charge < 2:
                    continue
                pull_charge = 0
            agent_dest = (world.agent_row - dr, world.agent_col - dc)
            if not world._in_bounds(*agent_dest):
                return ExecutionResult(world, visited, STATUS_OOB)
            obj_dest = (world.agent_row, world.agent_col)
            if world.object_at(*obj_dest) is not None:
                return ExecutionResult(world, visited, STATUS_BLOCKED)
            world.objects[world.objects.index(obj)] = replace(
                obj, row=obj_dest[0], col=obj_dest[1]
            )
            move_agent(*agent_dest)
    return ExecutionResult(world, visited, STATUS_OK)


def consistent(state: GridWorld, actions: Sequence[LowAction], target: tuple[int, int]) -> bool:
    """Pass-through check: execution stays in bounds and the agent's path
    visits the target cell (the start cell counts)."""
    result = execute(state, actions)
    return result.status == STATUS_OK and tuple(target) in result.visited


def oracle_plan(state: GridWorld, target: tuple[int, int]) -> list[LowAction]:
    """Shortest walk/turn sequence from the agent pose to the target cell.

    Breadth-first over (row, col, heading) with fixed neighbor order, so the
    plan is deterministic. Raises :class:`Unreachable` for targets off the
    grid.
    """
    tr, tc = target
    if not state._in_bounds(tr, tc):
        raise Unreachable(f"target {target} out of bounds")
    start = (state.agent_row, state.agent_col, state.heading)
    if (start[0], start[1]) == (tr, tc):
        return []
    seen = {start}
    queue: list[tuple[tuple[int, int, str], list[LowAction]]] = [(start, [])]
    while queue:
        (row, col, heading), plan = queue.pop(0)
        dr, dc = _DELTA[heading]
        steps = (
            (LowAction.WALK, (row + dr, col + dc, heading)),
            (LowAction.TURN_LEFT, (row, col, _LEFT[heading])),
            (LowAction.TURN_RIGHT, (row, col, _RIGHT[heading])),
        )
        for action, nxt in steps:
            nr, nc, _ = nxt
            if not state._in_bounds(nr, nc) or nxt in seen:
                continue
            if (nr, nc) == (tr, tc):
                return plan + [action]
            seen.add(nxt)
            queue.append((nxt, plan + [action]))
    raise Unreachable(f"no plan to {target}")


# -- candidate filtering ------------------------------------------------------


class ActionProposalSource(Protocol):
    """Whole-sequence proposer: a deterministic greedy candidate plus a
    stream of samples."""

    def greedy(self, state: GridWorld) -> list[LowAction]: ...

    def sample(self, state: GridWorld) -> list[LowAction]: ...


@dataclass
class FilterOutcome:
    actions: list[LowAction]
    consistent: bool
    evaluations: int
    fallback: bool


def filter_search(
    proposer: ActionProposalSource,
    state: GridWorld,
    target: tuple[int, int],
    budget: int = 50,
    greedy_first: bool = True,
) -> FilterOutcome:
    """Return the first proposer candidate that passes the consistency check.

    The greedy candidate is evaluated first (when ``greedy_first``), matching
    a plain greedy decoder when it already passes. If all ``budget``
    candidates fail, the first candidate is returned as an unfiltered
    fallback.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    first: list[LowAction] | None = None
    for evaluation in range(1, budget + 1):
        if evaluation == 1 and greedy_first:
            candidate = proposer.greedy(state)
        else:
            candidate = proposer.sample(state)
        if first is None:
            first = candidate
        if consistent(state, candidate, target):
            return FilterOutcome(candidate, True, evaluation, fallback=False)
    assert first is not None
    return FilterOutcome(first, False, budget, fallback=True)


class OracleProposer:
    """Greedy and samples both equal the shortest plan to the true target."""

    def __init__(self, target: tuple[int, int]):
        self.target = target

    def greedy(self, state: GridWorld) -> list[LowAction]:
        return oracle_plan(state, self.target)

    def sample(self, state: GridWorld) -> list[LowAction]:
        return oracle_plan(state, self.target)


class NoisyPlanProposer:
    """Oracle plan with each action replaced by a uniformly random one with
    probability epsilon. The greedy candidate is the first corrupted draw."""

    def __init__(self, target: tuple[int, int], epsilon: float, seed: int):
        self.target = target
        self.epsilon = epsilon
        self.rng = random.Random(seed)
        self._greedy: list[LowAction] | None = None

    def _corrupt(self, plan: list[LowAction]) -> list[LowAction]:
        actions = list(LowAction)
        return [
            self.rng.choice(actions) if self.rng.random() < self.epsilon else a
            for a in plan
        ]

    def greedy(self, state: GridWorld) -> list[LowAction]:
        if self._greedy is None:
            self._greedy = self._corrupt(oracle_plan(state, self.target))
        return self._greedy

    def sample(self, state: GridWorld) -> list[LowAction]:
        return self._corrupt(oracle_plan(state, self.target))


class ScriptedActionProposer:
    """Plays back a fixed candidate list; the first entry is the greedy one."""

    def __init__(self, candidates: Sequence[Sequence[LowAction]], cycle: bool = False):
        if not candidates:
            raise ProposerFailure("empty candidate script")
        self.candidates = [list(c) for c in candidates]
        self.cycle = cycle
        self._next = 1

    def greedy(self, state: GridWorld) -> list[LowAction]:
        return list(self.candidates[0])

    def sample(self, state: GridWorld) -> list[LowAction]:
        if self._next >= len(self.candidates):
            if not self.cycle:
                raise ProposerFailure("candidate script exhausted")
            self._next = len(self.candidates) - 1
        candidate = self.candidates[self._next]
        self._next += 1
        return list(candidate)


class OracleTargetPredictor:
    """Reads the target straight from the scene annotation."""

    def predict(self, state: GridWorld, annotation: tuple[int, int]) -> tuple[int, int]:
        return tuple(annotation)


class NoisyTargetPredictor:
    """Returns a uniformly random wrong cell with probability ``p``."""

    def __init__(self, p: float, seed: int):
        self.p = p
        self.rng = random.Random(seed)

    def predict(self, state: GridWorld, annotation: tuple[int, int]) -> tuple[int, int]:
        if self.rng.random() >= self.p:
            return tuple(annotation)
        cells = [
            (r, c)
            for r in range(state.size)
            for c in range(state.size)
            if (r, c) != tuple(annotation)
        ]
        return self.rng.choice(cells)


# -- scenes -------------------------------------------------------------------

_SHAPES = ("circle", "square", "cylinder")
_COLORS = ("red", "blue", "green", "yellow")

_GSCAN_DIRECTIONS = {0: "E", 1: "S", 2: "W", 3: "N"}
_GSCAN_TOKENS = {
    "walk": LowAction.WALK,
    "turn left": LowAction.TURN_LEFT,
    "turn right": LowAction.TURN_RIGHT,
    "push": LowAction.PUSH,
    "pull": LowAction.PULL,
    "stay": LowAction.STAY,
}


@dataclass
class Scene:
    state: GridWorld
    target: tuple[int, int]
    gold_actions: list[LowAction]
    candidates: list[list[LowAction]] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        payload = self.state.to_json()
        payload["target"] = {"row": self.target[0], "col": self.target[1]}
        payload["gold_actions"] = [a.value for a in self.gold_actions]
        if self.candidates:
            payload["candidates"] = [[a.value for a in c] for c in self.candidates]
        return payload


def random_scene(rng: random.Random, size: int = 6, n_objects: int = 4) -> Scene:
    """Scene with distinct object cells and a BFS-shortest gold plan to a
    randomly chosen target object."""
    cells = [(r, c) for r in range(size) for c in range(size)]
    object_cells = rng.sample(cells, n_objects)
    objects = [
        SceneObject(
            id=f"o{i}",
            shape=rng.choice(_SHAPES),
            color=rng.choice(_COLORS),
            size=rng.randint(1, 4),
            row=row,
            col=col,
        )
        for i, (row, col) in enumerate(object_cells)
    ]
    state = GridWorld(
        size=size,
        agent_row=rng.randrange(size),
        agent_col=rng.randrange(size),
        heading=rng.choice(HEADINGS),
        objects=objects,
    )
    target_obj = rng.choice(objects)
    target = (target_obj.row, target_obj.col)
    return Scene(state, target, oracle_plan(state, target))


def _parse_action_token(token: str) -> LowAction:
    key = token.strip().lower().replace("_", " ")
    if key in _GSCAN_TOKENS:
        return _GSCAN_TOKENS[key]
    return LowAction(token.strip().upper())


def load_scene(record: dict[str, Any]) -> Scene:
    """Load a scene from the native schema or a gSCAN-style example record.

    The gSCAN-style subset accepted here: ``situation.grid_size``,
    ``situation.agent_position.{row,column}``, ``situation.agent_direction``
    (0=E, 1=S, 2=W, 3=N or a heading letter), ``situation.placed_objects``
    (map of ``{object:{shape,color,size}, position:{row,column}}``),
    ``situation.target_object.position`` and ``target_commands`` using the
    tokens walk / turn left / turn right / push / pull / stay.
    """
    if "situation" in record:
        sit = record["situation"]
        direction = sit.get("agent_direction", "E")
        heading = (
            _GSCAN_DIRECTIONS[int(direction)]
            if str(direction).isdigit()
            else str(direction).upper()
        )
        objects = []
        placed = sit.get("placed_objects", {})
        items = placed.items() if isinstance(placed, dict) else enumerate(placed)
        for key, entry in items:
            objects.append(
                SceneObject(
                    id=str(key),
                    shape=entry["object"]["shape"],
                    color=entry["object"].get("color", "red"),
                    size=int(entry["object"].get("size", 1)),
                    row=int(entry["position"]["row"]),
                    col=int(entry["position"]["column"]),
                )
            )
        state = GridWorld(
            size=int(sit["grid_size"]),
            agent_row=int(sit["agent_position"]["row"]),
            agent_col=int(sit["agent_position"]["column"]),
            heading=heading,
            objects=objects,
        )
        tgt = sit["target_object"]["position"]
        target = (int(tgt["row"]), int(tgt["column"]))
        gold = [_parse_action_token(t) for t in record.get("target_commands", [])]
        state.validate()
        return Scene(state, target, gold)
    state = GridWorld(
        size=int(record["size"]),
        agent_row=int(record["agent"]["row"]),
        agent_col=int(record["agent"]["col"]),
        heading=record["agent"]["heading"],
        objects=[
            SceneObject(
                id=o["id"],
                shape=o["shape"],
                color=o["color"],
                size=int(o["size"]),
                row=int(o["row"]),
                col=int(o["col"]),
            )
            for o in record.get("objects", [])
        ],
    )
    state.validate()
    target = (int(record["target"]["row"]), int(record["target"]["col"]))
    gold = [_parse_action_token(t) for t in record.get("gold_actions", [])]
    candidates = [
        [_parse_action_token(t) for t in entry]
        for entry in record.get("candidates", [])
    ]
    return Scene(state, target, gold, candidates)


def load_scenes(path: str) -> list[Scene]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    records = payload["scenes"] if isinstance(payload, dict) else payload
    return [load_scene(r) for r in records]


def write_scenes(scenes: Iterable[Scene], path: str) -> None:
    payload = {"scenes": [s.to_json() for s in scenes]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
