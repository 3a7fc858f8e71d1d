"""Domain-agnostic guess-and-check generation loop.

A proposal source emits candidate lines, a fact extractor parses each
candidate into domain facts, and a world model accepts or rejects the facts
against its current state. Rejected candidates are resampled up to a budget;
accepted facts are applied before the next line is drawn.

The loop is sequential: candidate checks are pure and could be evaluated
concurrently against a snapshot, but application of an accepted line is
always serialized on the single world-model writer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol, Sequence

CAUSE_PRECONDITION = "precondition-violation"
CAUSE_CONTRADICTION = "logical-contradiction"
CAUSE_PARSE_FAILURE = "parse-failure"
CAUSE_BOUNDS = "bounds-violation"

TERMINATED_QUESTION = "question-emitted"
TERMINATED_MAX_LINES = "max-lines"
TERMINATED_BUDGET = "budget-exhausted"

ON_EXHAUSTED_STOP = "mark-error-and-stop"
ON_EXHAUSTED_CONTINUE = "mark-error-and-continue"


class ParseFailure(Exception):
    """A candidate could not be parsed into domain facts."""


class ProposalSourceFailure(Exception):
    """The proposal source cannot produce a candidate.

    When raised from inside :func:`generate_story`, the partial trace built
    so far is attached as ``partial_trace``.
    """

    def __init__(self, cause: str, partial_trace: "GenerationTrace | None" = None):
        super().__init__(cause)
        self.cause = cause
        self.partial_trace = partial_trace


@dataclass(frozen=True)
class Verdict:
    """Outcome of checking extracted facts against a world model.

    ``cause`` is machine-readable: one of the ``CAUSE_*`` constants.
    ``detail`` is a free-form human explanation.
    """

    ok: bool
    cause: str | None = None
    detail: str | None = None

    @classmethod
    def accept(cls) -> "Verdict":
        return cls(ok=True)

    @classmethod
    def reject(cls, cause: str, detail: str | None = None) -> "Verdict":
        return cls(ok=False, cause=cause, detail=detail)


class ProposalSource(Protocol):
    """Candidate text generator. Must be deterministic given its seed and
    the sequence of contexts it is called with."""

    def next_candidate(self, context: Sequence[str]) -> str: ...


class FactExtractor(Protocol):
    """Pure text-to-facts parser. Raises :class:`ParseFailure` when the text
    cannot be parsed; a successful parse may yield zero facts."""

    def extract(self, text: str, context: Sequence[str]) -> list[Any]: ...


class WorldModel(Protocol):
    """Symbolic state with a pure consistency check.

    ``check`` must not observably mutate state. ``apply`` after a passing
    ``check`` must not raise the same facts as contradictions. Snapshots are
    opaque handles; ``restore`` returns the model to the exact snapshot.
    """

    def check(self, facts: list[Any]) -> Verdict: ...

    def apply(self, facts: list[Any]) -> None: ...

    def snapshot(self) -> Any: ...

    def restore(self, handle: Any) -> None: ...


def _default_stop(text: str) -> bool:
    return "?" in text


@dataclass
class GenerationConfig:
    """Knobs for one story generation run.

    ``stop_predicate`` detects a terminal (question-form) line before fact
    extraction; the default treats any line containing ``?`` as terminal.
    ``seed`` is carried for provenance; randomness lives in the proposal
    source.
    """

    sample_budget: int = 10
    max_lines: int = 12
    seed: int = 0
    on_budget_exhausted: str = ON_EXHAUSTED_CONTINUE
    stop_predicate: Callable[[str], bool] = _default_stop

    def validate(self) -> None:
        if self.sample_budget < 1:
            raise ValueError("sample_budget must be >= 1")
        if self.max_lines < 1:
            raise ValueError("max_lines must be >= 1")
        if self.on_budget_exhausted not in (ON_EXHAUSTED_STOP, ON_EXHAUSTED_CONTINUE):
            raise ValueError(
                f"on_budget_exhausted must be {ON_EXHAUSTED_STOP!r} or "
                f"{ON_EXHAUSTED_CONTINUE!r}"
            )


@dataclass
class RejectedCandidate:
    text: str
    verdict: Verdict

    def to_json(self) -> dict[str, Any]:
        return {"text": self.text, "cause": self.verdict.cause, "detail": self.verdict.detail}


@dataclass
class LineRecord:
    """One line slot of a story.

    For an accepted line, ``attempts == 1 + len(rejected)``. When the sample
    budget was exhausted, ``accepted_text`` is None, ``attempts`` equals the
    budget, and every candidate drawn for the slot appears in ``rejected``.
    """

    accepted_text: str | None
    facts: list[Any]
    attempts: int
    rejected: list[RejectedCandidate] = field(default_factory=list)

    @property
    def error(self) -> bool:
        return self.accepted_text is None

    def to_json(self) -> dict[str, Any]:
        return {
            "accepted_text": self.accepted_text,
            "facts": [_fact_json(f) for f in self.facts],
            "attempts": self.attempts,
            "rejected": [r.to_json() for r in self.rejected],
        }


@dataclass
class GenerationTrace:
    lines: list[LineRecord]
    terminated_by: str

    def to_json(self) -> dict[str, Any]:
        return {
            "lines": [line.to_json() for line in self.lines],
            "terminated_by": self.terminated_by,
        }

    def accepted_lines(self) -> list[str]:
        return [l.accepted_text for l in self.lines if l.accepted_text is not None]


@dataclass(frozen=True)
class StoryStats:
    pct_lines_error_free: float
    pct_stories_error_free: float
    total_rejections: int

    def to_json(self) -> dict[str, Any]:
        return {
            "pct_lines_error_free": self.pct_lines_error_free,
            "pct_stories_error_free": self.pct_stories_error_free,
            "total_rejections": self.total_rejections,
        }


def _fact_json(fact: Any) -> Any:
    if hasattr(fact, "to_json"):
        return fact.to_json()
    return fact


def _check(
    extractor: FactExtractor,
    world: WorldModel,
    context: Sequence[str],
    text: str,
) -> tuple[Verdict, list[Any]]:
    try:
        facts = extractor.extract(text, context)
    except ParseFailure as exc:
        return Verdict.reject(CAUSE_PARSE_FAILURE, str(exc)), []
    return world.check(facts), facts


def check_candidate(
    extractor: FactExtractor,
    world: WorldModel,
    context: Sequence[str],
    text: str,
) -> Verdict:
    """Check one candidate without touching world state.

    Accepts iff extraction succeeds and all extracted facts pass the world
    model's check. An unparseable candidate is rejected with cause
    ``parse-failure`` (fail closed).
    """
    verdict, _ = _check(extractor, world, context, text)
    return verdict


def generate_story(
    source: ProposalSource,
    extractor: FactExtractor,
    world: WorldModel,
    config: GenerationConfig,
) -> GenerationTrace:
    """Run the propose-extract-check-resample loop until the story ends.

    A story ends when the source emits a terminal (question-form) line, when
    ``max_lines`` line slots have been filled, or, under
    ``mark-error-and-stop``, when a slot exhausts the sample budget. Under
    ``mark-error-and-continue`` an exhausted slot is recorded as an error
    (no accepted text) and generation moves on to the next slot, so every
    accepted line is consistent with the state it was accepted in.

    Raises :class:`ProposalSourceFailure` (with the partial trace attached)
    if the source fails mid-story.
    """
    config.validate()
    lines: list[LineRecord] = []
    context: list[str] = []
    terminated_by = TERMINATED_MAX_LINES

    while len(lines) < config.max_lines:
        rejected: list[RejectedCandidate] = []
        accepted = False
        for attempt in range(1, config.sample_budget + 1):
            try:
                text = source.next_candidate(tuple(context))
            except ProposalSourceFailure as exc:
                raise ProposalSourceFailure(
                    exc.cause, GenerationTrace(lines, terminated_by)
                ) from exc
            if config.stop_predicate(text):
                lines.append(LineRecord(text, [], attempt, rejected))
                return GenerationTrace(lines, TERMINATED_QUESTION)
            verdict, facts = _check(extractor, world, context, text)
            if verdict.ok:
                world.apply(facts)
                lines.append(LineRecord(text, facts, attempt, rejected))
                context.append(text)
                accepted = True
                break
            rejected.append(RejectedCandidate(text, verdict))
        if not accepted:
            # Budget exhausted: the slot is an error and contributes no text.
            lines.append(LineRecord(None, [], config.sample_budget, rejected))
            if config.on_budget_exhausted == ON_EXHAUSTED_STOP:
                terminated_by = TERMINATED_BUDGET
                break
    return GenerationTrace(lines, terminated_by)


def compute_stats(traces: Sequence[GenerationTrace]) -> StoryStats:
    """Aggregate error statistics over a batch of traces.

    A line is error-free iff it was accepted on the first attempt; a story
    is error-free iff all its lines are.
    """
    if not traces:
        raise ValueError("compute_stats requires at least one trace")
    total_lines = 0
    clean_lines = 0
    clean_stories = 0
    rejections = 0
    for trace in traces:
        story_clean = True
        for line in trace.lines:
            total_lines += 1
            rejections += len(line.rejected)
            if line.attempts == 1 and not line.error:
                clean_lines += 1
            else:
                story_clean = False
        if story_clean:
            clean_stories += 1
    return StoryStats(
        pct_lines_error_free=clean_lines / total_lines if total_lines else 1.0,
        pct_stories_error_free=clean_stories / len(traces),
        total_rejections=rejections,
    )


def write_traces_jsonl(traces: Sequence[GenerationTrace], path: str) -> None:
    """Write one JSON object per story, with stable key order."""
    with open(path, "w", encoding="utf-8") as fh:
        for trace in traces:
            fh.write(json.dumps(trace.to_json(), sort_keys=True))
            fh.write("\n")
