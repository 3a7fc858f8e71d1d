"""Template semantic parser for story statements and questions.

Grammar is deliberately exact: subject is a single capitalized token, the
verb phrase must appear in the verb table, and the argument is a single
lowercase noun after stripping "the" and a trailing "there". Anything else
is a parse failure.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Any, Sequence

from dualsys.engine import ParseFailure

# Surface verb phrase -> command head. Longer phrases listed first so that
# "went back to" wins over "went to".
VERB_TABLE: dict[str, str] = {
    "journeyed to": "go",
    "went back to": "go",
    "travelled to": "go",
    "moved to": "go",
    "went to": "go",
    "picked up": "pickup",
    "grabbed": "pickup",
    "got": "pickup",
    "took": "pickup",
    "put down": "drop",
    "dropped": "drop",
    "left": "drop",
}

_PHRASES = sorted(VERB_TABLE, key=len, reverse=True)
PHRASES_BY_OP: dict[str, tuple[str, ...]] = {
    op: tuple(p for p in VERB_TABLE if VERB_TABLE[p] == op)
    for op in ("go", "pickup", "drop")
}

_QUESTION_RE = re.compile(r"^Where is the ([a-z]+)\s*\?$")


@dataclass(frozen=True)
class BabiAction:
    """go(person, location) | pickup(person, object) | drop(person, object)."""

    op: str
    person: str
    target: str

    def to_json(self) -> dict[str, Any]:
        return {"op": self.op, "person": self.person, "target": self.target}

    def __str__(self) -> str:
        return f"{self.op}({self.person}, {self.target})"


@dataclass(frozen=True)
class ObjLocQuery:
    obj: str

    def __str__(self) -> str:
        return f"queryObjLoc({self.obj})"


def is_question(text: str) -> bool:
    return "?" in text


def parse_statement(text: str) -> BabiAction:
    """Parse one statement sentence into an action.

    Raises :class:`ParseFailure` when the sentence does not match the
    template grammar.
    """
    body = text.strip().rstrip(".").strip()
    tokens = body.split()
    if len(tokens) < 3:
        raise ParseFailure(f"too short: {text!r}")
    subject = tokens[0]
    if not (subject[0].isupper() and subject.isalpha()):
        raise ParseFailure(f"no capitalized subject: {text!r}")
    rest = " ".join(tokens[1:])
    for phrase in _PHRASES:
        if rest == phrase or rest.startswith(phrase + " "):
            arg_tokens = rest[len(phrase):].split()
            if arg_tokens and arg_tokens[-1] == "there":
                arg_tokens = arg_tokens[:-1]
            if arg_tokens and arg_tokens[0] == "the":
                arg_tokens = arg_tokens[1:]
            if len(arg_tokens) != 1 or not arg_tokens[0].islower():
                raise ParseFailure(f"no single noun argument: {text!r}")
            return BabiAction(VERB_TABLE[phrase], subject, arg_tokens[0])
    raise ParseFailure(f"no verb phrase matched: {text!r}")


def parse_question(text: str) -> ObjLocQuery:
    """Parse "Where is the X?" into a location query."""
    m = _QUESTION_RE.match(text.strip())
    if not m:
        raise ParseFailure(f"unsupported question form: {text!r}")
    return ObjLocQuery(m.group(1))


def render_statement(
    action: BabiAction,
    phrase: str | None = None,
    there: bool = False,
    rng: random.Random | None = None,
) -> str:
    """Render an action back to a sentence the parser accepts.

    When ``phrase`` is omitted one is drawn from the verb table (via ``rng``
    if given). "there" is only valid on pickup/drop sentences.
    """
    options = PHRASES_BY_OP[action.op]
    if phrase is None:
        phrase = (rng or random).choice(options)
    elif VERB_TABLE.get(phrase) != action.op:
        raise ValueError(f"phrase {phrase!r} does not render {action.op}")
    suffix = " there" if there and action.op != "go" else ""
    return f"{action.person} {phrase} the {action.target}{suffix}."


def render_question(obj: str) -> str:
    return f"Where is the {obj}?"


class BabiExtractor:
    """Engine adapter: one statement sentence -> one action fact."""

    def extract(self, text: str, context: Sequence[str]) -> list[BabiAction]:
        return [parse_statement(text)]
