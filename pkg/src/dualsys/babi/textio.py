"""Reader/writer for the numbered story text format.

Statements are ``"N <sentence>"``. Question lines carry a tab-separated
answer and space-separated supporting line numbers:
``"N Where is the milk?\\tkitchen\\t2 5"``. A story boundary is a line whose
number resets to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union


@dataclass
class Statement:
    text: str


@dataclass
class Question:
    text: str
    answer: str
    supports: list[int] = field(default_factory=list)


Item = Union[Statement, Question]


@dataclass
class Story:
    items: list[Item] = field(default_factory=list)

    def statements(self) -> list[str]:
        return [i.text for i in self.items if isinstance(i, Statement)]

    def questions(self) -> list[Question]:
        return [i for i in self.items if isinstance(i, Question)]


class FormatError(ValueError):
    """Input does not follow the numbered story format."""


def parse_stories(lines: Iterable[str]) -> list[Story]:
    stories: list[Story] = []
    current: Story | None = None
    for raw in lines:
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        head, _, rest = line.partition(" ")
        try:
            number = int(head)
        except ValueError as exc:
            raise FormatError(f"line does not start with a number: {line!r}") from exc
        if number == 1 or current is None:
            current = Story()
            stories.append(current)
        if "\t" in rest:
            parts = rest.split("\t")
            if len(parts) < 2:
                raise FormatError(f"malformed question line: {line!r}")
            text = parts[0].strip()
            answer = parts[1].strip()
            supports = [int(t) for t in parts[2].split()] if len(parts) > 2 and parts[2].strip() else []
            current.items.append(Question(text, answer, supports))
        else:
            current.items.append(Statement(rest.strip()))
    return stories


def read_stories(path: str) -> list[Story]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_stories(fh)


def format_stories(stories: Iterable[Story]) -> str:
    out: list[str] = []
    for story in stories:
        for number, item in enumerate(story.items, start=1):
            if isinstance(item, Question):
                supports = " ".join(str(s) for s in item.supports)
                out.append(f"{number} {item.text}\t{item.answer}\t{supports}")
            else:
                out.append(f"{number} {item.text}")
    return "\n".join(out) + ("\n" if out else "")


def write_stories(stories: Iterable[Story], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_stories(stories))
