"""Pattern-based extraction of kinship clauses from story sentences.

Matches a small inventory of surface patterns:

- ``"A is B's T"`` (tolerating the corpus typo ``id`` for ``is``)
- ``"A's T, B"`` and ``"A's T B"``
- ``"A and his/her T B"``; a bare ``his/her T B`` binds the pronoun to the
  nearest preceding name in the same sentence (cross-sentence pronouns are
  left unresolved and the clause is dropped)
- ``"A is married to B"``
- ``"the couple welcomed C"`` (child of the sentence's married pair)

A sentence matching nothing is the valid ``None`` parse, not a failure.
Clauses whose relationship term falls outside the accepted vocabulary are
dropped at normalization and never reach the knowledge base. Tokenization
artifacts of the source corpus ("does n't", "ca n't", "Michael 's") are
tolerated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from dualsys.clutrr.kb import (
    CHILD,
    GRAND,
    IN_LAW,
    INV_IN_LAW,
    SIBLING,
    SO,
    UN,
    RelationAtom,
)

# term -> (relation, flipped). A clause (A, term, B) reads "A is B's term";
# flipped=False yields rel(A, B), flipped=True yields rel(B, A), under the
# left-to-right reading rel(x, y) = "the rel of x is y".
_SYMMETRIC = {SIBLING, SO}

TERM_TABLE: dict[str, tuple[str, bool]] = {
    "spouse": (SO, False),
    "husband": (SO, False),
    "wife": (SO, False),
    "parent": (CHILD, False),
    "father": (CHILD, False),
    "mother": (CHILD, False),
    "child": (CHILD, True),
    "son": (CHILD, True),
    "daughter": (CHILD, True),
    "grandparent": (GRAND, False),
    "grandmother": (GRAND, False),
    "grandfather": (GRAND, False),
    "grandchild": (GRAND, True),
    "granddaughter": (GRAND, True),
    "grandson": (GRAND, True),
    "sibling": (SIBLING, False),
    "sister": (SIBLING, False),
    "brother": (SIBLING, False),
    "uncle": (UN, True),
    "aunt": (UN, True),
    "nephew": (UN, False),
    "niece": (UN, False),
    "mother in law": (INV_IN_LAW, True),
    "father in law": (INV_IN_LAW, True),
    "mother-in-law": (INV_IN_LAW, True),
    "father-in-law": (INV_IN_LAW, True),
    "daughter in law": (IN_LAW, True),
    "son in law": (IN_LAW, True),
    "daughter-in-law": (IN_LAW, True),
    "son-in-law": (IN_LAW, True),
}

# Capitalized tokens that are never person names.
_STOPWORDS = {
    "A", "An", "And", "But", "He", "Her", "His", "I", "If", "It", "Its",
    "None", "Or", "She", "So", "That", "The", "Their", "Then", "There",
    "They", "This", "We", "When", "Which", "Who", "You",
}

_COPULAS = {"is", "id", "was", "are"}
_PRONOUNS = {"his", "her"}
_MAX_MODIFIERS = 2


@dataclass(frozen=True)
class Clause:
    """One extracted relationship: ``person_a is person_b's term``."""

    person_a: str
    term: str
    person_b: str


NaturalParse = list[Clause]


def _strip(token: str) -> str:
    return token.strip(".,;:!?\"'")


def _is_name(token: str) -> bool:
    word = _strip(token)
    return (
        len(word) > 1
        and word[0].isupper()
        and word.isalpha()
        and word not in _STOPWORDS
    )


def _possessive(token: str) -> str | None:
    """Name carried by a possessive token ("Michael's" -> "Michael")."""
    word = _strip(token)
    for mark in ("'s", "’s"):
        if word.endswith(mark):
            owner = word[: -len(mark)]
            if owner and owner[0].isupper() and owner.isalpha() and owner not in _STOPWORDS:
                return owner
    return None


def _lower_word(tokens: list[str], i: int) -> str | None:
    if i >= len(tokens):
        return None
    word = _strip(tokens[i]).lower()
    return word if word.isalpha() or "-" in word else None


def _term_at(tokens: list[str], i: int) -> tuple[str, int] | None:
    """Known term starting at token i ("mother in law" spans three)."""
    for width in (3, 1):
        if i + width <= len(tokens):
            candidate = " ".join(_strip(t) for t in tokens[i : i + width]).lower()
            if candidate in TERM_TABLE:
                return candidate, i + width
    return None


def _scan_term(tokens: list[str], start: int, need_name: bool) -> tuple[str, str | None, int] | None:
    """Find ``[modifiers]* TERM`` from `start`; returns (term, name, next).

    Prefers a known term anywhere within the modifier window; falls back to
    an unknown single word directly at `start` (so clauses like "friend" are
    captured and later dropped rather than mis-scanned). With ``need_name``
    the term must be followed by a capitalized name.
    """
    positions = [start]
    j = start
    for _ in range(_MAX_MODIFIERS):
        word = _lower_word(tokens, j)
        if word is not None and word not in TERM_TABLE:
            j += 1
            positions.append(j)
        else:
            break
    for pos in positions:
        found = _term_at(tokens, pos)
        if found is None:
            continue
        term, after = found
        if need_name:
            if after < len(tokens) and _is_name(tokens[after]):
                return term, _strip(tokens[after]), after + 1
            continue
        return term, None, after
    # unknown-term fallback, anchored to `start` only
    word = _lower_word(tokens, start)
    if word is not None:
        after = start + 1
        if need_name:
            if after < len(tokens) and _is_name(tokens[after]):
                return word, _strip(tokens[after]), after + 1
            return None
        return word, None, after
    return None


def parse_sentence(text: str) -> NaturalParse | None:
    """Extract kinship clauses from one sentence; None when nothing matches."""
    tokens = text.split()
    # join corpus-split possessives: "Michael 's" -> "Michael's"
    merged: list[str] = []
    for tok in tokens:
        if tok in ("'s", "’s") and merged and _is_name(merged[-1]):
            merged[-1] = merged[-1] + "'s"
        else:
            merged.append(tok)
    tokens = merged

    clauses: list[Clause] = []
    spouse_subject: str | None = None
    last_name: str | None = None
    i = 0
    while i < len(tokens):
        token = tokens[i]
        # "A is married to B"
        if (
            _is_name(token)
            and i + 4 < len(tokens)
            and _strip(tokens[i + 1]).lower() in _COPULAS
            and _strip(tokens[i + 2]).lower() == "married"
            and _strip(tokens[i + 3]).lower() == "to"
            and _is_name(tokens[i + 4])
        ):
            a, b = _strip(token), _strip(tokens[i + 4])
            clauses.append(Clause(b, "spouse", a))
            spouse_subject = a
            last_name = b
            i += 5
            continue
        # "the couple welcomed C"
        if (
            _strip(token).lower() == "the"
            and i + 3 < len(tokens)
            and _strip(tokens[i + 1]).lower() == "couple"
            and _strip(tokens[i + 2]).lower() == "welcomed"
            and _is_name(tokens[i + 3])
            and spouse_subject is not None
        ):
            clauses.append(Clause(_strip(tokens[i + 3]), "child", spouse_subject))
            last_name = _strip(tokens[i + 3])
            i += 4
            continue
        # "A is B's T"
        if (
            _is_name(token)
            and i + 2 < len(tokens)
            and _strip(tokens[i + 1]).lower() in _COPULAS
            and _possessive(tokens[i + 2]) is not None
        ):
            owner = _possessive(tokens[i + 2])
            found = _scan_term(tokens, i + 3, need_name=False)
            if found is not None:
                term, _, nxt = found
                clauses.append(Clause(_strip(token), term, owner))
                last_name = owner
                i = nxt
                continue
        # "A's T [,] B"
        owner = _possessive(token)
        if owner is not None:
            found = _scan_term(tokens, i + 1, need_name=True)
            if found is not None:
                term, name, nxt = found
                clauses.append(Clause(name, term, owner))
                last_name = name
                i = nxt
                continue
            last_name = owner
            i += 1
            continue
        # "his/her T B" bound to the nearest preceding name
        if _strip(token).lower() in _PRONOUNS:
            found = _scan_term(tokens, i + 1, need_name=True)
            if found is not None:
                term, name, nxt = found
                if last_name is not None:
                    clauses.append(Clause(name, term, last_name))
                    last_name = name
                i = nxt
                continue
        if _is_name(token):
            last_name = _strip(token)
        i += 1
    return clauses or None


def normalize(parse: NaturalParse) -> list[RelationAtom]:
    """Map clauses to canonical relation atoms; unknown terms are dropped.

    Symmetric relations come out with sorted arguments so equal facts
    compare equal regardless of surface direction.
    """
    atoms: list[RelationAtom] = []
    for clause in parse:
        entry = TERM_TABLE.get(clause.term)
        if entry is None:
            continue
        rel, flipped = entry
        a, b = (clause.person_b, clause.person_a) if flipped else (clause.person_a, clause.person_b)
        if rel in _SYMMETRIC and b < a:
            a, b = b, a
        atom = RelationAtom(rel, a, b)
        if atom not in atoms:
            atoms.append(atom)
    return atoms


def render_clause(clause: Clause) -> str:
    return f"{clause.person_a} is {clause.person_b}'s {clause.term}."


class ClutrrExtractor:
    """Engine adapter: sentence -> relation atoms; a no-match parse yields
    zero facts (accepted, nothing asserted)."""

    def extract(self, text: str, context: Sequence[str]) -> list[RelationAtom]:
        parse = parse_sentence(text)
        if parse is None:
            return []
        return normalize(parse)
