from dualsys.clutrr.kb import (
    AssertOutcome,
    ClutrrWorld,
    Contradiction,
    KnowledgeBase,
    RelationAtom,
    assert_facts,
    entails,
    saturate,
)
from dualsys.clutrr.oracle import model_find_oracle
from dualsys.clutrr.parser import (
    Clause,
    ClutrrExtractor,
    normalize,
    parse_sentence,
    render_clause,
)

__all__ = [
    "AssertOutcome",
    "Clause",
    "ClutrrWorld",
    "ClutrrExtractor",
    "Contradiction",
    "KnowledgeBase",
    "RelationAtom",
    "assert_facts",
    "entails",
    "model_find_oracle",
    "normalize",
    "parse_sentence",
    "render_clause",
    "saturate",
]
