"""Dual-system generation: sample candidates from a proposal source, extract
facts, check them against a symbolic world model, and resample on rejection.

Three world models ship with the package: a story world of people, objects
and locations (`dualsys.babi`), a kinship knowledge base (`dualsys.clutrr`),
and a gridworld executor for instruction following (`dualsys.gscan`).
"""

__version__ = "0.1.0"

from dualsys.engine import (
    GenerationConfig,
    GenerationTrace,
    LineRecord,
    ParseFailure,
    ProposalSourceFailure,
    StoryStats,
    Verdict,
    check_candidate,
    compute_stats,
    generate_story,
)

__all__ = [
    "GenerationConfig",
    "GenerationTrace",
    "LineRecord",
    "ParseFailure",
    "ProposalSourceFailure",
    "StoryStats",
    "Verdict",
    "check_candidate",
    "compute_stats",
    "generate_story",
    "__version__",
]
