from dualsys.babi.parser import (
    BabiAction,
    BabiExtractor,
    ObjLocQuery,
    is_question,
    parse_question,
    parse_statement,
    render_question,
    render_statement,
)
from dualsys.babi.world import BabiWorld, UnknownEntity

__all__ = [
    "BabiAction",
    "BabiExtractor",
    "BabiWorld",
    "ObjLocQuery",
    "UnknownEntity",
    "is_question",
    "parse_question",
    "parse_statement",
    "render_question",
    "render_statement",
]
