from .text import TextTokenizer
from .vocabulary import Vocabulary, SPECIAL_TOKENS
from .messages import (
    MotionMessage, Part, CaptionPart, AudioPart, MotionPart, DurationPart,
    HeadcountPart, GenrePart, PastMotionPart, FutureMotionPart,
    TASKS, TaskSpec, MessageError, encode_message, encode_prefix, parse_message,
)
from .grammar import MessageGrammar, GrammarError, ParserState
from .sampling import build_task_sample, RawParts

__all__ = [
    "TextTokenizer", "Vocabulary", "SPECIAL_TOKENS",
    "MotionMessage", "Part", "CaptionPart", "AudioPart", "MotionPart",
    "DurationPart", "HeadcountPart", "GenrePart", "PastMotionPart",
    "FutureMotionPart", "TASKS", "TaskSpec", "MessageError",
    "encode_message", "encode_prefix", "parse_message",
    "MessageGrammar", "GrammarError", "ParserState",
    "build_task_sample", "RawParts",
]
