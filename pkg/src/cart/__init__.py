"""Collaborative real-time caption correction toolkit."""

from cart.collab import (
    AttributedDoc,
    Delete,
    EditOp,
    Insert,
    MalformedOp,
    Retain,
    RevisionMismatch,
    SYSTEM_AUTHOR,
    compose,
    inject_word,
    transform,
    transform_position,
)
from cart.formatter import (
    CaptionBlock,
    Paragraph,
    TimedWord,
    format_captions,
    format_transcript,
    split_caption_lines,
)
from cart.metrics import (
    Alignment,
    EmptyReference,
    MetricsDelta,
    WerReport,
    capitalization_errors,
    punctuation_errors,
    reduction_report,
    wer,
    word_align,
)
from cart.normalizer import NormalizationResult, normalize, normalize_verbose
from cart.scenario import RoleAssignment, ScenarioKind, assign_roles
from cart.session import Session, SessionConfig, load_transcript, replay_oplog
from cart.sim import (
    AgentProfile,
    DEFAULT_PROFILE,
    ExperimentResult,
    load_model_table,
    run_experiment,
    seed_errors,
    select_transcripts,
    synthesize_reference,
)

__version__ = "0.1.0"

__all__ = [
    "AgentProfile",
    "Alignment",
    "AttributedDoc",
    "CaptionBlock",
    "DEFAULT_PROFILE",
    "Delete",
    "EditOp",
    "EmptyReference",
    "ExperimentResult",
    "Insert",
    "MalformedOp",
    "MetricsDelta",
    "NormalizationResult",
    "Paragraph",
    "Retain",
    "RevisionMismatch",
    "RoleAssignment",
    "SYSTEM_AUTHOR",
    "ScenarioKind",
    "Session",
    "SessionConfig",
    "TimedWord",
    "WerReport",
    "assign_roles",
    "capitalization_errors",
    "compose",
    "format_captions",
    "format_transcript",
    "inject_word",
    "load_model_table",
    "load_transcript",
    "normalize",
    "normalize_verbose",
    "punctuation_errors",
    "reduction_report",
    "replay_oplog",
    "run_experiment",
    "seed_errors",
    "select_transcripts",
    "split_caption_lines",
    "synthesize_reference",
    "transform",
    "transform_position",
    "wer",
    "word_align",
]
