"""Closed-loop CoP guidance: board sensing, target guidance with haptic /
visual / audio feedback, a simulated participant for hardware-free runs, and
completion-time statistics."""

__version__ = "0.1.0"

from .board import BoardGeometry, CalibrationTable, CoPSample, compute_cop, parse_frame
from .feedback import EncoderConfig, bearing_to_clock, encode_haptic, encode_visual
from .guidance import GuidanceSession, SessionConfig, TrialRecord, make_schedule, make_targets
from .participant import DEFAULT_MODEL, ParticipantModel, run_cohort, run_session
from .stats import StatsReport, bonferroni, compare_all, paired_t

__all__ = [
    "BoardGeometry",
    "CalibrationTable",
    "CoPSample",
    "DEFAULT_MODEL",
    "EncoderConfig",
    "GuidanceSession",
    "ParticipantModel",
    "SessionConfig",
    "StatsReport",
    "TrialRecord",
    "bearing_to_clock",
    "bonferroni",
    "compare_all",
    "compute_cop",
    "encode_haptic",
    "encode_visual",
    "make_schedule",
    "make_targets",
    "paired_t",
    "parse_frame",
    "run_cohort",
    "run_session",
    "__version__",
]
