"""Keystroke-dynamics authentication with risk-proportionate MFA.

Login attempts carry raw key-event telemetry. The engine reconstructs the
typed credentials, extracts a timing/behavior feature vector, and compares
it against the user's clustered history: attempts that fit an established
behavior mode are granted, mild deviations answer a one-time password, and
strong deviations require out-of-band approval.
"""

from .anomaly import (
    OutlierDegree,
    RiskAssessment,
    Thresholds,
    assess,
    compute_thresholds,
    contextualize,
    global_check,
    local_check,
)
from .clustering import (
    ClusterModel,
    ElbowReport,
    choose_k_elbow,
    euclidean,
    kmeans,
    nearest_centroid,
    wcss,
)
from .config import EngineConfig
from .engine import AttemptRecord, AttemptResult, AuthEngine, ChallengeResult
from .mfa import (
    Challenge,
    ChallengeKind,
    ChallengeRegistry,
    ChallengeState,
    Decision,
    OutboxNotifier,
    approve_oob,
    decide,
    issue_oob,
    issue_otp,
    verify_otp,
)
from .replay import (
    AttemptView,
    HttpTransport,
    LibraryTransport,
    MetricsReport,
    run_scenario,
)
from .session import (
    FeatureVector,
    KeyAction,
    KeyEvent,
    LoginSession,
    NormalizationRanges,
    SessionContext,
    extract_features,
    normalize,
    parse_session,
    reconstruct_text,
    session_from_dict,
    update_ranges,
)
from .simulate import ShiftStyle, TypistModel, simulate_session, simulate_training, type_text
from .store import ProfileStore, UserProfile, load, save

__version__ = "0.1.0"

__all__ = [
    "AttemptRecord",
    "AttemptResult",
    "AttemptView",
    "AuthEngine",
    "Challenge",
    "ChallengeKind",
    "ChallengeRegistry",
    "ChallengeResult",
    "ChallengeState",
    "ClusterModel",
    "Decision",
    "ElbowReport",
    "EngineConfig",
    "FeatureVector",
    "HttpTransport",
    "KeyAction",
    "KeyEvent",
    "LibraryTransport",
    "LoginSession",
    "MetricsReport",
    "NormalizationRanges",
    "OutboxNotifier",
    "OutlierDegree",
    "ProfileStore",
    "RiskAssessment",
    "SessionContext",
    "ShiftStyle",
    "Thresholds",
    "TypistModel",
    "UserProfile",
    "approve_oob",
    "assess",
    "choose_k_elbow",
    "compute_thresholds",
    "contextualize",
    "decide",
    "euclidean",
    "extract_features",
    "global_check",
    "issue_oob",
    "issue_otp",
    "kmeans",
    "load",
    "local_check",
    "nearest_centroid",
    "normalize",
    "parse_session",
    "reconstruct_text",
    "run_scenario",
    "save",
    "session_from_dict",
    "simulate_session",
    "simulate_training",
    "type_text",
    "update_ranges",
    "verify_otp",
    "wcss",
]
