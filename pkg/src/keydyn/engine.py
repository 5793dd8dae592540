"""Login orchestration: credentials, risk assessment, challenges, learning.

The engine owns a profile store, a challenge registry, and an attempt log.
Attempts for one user are serialized with a per-user lock so concurrent
logins cannot interleave learning updates. A granted attempt's raw feature
vector is appended to the profile and persisted before the caller is told
the outcome; challenge-gated attempts park their vector until the challenge
is verified.
"""

from __future__ import annotations

import logging
import random
import threading
import time
import uuid
from dataclasses import dataclass
from typing import Any, Callable

from .anomaly import RiskAssessment, assess
from .clustering import ElbowReport, elbow_scan
from .config import EngineConfig
from .errors import ProfileNotTrainedError
from .mfa import (
    Challenge,
    ChallengeRegistry,
    ChallengeState,
    Decision,
    OutboxNotifier,
    decide,
)
from .session import (
    FeatureVector,
    LoginSession,
    extract_features,
    normalized_point,
    reconstruct_text,
    session_from_dict,
)
from .store import ProfileStore, UserProfile, save

logger = logging.getLogger(__name__)

Clock = Callable[[], float]


def _wall_clock_ms() -> float:
    return time.time() * 1000.0


@dataclass
class AttemptRecord:
    """Audit row for one login attempt."""

    attempt_id: str
    username: str
    received_at: float
    password_match: bool
    session: LoginSession | None = None
    assessment: RiskAssessment | None = None
    decision: Decision | None = None
    challenge_id: str | None = None
    outcome: str = "denied"  # denied | granted | pending_challenge
    resolved_at: float | None = None


@dataclass
class AttemptResult:
    """What the transport layer needs to answer a login attempt."""

    outcome: str  # granted | challenge | denied
    record: AttemptRecord
    reason: str | None = None
    assessment: RiskAssessment | None = None
    challenge: Challenge | None = None


@dataclass
class ChallengeResult:
    """Outcome of an OTP or OOB verification call."""

    granted: bool
    challenge: Challenge
    reason: str | None = None  # invalid-code | failed | expired


class AuthEngine:
    """Single-process authentication engine bound to one profile store."""

    def __init__(
        self,
        store: ProfileStore,
        config: EngineConfig | None = None,
        *,
        store_path: str | None = None,
        outbox_path: str | None = None,
        clock: Clock | None = None,
        rng: random.Random | None = None,
    ) -> None:
        self.store = store
        self.config = config if config is not None else EngineConfig()
        self.store_path = store_path
        self.clock: Clock = clock if clock is not None else _wall_clock_ms
        notifier = OutboxNotifier(outbox_path) if outbox_path else None
        self.challenges = ChallengeRegistry(
            rng=rng if rng is not None else random.Random(self.config.seed),
            notifier=notifier,
            otp_ttl_ms=self.config.otp_ttl_ms,
            otp_attempts=self.config.otp_attempts,
            oob_ttl_ms=self.config.oob_ttl_ms,
        )
        self.attempt_log: list[AttemptRecord] = []
        self._pending: dict[str, tuple[str, FeatureVector, AttemptRecord]] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- internals ---------------------------------------------------------

    def _user_lock(self, username: str) -> threading.Lock:
        with self._locks_guard:
            lock = self._locks.get(username)
            if lock is None:
                lock = threading.Lock()
                self._locks[username] = lock
            return lock

    def _persist(self) -> None:
        if self.store_path:
            save(self.store, self.store_path)

    def _learn(self, username: str, fv: FeatureVector, now: float) -> None:
        """Fold a successful attempt into the profile; never blocks a grant."""
        try:
            self.store.append_success(username, fv, now)
            self._persist()
        except OSError as exc:
            logger.warning(
                "learning skipped for %s: could not persist profile update: %s",
                username,
                exc,
            )

    # -- enrollment --------------------------------------------------------

    def enroll(self, username: str, password: str, session_docs: list[Any]) -> int:
        """Parse and train on the given session documents; returns the count."""
        sessions = [session_from_dict(doc) for doc in session_docs]
        now = self.clock()
        with self._user_lock(username):
            self.store.enroll(
                username,
                password,
                sessions,
                seed=self.config.seed,
                min_history=self.config.min_history,
                now_ms=now,
            )
            self._persist()
        return len(sessions)

    # -- login flow --------------------------------------------------------

    def username_exists(self, username: str) -> bool:
        return self.store.verify_username(username)

    def login_attempt(self, doc: Any) -> AttemptResult:
        """Run the full pipeline over one session document.

        Raises SessionFormatError for malformed documents and
        ProfileNotTrainedError when the profile is below the training
        minimum. Credential failures are returned as a denied result, never
        with any risk detail attached.
        """
        session = session_from_dict(doc)
        received = self.clock()
        username = session.username_claim
        record = AttemptRecord(
            attempt_id=uuid.uuid4().hex,
            username=username,
            received_at=received,
            password_match=False,
            session=session,
        )

        def denied(reason: str) -> AttemptResult:
            record.outcome = "denied"
            record.resolved_at = self.clock()
            self.attempt_log.append(record)
            return AttemptResult(outcome="denied", record=record, reason=reason)

        if not self.store.verify_username(username):
            return denied("bad-credentials")
        with self._user_lock(username):
            profile = self.store.profile(username)
            if not session.username_span.empty:
                if reconstruct_text(session, "username") != username:
                    return denied("bad-credentials")
            typed_password = reconstruct_text(session, "password")
            if not profile.verify_password(typed_password):
                return denied("bad-credentials")
            record.password_match = True

            fv = extract_features(
                session,
                enrolled_geo=profile.enrolled_context.geo,
                timestamp=received,
            )
            if len(profile.raw_history) < self.config.min_history:
                raise ProfileNotTrainedError(
                    f"profile for {username!r} has {len(profile.raw_history)} "
                    f"training vectors, needs {self.config.min_history}"
                )
            dims = profile.dimensions()
            if not set(dims).issubset(fv.dimensions()):
                # Profile trained with pressure but this client sent none.
                dims = tuple(d for d in dims if d in fv.dimensions())
            history = profile.normalized_history(dims)
            attempt_point = normalized_point(fv, profile.ranges, dims)
            assessment = assess(history, attempt_point, profile.seed, self.config)
            record.assessment = assessment
            decision = decide(assessment)
            record.decision = decision
            now = self.clock()

            if decision is Decision.GRANT:
                self._learn(username, fv, now)
                record.outcome = "granted"
                record.resolved_at = now
                self.attempt_log.append(record)
                return AttemptResult(
                    outcome="granted", record=record, assessment=assessment
                )

            if decision is Decision.CHALLENGE_OTP:
                challenge = self.challenges.issue_otp(username, now)
            else:
                challenge = self.challenges.issue_oob(username, now)
            record.challenge_id = challenge.id
            record.outcome = "pending_challenge"
            self._pending[challenge.id] = (username, fv, record)
            self.attempt_log.append(record)
            return AttemptResult(
                outcome="challenge",
                record=record,
                assessment=assessment,
                challenge=challenge,
            )

    # -- challenge resolution ----------------------------------------------

    def _finish_challenge(self, challenge: Challenge) -> ChallengeResult:
        state = challenge.state
        pending = self._pending.get(challenge.id)
        if state is ChallengeState.VERIFIED:
            if pending is not None:
                username, fv, record = self._pending.pop(challenge.id)
                now = self.clock()
                with self._user_lock(username):
                    self._learn(username, fv, now)
                record.outcome = "granted"
                record.resolved_at = now
            return ChallengeResult(granted=True, challenge=challenge)
        if state is ChallengeState.PENDING:
            # Wrong OTP with attempts remaining: challenge stays open.
            return ChallengeResult(granted=False, challenge=challenge, reason="invalid-code")
        reason = "expired" if state is ChallengeState.EXPIRED else "failed"
        if pending is not None:
            _, _, record = self._pending.pop(challenge.id)
            record.outcome = "denied"
            record.resolved_at = self.clock()
        return ChallengeResult(granted=False, challenge=challenge, reason=reason)

    def resolve_otp(self, challenge_id: str, code: str) -> ChallengeResult:
        challenge = self.challenges.verify_otp(challenge_id, code, self.clock())
        return self._finish_challenge(challenge)

    def resolve_oob(self, challenge_id: str, token: str) -> ChallengeResult:
        challenge = self.challenges.approve_oob(challenge_id, token, self.clock())
        return self._finish_challenge(challenge)

    # -- introspection -----------------------------------------------------

    def profile_summary(self, username: str) -> dict[str, Any]:
        profile = self.store.profile(username)
        return {
            "username": profile.username,
            "enrolled_context": profile.enrolled_context.to_dict(),
            "history_len": len(profile.raw_history),
            "dimensions": list(profile.dimensions()),
            "ranges": profile.ranges.to_dict(),
            "seed": profile.seed,
            "created_at": profile.created_at,
            "updated_at": profile.updated_at,
        }

    def cluster_export(
        self, username: str, attempt_doc: Any | None = None
    ) -> dict[str, Any]:
        """Cluster the stored history for plotting; optionally place an attempt.

        The scatter axes pair overall session time with typing rate, the two
        dimensions that separate typists most visibly.
        """
        profile = self.store.profile(username)
        dims = profile.dimensions()
        points = profile.normalized_history(dims)
        if len(points) < self.config.min_history:
            raise ProfileNotTrainedError(
                f"profile for {username!r} has {len(points)} training vectors, "
                f"needs {self.config.min_history}"
            )
        k_min, k_max = self.config.k_range(len(points))
        scan = elbow_scan(
            points,
            k_min,
            k_max,
            profile.seed,
            restarts=self.config.restarts,
            max_iter=self.config.max_iter,
        )
        model = scan.chosen_model
        report: ElbowReport = scan.report
        doc: dict[str, Any] = {
            "username": username,
            "k": model.k,
            "dimensions": list(dims),
            "x_dim": "session_time",
            "y_dim": "typing_rate",
            "history": [list(p) for p in points],
            "assignments": list(model.assignments),
            "centroids": [list(c) for c in model.centroids],
            "elbow": {
                "k_values": report.k_values,
                "wcss_values": report.wcss_values,
                "chosen_k": report.chosen_k,
            },
        }
        if attempt_doc is not None:
            session = session_from_dict(attempt_doc)
            fv = extract_features(
                session, enrolled_geo=profile.enrolled_context.geo
            )
            doc["attempt"] = list(normalized_point(fv, profile.ranges, dims))
        return doc

    def profile(self, username: str) -> UserProfile:
        return self.store.profile(username)
