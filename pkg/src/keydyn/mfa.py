"""Risk-proportionate MFA: decisions, challenges, and their state machine.

Normal attempts are granted outright. A first-degree outlier must answer a
six-digit one-time password; a second-degree outlier must approve an
out-of-band token. Challenge secrets are delivered through a notifier (the
default appends to a local outbox file, standing in for SMS or push).
"""

from __future__ import annotations

import hmac
import logging
import random
import threading
import uuid
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Protocol

from .anomaly import OutlierDegree, RiskAssessment
from .errors import ChallengeClosedError, ChallengeKindError, UnknownChallengeError

logger = logging.getLogger(__name__)

Notifier = Callable[[float, str, str, str], None]


class Decision(str, Enum):
    """What the service should do with an attempt, before any challenge runs."""

    GRANT = "grant"
    CHALLENGE_OTP = "challenge_otp"
    CHALLENGE_OOB = "challenge_oob"
    DENY = "deny"


_DEGREE_TO_DECISION = {
    OutlierDegree.NORMAL: Decision.GRANT,
    OutlierDegree.FIRST_DEGREE: Decision.CHALLENGE_OTP,
    OutlierDegree.SECOND_DEGREE: Decision.CHALLENGE_OOB,
}


def decide(assessment: RiskAssessment) -> Decision:
    """Map an assessment's degree to the action it requires."""
    return _DEGREE_TO_DECISION[assessment.degree]


class ChallengeKind(str, Enum):
    OTP = "otp"
    OOB = "oob"


class ChallengeState(str, Enum):
    PENDING = "pending"
    VERIFIED = "verified"
    FAILED = "failed"
    EXPIRED = "expired"


TERMINAL_STATES = frozenset(
    {ChallengeState.VERIFIED, ChallengeState.FAILED, ChallengeState.EXPIRED}
)


@dataclass
class Challenge:
    """One issued challenge. Terminal states are absorbing."""

    id: str
    kind: ChallengeKind
    user: str
    secret: str
    issued_at: float
    expires_at: float
    attempts_left: int
    state: ChallengeState = ChallengeState.PENDING
    delivery_error: str | None = None

    @property
    def closed(self) -> bool:
        return self.state in TERMINAL_STATES


def _deliver(challenge: Challenge, notifier: Notifier | None, payload: str) -> None:
    if notifier is None:
        return
    try:
        notifier(challenge.issued_at, challenge.kind.value, challenge.user, payload)
    except Exception as exc:  # delivery is best-effort; the challenge stands
        logger.warning("challenge %s delivery failed: %s", challenge.id, exc)
        challenge.delivery_error = str(exc)


def issue_otp(
    user: str,
    now: float,
    rng: random.Random,
    *,
    ttl_ms: int = 300_000,
    attempts: int = 3,
    notifier: Notifier | None = None,
) -> Challenge:
    """Issue a six-digit one-time password valid for ttl_ms."""
    code = f"{rng.randrange(1_000_000):06d}"
    challenge = Challenge(
        id=uuid.uuid4().hex,
        kind=ChallengeKind.OTP,
        user=user,
        secret=code,
        issued_at=now,
        expires_at=now + ttl_ms,
        attempts_left=attempts,
    )
    _deliver(challenge, notifier, code)
    return challenge


def issue_oob(
    user: str,
    now: float,
    rng: random.Random | None = None,
    *,
    ttl_ms: int = 300_000,
    notifier: Notifier | None = None,
) -> Challenge:
    """Issue a single-use out-of-band approval carrying a 128-bit token."""
    if rng is None:
        rng = random.SystemRandom()
    token = f"{rng.getrandbits(128):032x}"
    challenge = Challenge(
        id=uuid.uuid4().hex,
        kind=ChallengeKind.OOB,
        user=user,
        secret=token,
        issued_at=now,
        expires_at=now + ttl_ms,
        attempts_left=1,
    )
    _deliver(challenge, notifier, f"/v1/challenge/{challenge.id}/oob?token={token}")
    return challenge


def _check_open(challenge: Challenge, kind: ChallengeKind, now: float) -> bool:
    """Shared entry guard. Returns True if the challenge just expired."""
    if challenge.kind is not kind:
        raise ChallengeKindError(
            f"challenge {challenge.id} is {challenge.kind.value}, not {kind.value}"
        )
    if challenge.closed:
        raise ChallengeClosedError(
            f"challenge {challenge.id} already {challenge.state.value}"
        )
    if now > challenge.expires_at:
        challenge.state = ChallengeState.EXPIRED
        return True
    return False


def verify_otp(challenge: Challenge, code: str, now: float) -> Challenge:
    """Consume one OTP attempt; exhausting attempts fails the challenge."""
    if _check_open(challenge, ChallengeKind.OTP, now):
        return challenge
    if hmac.compare_digest(code.encode(), challenge.secret.encode()):
        challenge.state = ChallengeState.VERIFIED
    else:
        challenge.attempts_left -= 1
        if challenge.attempts_left <= 0:
            challenge.state = ChallengeState.FAILED
    return challenge


def approve_oob(challenge: Challenge, token: str, now: float) -> Challenge:
    """Single-shot token approval; any wrong token fails the challenge."""
    if _check_open(challenge, ChallengeKind.OOB, now):
        return challenge
    if hmac.compare_digest(token.encode(), challenge.secret.encode()):
        challenge.state = ChallengeState.VERIFIED
    else:
        challenge.attempts_left = 0
        challenge.state = ChallengeState.FAILED
    return challenge


class OutboxNotifier:
    """Appends one line per delivery: ts kind user payload."""

    def __init__(self, path: str) -> None:
        self.path = path

    def __call__(self, ts: float, kind: str, user: str, payload: str) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(f"{ts:.0f} {kind} {user} {payload}\n")


class ChallengeStore(Protocol):
    def get(self, challenge_id: str) -> Challenge: ...


class ChallengeRegistry:
    """In-memory challenge table with serialized state transitions."""

    def __init__(
        self,
        *,
        rng: random.Random | None = None,
        notifier: Notifier | None = None,
        otp_ttl_ms: int = 300_000,
        otp_attempts: int = 3,
        oob_ttl_ms: int = 300_000,
    ) -> None:
        self._rng = rng if rng is not None else random.SystemRandom()
        self._notifier = notifier
        self._otp_ttl_ms = otp_ttl_ms
        self._otp_attempts = otp_attempts
        self._oob_ttl_ms = oob_ttl_ms
        self._challenges: dict[str, Challenge] = {}
        self._lock = threading.Lock()

    def get(self, challenge_id: str) -> Challenge:
        with self._lock:
            challenge = self._challenges.get(challenge_id)
        if challenge is None:
            raise UnknownChallengeError(f"unknown challenge {challenge_id!r}")
        return challenge

    def issue_otp(self, user: str, now: float) -> Challenge:
        with self._lock:
            challenge = issue_otp(
                user,
                now,
                self._rng,
                ttl_ms=self._otp_ttl_ms,
                attempts=self._otp_attempts,
                notifier=self._notifier,
            )
            self._challenges[challenge.id] = challenge
        return challenge

    def issue_oob(self, user: str, now: float) -> Challenge:
        with self._lock:
            challenge = issue_oob(
                user,
                now,
                self._rng,
                ttl_ms=self._oob_ttl_ms,
                notifier=self._notifier,
            )
            self._challenges[challenge.id] = challenge
        return challenge

    def verify_otp(self, challenge_id: str, code: str, now: float) -> Challenge:
        with self._lock:
            challenge = self._challenges.get(challenge_id)
            if challenge is None:
                raise UnknownChallengeError(f"unknown challenge {challenge_id!r}")
            return verify_otp(challenge, code, now)

    def approve_oob(self, challenge_id: str, token: str, now: float) -> Challenge:
        with self._lock:
            challenge = self._challenges.get(challenge_id)
            if challenge is None:
                raise UnknownChallengeError(f"unknown challenge {challenge_id!r}")
            return approve_oob(challenge, token, now)
