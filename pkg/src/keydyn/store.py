"""User profiles: hashed credentials, raw behavioral history, persistence.

Passwords are hashed with scrypt (memory-hard, per-user salt) and compared
in constant time. History vectors are stored raw, before normalization, so
normalization ranges can keep widening as new sessions arrive. The store
serializes to a single versioned JSON file written atomically.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .errors import (
    DuplicateUserError,
    InsufficientTrainingError,
    StoreCorruptError,
    StoreVersionError,
    TrainingSessionMismatchError,
    UnknownUserError,
)
from .session import (
    CLUSTERED_DIMENSIONS,
    PRESSURE_DIMENSION,
    FeatureVector,
    LoginSession,
    NormalizationRanges,
    SessionContext,
    extract_features,
    normalized_point,
    reconstruct_text,
    update_ranges,
)

STORE_VERSION = "keydyn-store/1"

SCRYPT_PARAMS: dict[str, int] = {"n": 16384, "r": 8, "p": 1, "dklen": 32}
_SALT_BYTES = 16


def hash_password(password: str, salt: bytes, params: dict[str, int]) -> bytes:
    return hashlib.scrypt(
        password.encode("utf-8"),
        salt=salt,
        n=int(params["n"]),
        r=int(params["r"]),
        p=int(params["p"]),
        dklen=int(params["dklen"]),
    )


@dataclass
class UserProfile:
    """Everything the engine knows about one enrolled user."""

    username: str
    pw_salt: bytes
    pw_hash: bytes
    hash_params: dict[str, int]
    enrolled_context: SessionContext
    raw_history: list[FeatureVector] = field(default_factory=list)
    ranges: NormalizationRanges = field(default_factory=NormalizationRanges)
    seed: int = 0
    created_at: float = 0.0
    updated_at: float = 0.0

    def verify_password(self, typed_password: str) -> bool:
        candidate = hash_password(typed_password, self.pw_salt, self.hash_params)
        return hmac.compare_digest(candidate, self.pw_hash)

    def dimensions(self) -> tuple[str, ...]:
        """Dimensions every history vector carries; pressure only if universal."""
        if self.raw_history and all(
            fv.pressure_mean is not None for fv in self.raw_history
        ):
            return CLUSTERED_DIMENSIONS + (PRESSURE_DIMENSION,)
        return CLUSTERED_DIMENSIONS

    def normalized_history(self, dims: tuple[str, ...] | None = None) -> list[tuple[float, ...]]:
        if dims is None:
            dims = self.dimensions()
        return [normalized_point(fv, self.ranges, dims) for fv in self.raw_history]

    def to_dict(self) -> dict[str, Any]:
        return {
            "pw_salt": self.pw_salt.hex(),
            "pw_hash": self.pw_hash.hex(),
            "hash_params": {"name": "scrypt", **self.hash_params},
            "enrolled_context": self.enrolled_context.to_dict(),
            "raw_history": [fv.to_dict() for fv in self.raw_history],
            "ranges": self.ranges.to_dict(),
            "seed": self.seed,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }


class ProfileStore:
    """In-memory user table; pair with save/load for durability."""

    def __init__(self, users: dict[str, UserProfile] | None = None) -> None:
        self.users: dict[str, UserProfile] = users if users is not None else {}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProfileStore):
            return NotImplemented
        return self.users == other.users

    def verify_username(self, username: str) -> bool:
        return username in self.users

    def profile(self, username: str) -> UserProfile:
        try:
            return self.users[username]
        except KeyError:
            raise UnknownUserError(f"unknown user {username!r}") from None

    def enroll(
        self,
        username: str,
        password: str,
        sessions: list[LoginSession],
        *,
        seed: int = 0,
        min_history: int = 10,
        now_ms: float = 0.0,
    ) -> UserProfile:
        """Create a profile from typed training sessions.

        Every session must reproduce both credentials through text
        reconstruction; the first session's context becomes the enrolled
        context against which later geo mismatches are judged.
        """
        if username in self.users:
            raise DuplicateUserError(f"user {username!r} already enrolled")
        if len(sessions) < min_history:
            raise InsufficientTrainingError(
                f"insufficient training: {len(sessions)} sessions, need {min_history}"
            )
        enrolled_context = sessions[0].context
        history: list[FeatureVector] = []
        ranges = NormalizationRanges()
        for i, session in enumerate(sessions):
            typed_user = reconstruct_text(session, "username")
            typed_pass = reconstruct_text(session, "password")
            if typed_user != username or typed_pass != password:
                raise TrainingSessionMismatchError(
                    f"training session {i} does not reproduce the enrolled credentials",
                    index=i,
                )
            fv = extract_features(
                session, enrolled_geo=enrolled_context.geo, timestamp=now_ms + i
            )
            history.append(fv)
            ranges = update_ranges(ranges, fv)
        salt = os.urandom(_SALT_BYTES)
        profile = UserProfile(
            username=username,
            pw_salt=salt,
            pw_hash=hash_password(password, salt, SCRYPT_PARAMS),
            hash_params=dict(SCRYPT_PARAMS),
            enrolled_context=enrolled_context,
            raw_history=history,
            ranges=ranges,
            seed=seed,
            created_at=now_ms,
            updated_at=now_ms,
        )
        self.users[username] = profile
        return profile

    def append_success(
        self, username: str, raw_fv: FeatureVector, timestamp: float
    ) -> UserProfile:
        """Fold a granted attempt's raw vector into the profile."""
        profile = self.profile(username)
        stamped = replace(raw_fv, timestamp=timestamp)
        profile.raw_history.append(stamped)
        profile.ranges = update_ranges(profile.ranges, stamped)
        profile.updated_at = timestamp
        return profile

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": STORE_VERSION,
            "users": {name: profile.to_dict() for name, profile in self.users.items()},
        }


def save(store: ProfileStore, path: str | Path) -> None:
    """Serialize to JSON via a temp file and atomic rename."""
    path = Path(path)
    payload = json.dumps(store.to_dict(), indent=2, sort_keys=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def _profile_from_dict(username: str, doc: dict[str, Any]) -> UserProfile:
    hash_params = dict(doc["hash_params"])
    hash_params.pop("name", None)
    context = doc["enrolled_context"]
    return UserProfile(
        username=username,
        pw_salt=bytes.fromhex(doc["pw_salt"]),
        pw_hash=bytes.fromhex(doc["pw_hash"]),
        hash_params={k: int(v) for k, v in hash_params.items()},
        enrolled_context=SessionContext(
            geo=context["geo"],
            timezone=context["timezone"],
            device_id=context["device_id"],
        ),
        raw_history=[FeatureVector.from_dict(d) for d in doc["raw_history"]],
        ranges=NormalizationRanges.from_dict(doc["ranges"]),
        seed=int(doc["seed"]),
        created_at=float(doc["created_at"]),
        updated_at=float(doc["updated_at"]),
    )


def load(path: str | Path) -> ProfileStore:
    """Parse a store file, rejecting unknown versions and corrupt content."""
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise StoreCorruptError(
            f"store file is not valid UTF-8 at byte {exc.start}", offset=exc.start
        ) from exc
    except json.JSONDecodeError as exc:
        raise StoreCorruptError(
            f"store file is not valid JSON at byte {exc.pos}: {exc.msg}", offset=exc.pos
        ) from exc
    if not isinstance(doc, dict):
        raise StoreCorruptError("store file must contain a JSON object")
    version = doc.get("version")
    if version != STORE_VERSION:
        raise StoreVersionError(
            f"unsupported store version {version!r}, expected {STORE_VERSION!r}"
        )
    users_doc = doc.get("users")
    if not isinstance(users_doc, dict):
        raise StoreCorruptError("store file has no users table")
    users: dict[str, UserProfile] = {}
    for username, profile_doc in users_doc.items():
        try:
            users[username] = _profile_from_dict(username, profile_doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise StoreCorruptError(
                f"store entry for user {username!r} is invalid: {exc}"
            ) from exc
    return ProfileStore(users)
