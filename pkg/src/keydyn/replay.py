"""Scenario replay and evaluation metrics.

A scenario is an ordered list of labeled login attempts. The runner feeds
them through a transport (direct engine calls, or HTTP against a running
service), completes challenges according to each attempt's scripted
behavior by reading the delivered secret from the outbox file, and tallies
false-positive / false-negative rates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Protocol

from .engine import AuthEngine


@dataclass
class MetricsReport:
    """Grant/deny tallies split by ground truth.

    fpr: imposters granted over imposters total.
    fnr: legitimate users denied over legitimate total.
    gar: complement of fnr.
    """

    legit_total: int = 0
    legit_granted: int = 0
    legit_denied: int = 0
    imposter_total: int = 0
    imposter_granted: int = 0
    imposter_denied: int = 0
    challenged_otp: int = 0
    challenged_oob: int = 0

    @property
    def fpr(self) -> float:
        return self.imposter_granted / self.imposter_total if self.imposter_total else 0.0

    @property
    def fnr(self) -> float:
        return self.legit_denied / self.legit_total if self.legit_total else 0.0

    @property
    def gar(self) -> float:
        return 1.0 - self.fnr

    def to_dict(self) -> dict[str, Any]:
        return {
            "legit_total": self.legit_total,
            "legit_granted": self.legit_granted,
            "legit_denied": self.legit_denied,
            "imposter_total": self.imposter_total,
            "imposter_granted": self.imposter_granted,
            "imposter_denied": self.imposter_denied,
            "challenged_otp": self.challenged_otp,
            "challenged_oob": self.challenged_oob,
            "fpr": self.fpr,
            "fnr": self.fnr,
            "gar": self.gar,
        }


@dataclass
class AttemptView:
    """Transport-independent shape of one attempt response."""

    outcome: str  # granted | challenge | denied
    degree: str | None = None
    challenge_id: str | None = None
    challenge_kind: str | None = None
    reason: str | None = None


@dataclass
class ReplayEntry:
    """Log row produced for each scenario attempt."""

    index: int
    username: str
    truth: str
    outcome: str  # granted | denied
    degree: str | None = None
    challenge_kind: str | None = None
    reason: str | None = None


def read_outbox_secret(outbox_path: str | Path, kind: str, user: str) -> str:
    """Most recent secret delivered to user for the given challenge kind.

    Outbox lines look like: ts kind user payload. OTP payloads are the code
    itself; OOB payloads are an approval URL carrying token=<hex>.
    """
    last: str | None = None
    for line in Path(outbox_path).read_text(encoding="utf-8").splitlines():
        parts = line.split(" ", 3)
        if len(parts) == 4 and parts[1] == kind and parts[2] == user:
            last = parts[3]
    if last is None:
        raise LookupError(f"no {kind} delivery for user {user!r} in outbox")
    if kind == "oob":
        marker = "token="
        pos = last.rfind(marker)
        if pos < 0:
            raise LookupError(f"oob delivery for user {user!r} carries no token")
        return last[pos + len(marker):]
    return last


class Transport(Protocol):
    def attempt(self, doc: dict[str, Any]) -> AttemptView: ...

    def resolve(self, challenge_id: str, kind: str, secret: str) -> bool: ...

    def read_secret(self, kind: str, user: str) -> str: ...


class LibraryTransport:
    """Drives an in-process engine directly."""

    def __init__(self, engine: AuthEngine, outbox_path: str | Path) -> None:
        self.engine = engine
        self.outbox_path = outbox_path

    def attempt(self, doc: dict[str, Any]) -> AttemptView:
        result = self.engine.login_attempt(doc)
        if result.outcome == "denied":
            return AttemptView(outcome="denied", reason=result.reason)
        degree = result.assessment.degree.label if result.assessment else None
        if result.outcome == "granted":
            return AttemptView(outcome="granted", degree=degree)
        assert result.challenge is not None
        return AttemptView(
            outcome="challenge",
            degree=degree,
            challenge_id=result.challenge.id,
            challenge_kind=result.challenge.kind.value,
        )

    def resolve(self, challenge_id: str, kind: str, secret: str) -> bool:
        if kind == "otp":
            return self.engine.resolve_otp(challenge_id, secret).granted
        return self.engine.resolve_oob(challenge_id, secret).granted

    def read_secret(self, kind: str, user: str) -> str:
        return read_outbox_secret(self.outbox_path, kind, user)


class HttpTransport:
    """Drives a running service over HTTP with an httpx-compatible client."""

    def __init__(self, client: Any, outbox_path: str | Path, base_url: str = "") -> None:
        self.client = client
        self.outbox_path = outbox_path
        self.base_url = base_url.rstrip("/")

    def _url(self, path: str) -> str:
        return f"{self.base_url}{path}"

    def attempt(self, doc: dict[str, Any]) -> AttemptView:
        response = self.client.post(self._url("/v1/login/attempt"), json=doc)
        body = response.json()
        if response.status_code == 200:
            return AttemptView(outcome="granted", degree=body["risk"]["degree"])
        if response.status_code == 202:
            return AttemptView(
                outcome="challenge",
                degree=body["risk"]["degree"],
                challenge_id=body["challenge"]["id"],
                challenge_kind=body["challenge"]["kind"],
            )
        return AttemptView(outcome="denied", reason=body.get("error"))

    def resolve(self, challenge_id: str, kind: str, secret: str) -> bool:
        payload = {"code": secret} if kind == "otp" else {"token": secret}
        response = self.client.post(
            self._url(f"/v1/challenge/{challenge_id}/{kind}"), json=payload
        )
        return response.status_code == 200

    def read_secret(self, kind: str, user: str) -> str:
        return read_outbox_secret(self.outbox_path, kind, user)


def load_scenario(path: str | Path) -> list[dict[str, Any]]:
    """Read a scenario file; sessions may be inline or in sibling files."""
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    attempts = doc["attempts"] if isinstance(doc, dict) else doc
    if not isinstance(attempts, list):
        raise ValueError("scenario must be a list of attempts")
    resolved = []
    for entry in attempts:
        entry = dict(entry)
        if "session_file" in entry:
            session_path = path.parent / entry.pop("session_file")
            entry["session"] = json.loads(session_path.read_text(encoding="utf-8"))
        resolved.append(entry)
    return resolved


def run_scenario(
    transport: Transport, attempts: list[dict[str, Any]]
) -> tuple[MetricsReport, list[ReplayEntry]]:
    """Play every attempt in order and tally the outcomes.

    truth labels each attempt "legit" or "imposter"; challenge_behavior
    "pass" completes any issued challenge with the delivered secret, "fail"
    abandons it.
    """
    report = MetricsReport()
    log: list[ReplayEntry] = []
    for i, entry in enumerate(attempts):
        doc = entry["session"]
        truth = entry["truth"]
        if truth not in ("legit", "imposter"):
            raise ValueError(f"attempt {i}: truth must be 'legit' or 'imposter'")
        behavior = entry.get("challenge_behavior", "fail")
        username = doc.get("username_claim", "?")
        view = transport.attempt(doc)

        outcome = view.outcome
        reason = view.reason
        if view.outcome == "challenge":
            assert view.challenge_id is not None and view.challenge_kind is not None
            if view.challenge_kind == "otp":
                report.challenged_otp += 1
            else:
                report.challenged_oob += 1
            if behavior == "pass":
                secret = transport.read_secret(view.challenge_kind, username)
                granted = transport.resolve(view.challenge_id, view.challenge_kind, secret)
                outcome = "granted" if granted else "denied"
                reason = None if granted else "challenge-failed"
            else:
                outcome = "denied"
                reason = "challenge-abandoned"

        if truth == "legit":
            report.legit_total += 1
            if outcome == "granted":
                report.legit_granted += 1
            else:
                report.legit_denied += 1
        else:
            report.imposter_total += 1
            if outcome == "granted":
                report.imposter_granted += 1
            else:
                report.imposter_denied += 1

        log.append(
            ReplayEntry(
                index=i,
                username=username,
                truth=truth,
                outcome=outcome,
                degree=view.degree,
                challenge_kind=view.challenge_kind,
                reason=reason,
            )
        )
    return report, log
