"""HTTP surface over the engine.

Thin by intent: every handler validates transport-level shape, delegates to
the engine, and maps results onto status codes. All error bodies share one
shape: {"error": <machine code>, "detail": <human text>}.
"""

from __future__ import annotations

from typing import Any

from fastapi import Body, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .engine import AttemptResult, AuthEngine
from .errors import (
    ChallengeClosedError,
    ChallengeKindError,
    DuplicateUserError,
    InsufficientTelemetryError,
    InsufficientTrainingError,
    ProfileNotTrainedError,
    SessionFormatError,
    TrainingSessionMismatchError,
    UnknownChallengeError,
    UnknownUserError,
)

_DENIED_DETAIL = "username or password incorrect"


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail})


def _risk_body(result: AttemptResult, explain: bool) -> dict[str, Any]:
    assert result.assessment is not None
    return result.assessment.to_dict(include_explain=explain)


def create_app(engine: AuthEngine, demo_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="keydyn", docs_url=None, redoc_url=None)

    # -- error mapping -------------------------------------------------

    @app.exception_handler(RequestValidationError)
    async def on_bad_request(request: Request, exc: RequestValidationError) -> JSONResponse:
        return _error(400, "malformed", "request body is not a JSON object")

    @app.exception_handler(SessionFormatError)
    async def on_bad_session(request: Request, exc: SessionFormatError) -> JSONResponse:
        return _error(400, "malformed-session", str(exc))

    @app.exception_handler(InsufficientTelemetryError)
    async def on_thin_session(request: Request, exc: InsufficientTelemetryError) -> JSONResponse:
        return _error(400, "insufficient-telemetry", str(exc))

    @app.exception_handler(ProfileNotTrainedError)
    async def on_untrained(request: Request, exc: ProfileNotTrainedError) -> JSONResponse:
        return _error(409, "untrained", str(exc))

    @app.exception_handler(DuplicateUserError)
    async def on_duplicate(request: Request, exc: DuplicateUserError) -> JSONResponse:
        return _error(409, "duplicate-user", str(exc))

    @app.exception_handler(InsufficientTrainingError)
    async def on_thin_training(request: Request, exc: InsufficientTrainingError) -> JSONResponse:
        return _error(422, "insufficient-training", str(exc))

    @app.exception_handler(TrainingSessionMismatchError)
    async def on_mismatched_training(
        request: Request, exc: TrainingSessionMismatchError
    ) -> JSONResponse:
        return _error(422, "training-session-mismatch", str(exc))

    @app.exception_handler(UnknownUserError)
    async def on_unknown_user(request: Request, exc: UnknownUserError) -> JSONResponse:
        return _error(404, "unknown-user", str(exc))

    @app.exception_handler(UnknownChallengeError)
    async def on_unknown_challenge(request: Request, exc: UnknownChallengeError) -> JSONResponse:
        return _error(404, "unknown-challenge", str(exc))

    @app.exception_handler(ChallengeClosedError)
    async def on_closed_challenge(request: Request, exc: ChallengeClosedError) -> JSONResponse:
        return _error(409, "challenge-closed", str(exc))

    @app.exception_handler(ChallengeKindError)
    async def on_wrong_kind(request: Request, exc: ChallengeKindError) -> JSONResponse:
        return _error(409, "challenge-kind-mismatch", str(exc))

    # -- login flow ------------------------------------------------------

    @app.post("/v1/login/username")
    def login_username(body: dict = Body(...)) -> Any:
        """First step of the two-step flow: does the username exist."""
        username = body.get("username")
        if not isinstance(username, str):
            return _error(400, "malformed", "username must be a string")
        return {"exists": engine.username_exists(username)}

    @app.post("/v1/login/attempt")
    def login_attempt(
        body: dict = Body(...), explain: bool = Query(default=False)
    ) -> Any:
        """Second step: credentials plus behavioral risk assessment."""
        result = engine.login_attempt(body)
        if result.outcome == "denied":
            # Credential failures reveal nothing about risk internals.
            return _error(403, "bad-credentials", _DENIED_DETAIL)
        if result.outcome == "granted":
            return {"outcome": "granted", "risk": _risk_body(result, explain)}
        assert result.challenge is not None
        return JSONResponse(
            status_code=202,
            content={
                "outcome": "challenge",
                "challenge": {
                    "id": result.challenge.id,
                    "kind": result.challenge.kind.value,
                },
                "risk": _risk_body(result, explain),
            },
        )

    @app.post("/v1/challenge/{challenge_id}/otp")
    def challenge_otp(challenge_id: str, body: dict = Body(...)) -> Any:
        """Answer a pending OTP challenge."""
        code = body.get("code")
        if not isinstance(code, str):
            return _error(400, "malformed", "code must be a string")
        outcome = engine.resolve_otp(challenge_id, code)
        if outcome.granted:
            return {"outcome": "granted"}
        return JSONResponse(
            status_code=403,
            content={
                "error": "challenge-failed",
                "detail": f"challenge not satisfied: {outcome.reason}",
                "reason": outcome.reason,
            },
        )

    @app.post("/v1/challenge/{challenge_id}/oob")
    def challenge_oob(challenge_id: str, body: dict = Body(...)) -> Any:
        """Approve a pending out-of-band challenge with its token."""
        token = body.get("token")
        if not isinstance(token, str):
            return _error(400, "malformed", "token must be a string")
        outcome = engine.resolve_oob(challenge_id, token)
        if outcome.granted:
            return {"outcome": "granted"}
        return JSONResponse(
            status_code=403,
            content={
                "error": "challenge-failed",
                "detail": f"challenge not satisfied: {outcome.reason}",
                "reason": outcome.reason,
            },
        )

    # -- enrollment and admin ---------------------------------------------

    @app.post("/v1/enroll", status_code=201)
    def enroll(body: dict = Body(...)) -> Any:
        username = body.get("username")
        password = body.get("password")
        sessions = body.get("sessions")
        if not isinstance(username, str) or not username:
            return _error(400, "malformed", "username must be a non-empty string")
        if not isinstance(password, str) or not password:
            return _error(400, "malformed", "password must be a non-empty string")
        if not isinstance(sessions, list):
            return _error(400, "malformed", "sessions must be a list")
        trained = engine.enroll(username, password, sessions)
        return {"trained": trained}

    @app.get("/v1/admin/users/{username}/profile")
    def admin_profile(username: str) -> Any:
        return engine.profile_summary(username)

    @app.get("/v1/admin/users/{username}/clusters")
    def admin_clusters(username: str) -> Any:
        return engine.cluster_export(username)

    if demo_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/demo", StaticFiles(directory=demo_dir, html=True), name="demo")

    return app
