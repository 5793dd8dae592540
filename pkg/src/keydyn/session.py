"""Key-event telemetry: session documents, text reconstruction, features.

A login session is an ordered stream of key-down / key-up events covering
two input fields (username, then password) plus a capture context. Feature
extraction turns the password-field timing into a fixed-order numeric
vector; normalization maps each dimension into [0, 1] against per-profile
observed ranges.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterator, Sequence

from .errors import (
    DimensionMismatchError,
    InsufficientTelemetryError,
    SessionFormatError,
    UnknownKeyError,
)

NAMED_KEYS = frozenset({"LShift", "RShift", "CapsLock", "Backspace", "Delete", "Enter"})

# US layout pairs for clients that report the unshifted key while Shift is held.
SHIFT_MAP = {
    "`": "~", "1": "!", "2": "@", "3": "#", "4": "$", "5": "%", "6": "^",
    "7": "&", "8": "*", "9": "(", "0": ")", "-": "_", "=": "+",
    "[": "{", "]": "}", "\\": "|", ";": ":", "'": '"',
    ",": "<", ".": ">", "/": "?",
}
SHIFTED_SYMBOLS = frozenset(SHIFT_MAP.values())

CLUSTERED_DIMENSIONS: tuple[str, ...] = (
    "typing_rate",
    "session_time",
    "mean_dwell",
    "mean_flight",
    "shift_left_count",
    "shift_right_count",
    "capslock_count",
    "backspace_count",
    "delete_count",
    "geo_mismatch",
)
PRESSURE_DIMENSION = "pressure_mean"


class KeyAction(str, Enum):
    DOWN = "down"
    UP = "up"


def is_printable_key(key: str) -> bool:
    """True for single printable characters; named control keys excluded."""
    return len(key) == 1 and key.isprintable()


@dataclass(frozen=True)
class KeyEvent:
    """One key transition. Timestamps are milliseconds from session start."""

    key: str
    action: KeyAction
    t: float


@dataclass(frozen=True)
class FieldSpan:
    """Inclusive index range of events belonging to one input field.

    end < start encodes an empty span.
    """

    start: int
    end: int

    @property
    def empty(self) -> bool:
        return self.end < self.start

    def indices(self) -> range:
        if self.empty:
            return range(0)
        return range(self.start, self.end + 1)


@dataclass(frozen=True)
class SessionContext:
    """Where and from what the session was captured."""

    geo: str
    timezone: str
    device_id: str

    def to_dict(self) -> dict[str, str]:
        return {"geo": self.geo, "timezone": self.timezone, "device_id": self.device_id}


@dataclass
class LoginSession:
    """Parsed and validated capture of one login attempt."""

    username_claim: str
    events: list[KeyEvent]
    username_span: FieldSpan
    password_span: FieldSpan
    context: SessionContext
    pressure: list[float] | None = None

    def span(self, field_name: str) -> FieldSpan:
        if field_name == "username":
            return self.username_span
        if field_name == "password":
            return self.password_span
        raise ValueError(f"unknown field {field_name!r}")

    def span_events(self, field_name: str) -> Iterator[KeyEvent]:
        for i in self.span(field_name).indices():
            yield self.events[i]

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "username_claim": self.username_claim,
            "events": [
                {"key": ev.key, "action": ev.action.value, "t": ev.t}
                for ev in self.events
            ],
            "fields": {
                "username": [self.username_span.start, self.username_span.end],
                "password": [self.password_span.start, self.password_span.end],
            },
            "context": self.context.to_dict(),
        }
        if self.pressure is not None:
            doc["pressure"] = list(self.pressure)
        return doc


@dataclass(frozen=True)
class FeatureVector:
    """Behavioral summary of one session.

    All clustered dimensions are floats; counts are stored as floats so the
    vector is uniform. timestamp is wall-clock metadata and never clustered.
    """

    typing_rate: float
    session_time: float
    mean_dwell: float
    mean_flight: float
    shift_left_count: float
    shift_right_count: float
    capslock_count: float
    backspace_count: float
    delete_count: float
    geo_mismatch: float
    pressure_mean: float | None = None
    timestamp: float = 0.0

    def dimensions(self) -> tuple[str, ...]:
        if self.pressure_mean is None:
            return CLUSTERED_DIMENSIONS
        return CLUSTERED_DIMENSIONS + (PRESSURE_DIMENSION,)

    def as_point(self, dims: Sequence[str] | None = None) -> tuple[float, ...]:
        if dims is None:
            dims = self.dimensions()
        values = []
        for dim in dims:
            value = getattr(self, dim, None)
            if value is None:
                raise DimensionMismatchError(f"vector has no value for dimension {dim!r}")
            values.append(float(value))
        return tuple(values)

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {dim: getattr(self, dim) for dim in CLUSTERED_DIMENSIONS}
        doc[PRESSURE_DIMENSION] = self.pressure_mean
        doc["timestamp"] = self.timestamp
        return doc

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "FeatureVector":
        kwargs = {dim: float(doc[dim]) for dim in CLUSTERED_DIMENSIONS}
        pressure = doc.get(PRESSURE_DIMENSION)
        kwargs[PRESSURE_DIMENSION] = None if pressure is None else float(pressure)
        kwargs["timestamp"] = float(doc.get("timestamp", 0.0))
        return cls(**kwargs)


@dataclass(frozen=True)
class NormalizationRanges:
    """Per-dimension (min, max) bounds observed over a profile's history."""

    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)

    def dimensions(self) -> tuple[str, ...]:
        return tuple(self.bounds)

    def to_dict(self) -> dict[str, list[float]]:
        return {dim: [lo, hi] for dim, (lo, hi) in self.bounds.items()}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "NormalizationRanges":
        return cls({dim: (float(pair[0]), float(pair[1])) for dim, pair in doc.items()})


def update_ranges(ranges: NormalizationRanges, fv: FeatureVector) -> NormalizationRanges:
    """Widen bounds to cover fv. Bounds only ever grow.

    Empty ranges initialize to (x, x) on each of fv's dimensions. Once
    initialized, the dimension set is fixed for the profile's lifetime.
    """
    dims = fv.dimensions()
    if ranges.bounds and set(ranges.bounds) != set(dims):
        raise DimensionMismatchError(
            f"vector dimensions {sorted(dims)} do not match ranged dimensions "
            f"{sorted(ranges.bounds)}"
        )
    new_bounds = dict(ranges.bounds)
    for dim in dims:
        value = float(getattr(fv, dim))
        if dim in new_bounds:
            lo, hi = new_bounds[dim]
            new_bounds[dim] = (min(lo, value), max(hi, value))
        else:
            new_bounds[dim] = (value, value)
    return NormalizationRanges(new_bounds)


def _scale(value: float, lo: float, hi: float) -> float:
    if hi == lo:
        # Degenerate dimension: every observation identical, no signal.
        return 0.5
    scaled = (value - lo) / (hi - lo)
    return min(1.0, max(0.0, scaled))


def normalize(fv: FeatureVector, ranges: NormalizationRanges) -> FeatureVector:
    """Scale every clustered dimension of fv into [0, 1], clamping outliers."""
    kwargs: dict[str, Any] = {"timestamp": fv.timestamp, PRESSURE_DIMENSION: None}
    for dim in fv.dimensions():
        if dim not in ranges.bounds:
            raise DimensionMismatchError(f"no range recorded for dimension {dim!r}")
        lo, hi = ranges.bounds[dim]
        kwargs[dim] = _scale(float(getattr(fv, dim)), lo, hi)
    return FeatureVector(**kwargs)


def normalized_point(
    fv: FeatureVector, ranges: NormalizationRanges, dims: Sequence[str]
) -> tuple[float, ...]:
    """Normalized coordinates of fv restricted to dims, in the given order."""
    values = []
    for dim in dims:
        value = getattr(fv, dim, None)
        if value is None:
            raise DimensionMismatchError(f"vector has no value for dimension {dim!r}")
        if dim not in ranges.bounds:
            raise DimensionMismatchError(f"no range recorded for dimension {dim!r}")
        lo, hi = ranges.bounds[dim]
        values.append(_scale(float(value), lo, hi))
    return tuple(values)


# ---------------------------------------------------------------------------
# Parsing and validation
# ---------------------------------------------------------------------------


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SessionFormatError(message)


def _parse_span(doc: Any, name: str, n_events: int) -> FieldSpan:
    _require(
        isinstance(doc, (list, tuple)) and len(doc) == 2,
        f"field span {name!r} must be a two-element index pair",
    )
    start, end = doc
    _require(
        isinstance(start, int) and isinstance(end, int)
        and not isinstance(start, bool) and not isinstance(end, bool),
        f"field span {name!r} indices must be integers",
    )
    span = FieldSpan(start, end)
    if not span.empty:
        _require(
            0 <= span.start and span.end < n_events,
            f"field span {name!r} [{start}, {end}] is out of bounds for {n_events} events",
        )
    return span


def session_from_dict(doc: Any) -> LoginSession:
    """Build and validate a LoginSession from an already-decoded document."""
    _require(isinstance(doc, dict), "session document must be a JSON object")
    username_claim = doc.get("username_claim")
    _require(isinstance(username_claim, str), "username_claim must be a string")

    raw_events = doc.get("events")
    _require(isinstance(raw_events, list), "events must be a list")
    events: list[KeyEvent] = []
    last_t = -math.inf
    open_downs: dict[str, int] = {}
    for i, raw in enumerate(raw_events):
        _require(isinstance(raw, dict), f"event {i} must be an object")
        key = raw.get("key")
        action = raw.get("action")
        t = raw.get("t")
        _require(isinstance(key, str) and key != "", f"event {i} key must be a string")
        if key not in NAMED_KEYS and not is_printable_key(key):
            raise UnknownKeyError(f"event {i} has unknown key identifier {key!r}")
        _require(action in ("down", "up"), f"event {i} action must be 'down' or 'up'")
        _require(
            isinstance(t, (int, float)) and not isinstance(t, bool) and math.isfinite(t),
            f"event {i} timestamp must be a finite number",
        )
        _require(t >= 0, f"event {i} timestamp must be non-negative")
        _require(t >= last_t, f"events are unsorted: event {i} at t={t} precedes t={last_t}")
        last_t = float(t)
        if action == "down":
            open_downs[key] = open_downs.get(key, 0) + 1
        else:
            held = open_downs.get(key, 0)
            _require(held > 0, f"orphan key-up for {key!r} at event {i}")
            open_downs[key] = held - 1
        events.append(KeyEvent(key, KeyAction(action), float(t)))
    # Unmatched downs are permitted: a client may flush before all releases.

    fields_doc = doc.get("fields")
    _require(isinstance(fields_doc, dict), "fields must be an object")
    _require(
        "username" in fields_doc and "password" in fields_doc,
        "fields must define username and password spans",
    )
    username_span = _parse_span(fields_doc["username"], "username", len(events))
    password_span = _parse_span(fields_doc["password"], "password", len(events))
    if not username_span.empty and not password_span.empty:
        _require(
            username_span.end < password_span.start,
            "overlapping or mis-ordered field spans: username must precede password",
        )

    context_doc = doc.get("context")
    _require(isinstance(context_doc, dict), "context must be an object")
    parts = {}
    for part in ("geo", "timezone", "device_id"):
        value = context_doc.get(part)
        _require(isinstance(value, str), f"context.{part} must be a string")
        parts[part] = value
    context = SessionContext(**parts)

    pressure = doc.get("pressure")
    if pressure is not None:
        _require(isinstance(pressure, list), "pressure must be a list")
        _require(
            len(pressure) == len(events),
            f"pressure list has {len(pressure)} entries for {len(events)} events",
        )
        for i, p in enumerate(pressure):
            _require(
                isinstance(p, (int, float)) and not isinstance(p, bool)
                and 0.0 <= p <= 1.0,
                f"pressure[{i}] must be a number in [0, 1]",
            )
        pressure = [float(p) for p in pressure]

    return LoginSession(
        username_claim=username_claim,
        events=events,
        username_span=username_span,
        password_span=password_span,
        context=context,
        pressure=pressure,
    )


def parse_session(data: bytes | str) -> LoginSession:
    """Decode a UTF-8 JSON session document and validate it."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SessionFormatError(f"session document is not valid UTF-8: {exc}") from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SessionFormatError(
            f"session document is not valid JSON at position {exc.pos}: {exc.msg}"
        ) from exc
    return session_from_dict(doc)


# ---------------------------------------------------------------------------
# Text reconstruction
# ---------------------------------------------------------------------------


def _apply_modifiers(key: str, shift_held: bool, caps_on: bool) -> str:
    if key.isalpha():
        upper = shift_held != caps_on
        return key.upper() if upper else key.lower()
    if shift_held:
        return SHIFT_MAP.get(key, key)
    return key


def reconstruct_text(session: LoginSession, field_name: str) -> str:
    """Replay one field's events into the text the user ended up with.

    Modifier state is local to the field. Backspace removes the last
    character; with the caret always at the end, Delete removes nothing
    and Enter only terminates input.
    """
    chars: list[str] = []
    shift_depth = 0
    caps_on = False
    for ev in session.span_events(field_name):
        down = ev.action is KeyAction.DOWN
        if ev.key in ("LShift", "RShift"):
            if down:
                shift_depth += 1
            elif shift_depth > 0:
                shift_depth -= 1
        elif ev.key == "CapsLock":
            if down:
                caps_on = not caps_on
        elif ev.key == "Backspace":
            if down and chars:
                chars.pop()
        elif ev.key in ("Delete", "Enter"):
            pass
        elif is_printable_key(ev.key):
            if down:
                chars.append(_apply_modifiers(ev.key, shift_depth > 0, caps_on))
        else:
            raise UnknownKeyError(f"unknown key identifier {ev.key!r}")
    return "".join(chars)


# ---------------------------------------------------------------------------
# Feature extraction
# ---------------------------------------------------------------------------


def _printable_pairs(events: Sequence[KeyEvent]) -> list[tuple[float, float]]:
    """Completed (down_t, up_t) pairs for printable keys, ordered by down time."""
    open_stacks: dict[str, list[float]] = {}
    pairs: list[tuple[float, float]] = []
    for ev in events:
        if ev.key in NAMED_KEYS:
            continue
        if ev.action is KeyAction.DOWN:
            open_stacks.setdefault(ev.key, []).append(ev.t)
        else:
            stack = open_stacks.get(ev.key)
            if stack:
                pairs.append((stack.pop(), ev.t))
    pairs.sort()
    return pairs


def extract_features(
    session: LoginSession,
    enrolled_geo: str | None = None,
    timestamp: float = 0.0,
) -> FeatureVector:
    """Compute the raw (unnormalized) feature vector for a session.

    Dwell, flight, and typing rate come from the password field only.
    Session time and special-key counts span both fields. Flight times
    between consecutive printable presses may be negative when key
    presses overlap; they are kept as measured.
    """
    password_events = list(session.span_events("password"))
    pairs = _printable_pairs(password_events)
    if not pairs:
        raise InsufficientTelemetryError(
            "insufficient telemetry: password field has no complete key press"
        )

    dwells = [up - down for down, up in pairs]
    flights = [pairs[i + 1][0] - pairs[i][1] for i in range(len(pairs) - 1)]
    mean_dwell = sum(dwells) / len(dwells)
    mean_flight = sum(flights) / len(flights) if flights else 0.0

    span_times = [
        ev.t
        for name in ("username", "password")
        for ev in session.span_events(name)
    ]
    session_time = max(span_times) - min(span_times)

    printable_downs = sum(
        1
        for ev in password_events
        if ev.action is KeyAction.DOWN and ev.key not in NAMED_KEYS
    )
    typing_rate = printable_downs / (session_time / 1000.0) if session_time > 0 else 0.0

    counts = {"LShift": 0, "RShift": 0, "CapsLock": 0, "Backspace": 0, "Delete": 0}
    for name in ("username", "password"):
        for ev in session.span_events(name):
            if ev.action is KeyAction.DOWN and ev.key in counts:
                counts[ev.key] += 1

    geo_mismatch = 0.0
    if enrolled_geo is not None and session.context.geo != enrolled_geo:
        geo_mismatch = 1.0

    pressure_mean: float | None = None
    if session.pressure is not None:
        span = session.password_span
        values = [session.pressure[i] for i in span.indices()]
        if values:
            pressure_mean = sum(values) / len(values)

    return FeatureVector(
        typing_rate=typing_rate,
        session_time=session_time,
        mean_dwell=mean_dwell,
        mean_flight=mean_flight,
        shift_left_count=float(counts["LShift"]),
        shift_right_count=float(counts["RShift"]),
        capslock_count=float(counts["CapsLock"]),
        backspace_count=float(counts["Backspace"]),
        delete_count=float(counts["Delete"]),
        geo_mismatch=geo_mismatch,
        pressure_mean=pressure_mean,
        timestamp=timestamp,
    )


def with_timestamp(fv: FeatureVector, timestamp: float) -> FeatureVector:
    return replace(fv, timestamp=timestamp)
