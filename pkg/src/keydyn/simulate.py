"""Synthetic typists for training data, demos, and evaluation.

A typist model samples dwell and flight times from Gaussians, picks one of
two capitalization habits, and occasionally mistypes a character and fixes
it with Backspace. Generated sessions always round-trip through text
reconstruction to exactly the intended strings.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass
from enum import Enum

from .session import (
    SHIFTED_SYMBOLS,
    FieldSpan,
    KeyAction,
    KeyEvent,
    LoginSession,
    SessionContext,
)

DEFAULT_CONTEXT = SessionContext(
    geo="ZA-GP", timezone="Africa/Johannesburg", device_id="dev-1"
)

_MIN_INTERVAL_MS = 1.0
_TYPO_ALPHABET = string.ascii_lowercase


class ShiftStyle(str, Enum):
    """How the typist produces capitals and shifted symbols."""

    SHIFT_KEY = "shift"
    CAPS_LOCK = "capslock"


@dataclass(frozen=True)
class TypistModel:
    """Timing and habit parameters for one synthetic typist."""

    dwell_mean: float = 80.0
    dwell_std: float = 8.0
    flight_mean: float = 100.0
    flight_std: float = 12.0
    error_rate: float = 0.0
    shift_style: ShiftStyle = ShiftStyle.SHIFT_KEY
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dwell_mean <= 0 or self.flight_mean <= 0:
            raise ValueError("dwell_mean and flight_mean must be positive")
        if self.dwell_std < 0 or self.flight_std < 0:
            raise ValueError("standard deviations must be non-negative")
        if not 0.0 <= self.error_rate <= 1.0:
            raise ValueError("error_rate must lie in [0, 1]")

    def rng(self) -> random.Random:
        return random.Random(self.seed)


def _needs_shift(ch: str) -> bool:
    return (ch.isalpha() and ch.isupper()) or ch in SHIFTED_SYMBOLS


def _is_upper_letter(ch: str) -> bool:
    return ch.isalpha() and ch.isupper()


class _EventWriter:
    """Accumulates events, sampling one dwell per press and one flight
    between presses."""

    def __init__(self, model: TypistModel, rng: random.Random, start_t: float) -> None:
        self.model = model
        self.rng = rng
        self.events: list[KeyEvent] = []
        self.next_down_t = start_t

    def _dwell(self) -> float:
        return max(_MIN_INTERVAL_MS, self.rng.gauss(self.model.dwell_mean, self.model.dwell_std))

    def _flight(self) -> float:
        return max(_MIN_INTERVAL_MS, self.rng.gauss(self.model.flight_mean, self.model.flight_std))

    def press(self, key: str) -> tuple[float, float]:
        """Full down/up cycle for one key; returns (down_t, up_t)."""
        down_t = self.next_down_t
        up_t = down_t + self._dwell()
        self.events.append(KeyEvent(key, KeyAction.DOWN, down_t))
        self.events.append(KeyEvent(key, KeyAction.UP, up_t))
        self.next_down_t = up_t + self._flight()
        return down_t, up_t

    def gap(self) -> None:
        """Extra flight interval, e.g. moving between input fields."""
        self.next_down_t += self._flight()


def _press_shifted(writer: _EventWriter, shift_key: str, chars: list[str]) -> None:
    """Hold a shift key across one or more character presses."""
    down_t = writer.next_down_t
    writer.events.append(KeyEvent(shift_key, KeyAction.DOWN, down_t))
    writer.next_down_t = down_t + writer._flight()
    last_up = writer.next_down_t
    for ch in chars:
        _, last_up = writer.press(ch)
    writer.events.append(KeyEvent(shift_key, KeyAction.UP, last_up))


def _maybe_typo(writer: _EventWriter, target: str) -> None:
    """With probability error_rate, type a wrong letter and erase it."""
    if writer.model.error_rate <= 0.0:
        return
    if writer.rng.random() >= writer.model.error_rate:
        return
    candidates = [c for c in _TYPO_ALPHABET if c != target.lower()]
    wrong = writer.rng.choice(candidates)
    writer.press(wrong)
    writer.press("Backspace")


def type_text(
    model: TypistModel,
    text: str,
    rng: random.Random,
    start_t: float = 0.0,
) -> list[KeyEvent]:
    """Generate the event stream a typist produces entering text.

    The stream reconstructs to exactly text. Events come out sorted and
    every down has a matching up.
    """
    writer = _EventWriter(model, rng, start_t)
    i = 0
    while i < len(text):
        ch = text[i]
        _maybe_typo(writer, ch)
        if not _needs_shift(ch):
            writer.press(ch)
            i += 1
            continue
        if model.shift_style is ShiftStyle.CAPS_LOCK and _is_upper_letter(ch):
            # Toggle CapsLock around the whole run of capitals.
            run_end = i
            while run_end < len(text) and _is_upper_letter(text[run_end]):
                run_end += 1
            writer.press("CapsLock")
            for offset, c in enumerate(text[i:run_end]):
                if offset > 0:
                    _maybe_typo(writer, c)
                writer.press(c)
            writer.press("CapsLock")
            i = run_end
            continue
        _press_shifted(writer, "LShift", [ch])
        i += 1
    return writer.events


def simulate_session(
    model: TypistModel,
    username: str,
    password: str,
    rng: random.Random,
    *,
    context: SessionContext = DEFAULT_CONTEXT,
    start_t: float = 0.0,
) -> LoginSession:
    """One full login capture: username field, pause, password field."""
    if not username or not password:
        raise ValueError("username and password must be non-empty")
    user_events = type_text(model, username, rng, start_t)
    last_up = max(ev.t for ev in user_events)
    pause = max(
        _MIN_INTERVAL_MS, rng.gauss(model.flight_mean * 3.0, model.flight_std)
    )
    pass_events = type_text(model, password, rng, last_up + pause)
    events = user_events + pass_events
    return LoginSession(
        username_claim=username,
        events=events,
        username_span=FieldSpan(0, len(user_events) - 1),
        password_span=FieldSpan(len(user_events), len(events) - 1),
        context=context,
    )


def simulate_training(
    model: TypistModel,
    username: str,
    password: str,
    n: int,
    *,
    context: SessionContext = DEFAULT_CONTEXT,
) -> list[LoginSession]:
    """n independent sessions from one typist, seeded off the model."""
    rng = model.rng()
    return [
        simulate_session(model, username, password, rng, context=context)
        for _ in range(n)
    ]
