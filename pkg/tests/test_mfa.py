"""Challenge issuance, verification state machine, and outbox delivery."""

from __future__ import annotations

import random

import pytest

from keydyn.anomaly import OutlierDegree, RiskAssessment
from keydyn.errors import (
    ChallengeClosedError,
    ChallengeKindError,
    UnknownChallengeError,
)
from keydyn.mfa import (
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


def assessment_with(degree: OutlierDegree) -> RiskAssessment:
    return RiskAssessment(global_pass=True, degree=degree, recluster_k=1)


# -- decision mapping --------------------------------------------------------


@pytest.mark.parametrize(
    "degree, decision",
    [
        (OutlierDegree.NORMAL, Decision.GRANT),
        (OutlierDegree.FIRST_DEGREE, Decision.CHALLENGE_OTP),
        (OutlierDegree.SECOND_DEGREE, Decision.CHALLENGE_OOB),
    ],
)
def test_decide_maps_degree_to_action(degree, decision):
    assert decide(assessment_with(degree)) is decision


# -- OTP lifecycle -----------------------------------------------------------


def test_issue_otp_shape():
    c = issue_otp("ada", now=1000.0, rng=random.Random(0))
    assert c.kind is ChallengeKind.OTP
    assert len(c.secret) == 6 and c.secret.isdigit()
    assert c.issued_at == 1000.0
    assert c.expires_at == 1000.0 + 300_000
    assert c.attempts_left == 3
    assert c.state is ChallengeState.PENDING
    assert not c.closed


def test_issue_otp_is_seed_deterministic():
    a = issue_otp("ada", now=0.0, rng=random.Random(99))
    b = issue_otp("ada", now=0.0, rng=random.Random(99))
    assert a.secret == b.secret
    assert a.id != b.id  # ids stay unique regardless of the rng


def test_otp_pads_to_six_digits():
    class SmallRng(random.Random):
        def randrange(self, *_args, **_kwargs):
            return 7

    c = issue_otp("ada", now=0.0, rng=SmallRng())
    assert c.secret == "000007"


def test_verify_otp_success():
    c = issue_otp("ada", now=0.0, rng=random.Random(1))
    verify_otp(c, c.secret, now=10.0)
    assert c.state is ChallengeState.VERIFIED
    assert c.closed


def test_verify_otp_wrong_code_consumes_attempts():
    c = issue_otp("ada", now=0.0, rng=random.Random(1))
    verify_otp(c, "000000" if c.secret != "000000" else "111111", now=1.0)
    assert c.state is ChallengeState.PENDING
    assert c.attempts_left == 2
    verify_otp(c, "999999" if c.secret != "999999" else "111111", now=2.0)
    assert c.attempts_left == 1
    verify_otp(c, "888888" if c.secret != "888888" else "111111", now=3.0)
    assert c.attempts_left == 0
    assert c.state is ChallengeState.FAILED


def test_verify_otp_after_terminal_state_raises():
    c = issue_otp("ada", now=0.0, rng=random.Random(1))
    verify_otp(c, c.secret, now=1.0)
    with pytest.raises(ChallengeClosedError):
        verify_otp(c, c.secret, now=2.0)


def test_verify_otp_expiry():
    c = issue_otp("ada", now=0.0, rng=random.Random(1), ttl_ms=1000)
    verify_otp(c, c.secret, now=1001.0)
    assert c.state is ChallengeState.EXPIRED
    # Even the correct code cannot revive an expired challenge.
    with pytest.raises(ChallengeClosedError):
        verify_otp(c, c.secret, now=1002.0)


def test_verify_otp_at_exact_expiry_still_counts():
    c = issue_otp("ada", now=0.0, rng=random.Random(1), ttl_ms=1000)
    verify_otp(c, c.secret, now=1000.0)
    assert c.state is ChallengeState.VERIFIED


def test_custom_attempt_budget():
    c = issue_otp("ada", now=0.0, rng=random.Random(1), attempts=1)
    verify_otp(c, "000000" if c.secret != "000000" else "111111", now=1.0)
    assert c.state is ChallengeState.FAILED


# -- OOB lifecycle -----------------------------------------------------------


def test_issue_oob_shape():
    c = issue_oob("ada", now=5.0, rng=random.Random(2))
    assert c.kind is ChallengeKind.OOB
    assert len(c.secret) == 32
    int(c.secret, 16)  # hex-encoded 128-bit token
    assert c.attempts_left == 1


def test_approve_oob_success():
    c = issue_oob("ada", now=0.0, rng=random.Random(2))
    approve_oob(c, c.secret, now=1.0)
    assert c.state is ChallengeState.VERIFIED


def test_approve_oob_single_shot_failure():
    c = issue_oob("ada", now=0.0, rng=random.Random(2))
    approve_oob(c, "deadbeef" * 4, now=1.0)
    assert c.state is ChallengeState.FAILED
    with pytest.raises(ChallengeClosedError):
        approve_oob(c, c.secret, now=2.0)


def test_approve_oob_expiry():
    c = issue_oob("ada", now=0.0, rng=random.Random(2), ttl_ms=100)
    approve_oob(c, c.secret, now=101.0)
    assert c.state is ChallengeState.EXPIRED


def test_kind_mismatch_rejected_without_state_change():
    c = issue_oob("ada", now=0.0, rng=random.Random(2))
    with pytest.raises(ChallengeKindError):
        verify_otp(c, "123456", now=1.0)
    assert c.state is ChallengeState.PENDING
    otp = issue_otp("ada", now=0.0, rng=random.Random(2))
    with pytest.raises(ChallengeKindError):
        approve_oob(otp, otp.secret, now=1.0)


# -- delivery ----------------------------------------------------------------


def test_outbox_notifier_line_format(tmp_path):
    path = tmp_path / "outbox.log"
    notifier = OutboxNotifier(str(path))
    c = issue_otp("ada", now=1234.0, rng=random.Random(3), notifier=notifier)
    line = path.read_text(encoding="utf-8").splitlines()[-1]
    ts, kind, user, payload = line.split(" ", 3)
    assert ts == "1234"
    assert kind == "otp"
    assert user == "ada"
    assert payload == c.secret


def test_oob_delivery_carries_approval_url(tmp_path):
    path = tmp_path / "outbox.log"
    c = issue_oob(
        "ada", now=0.0, rng=random.Random(3), notifier=OutboxNotifier(str(path))
    )
    payload = path.read_text(encoding="utf-8").splitlines()[-1].split(" ", 3)[3]
    assert payload == f"/v1/challenge/{c.id}/oob?token={c.secret}"


def test_outbox_appends_across_deliveries(tmp_path):
    path = tmp_path / "outbox.log"
    notifier = OutboxNotifier(str(path))
    issue_otp("ada", now=0.0, rng=random.Random(4), notifier=notifier)
    issue_oob("bee", now=1.0, rng=random.Random(4), notifier=notifier)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    assert lines[0].split(" ", 3)[1:3] == ["otp", "ada"]
    assert lines[1].split(" ", 3)[1:3] == ["oob", "bee"]


def test_delivery_failure_does_not_block_issuance():
    def broken_notifier(ts, kind, user, payload):
        raise IOError("sms gateway down")

    c = issue_otp("ada", now=0.0, rng=random.Random(5), notifier=broken_notifier)
    assert c.state is ChallengeState.PENDING
    assert c.delivery_error == "sms gateway down"
    # The challenge is still answerable.
    verify_otp(c, c.secret, now=1.0)
    assert c.state is ChallengeState.VERIFIED


# -- registry ----------------------------------------------------------------


def test_registry_round_trip():
    registry = ChallengeRegistry(rng=random.Random(6))
    c = registry.issue_otp("ada", now=0.0)
    assert registry.get(c.id) is c
    out = registry.verify_otp(c.id, c.secret, now=1.0)
    assert out.state is ChallengeState.VERIFIED


def test_registry_oob_round_trip():
    registry = ChallengeRegistry(rng=random.Random(6))
    c = registry.issue_oob("ada", now=0.0)
    out = registry.approve_oob(c.id, c.secret, now=1.0)
    assert out.state is ChallengeState.VERIFIED


def test_registry_unknown_challenge():
    registry = ChallengeRegistry(rng=random.Random(6))
    with pytest.raises(UnknownChallengeError):
        registry.get("nope")
    with pytest.raises(UnknownChallengeError):
        registry.verify_otp("nope", "123456", now=0.0)
    with pytest.raises(UnknownChallengeError):
        registry.approve_oob("nope", "deadbeef", now=0.0)


def test_registry_applies_configured_ttl_and_attempts():
    registry = ChallengeRegistry(
        rng=random.Random(6), otp_ttl_ms=50, otp_attempts=1, oob_ttl_ms=75
    )
    otp = registry.issue_otp("ada", now=0.0)
    assert otp.expires_at == 50.0
    assert otp.attempts_left == 1
    oob = registry.issue_oob("ada", now=0.0)
    assert oob.expires_at == 75.0


def test_challenge_ids_are_unique():
    registry = ChallengeRegistry(rng=random.Random(7))
    ids = {registry.issue_otp("ada", now=0.0).id for _ in range(50)}
    assert len(ids) == 50
