"""Two-session enrollment lifecycle.

A user is authorized by an administrator, receives a single-presentation
temporary password, and then submits enroll_count signatures split over two
sessions (default 3 + 2) separated by at least min_session_gap seconds.
Completing the second session builds the user model and invalidates the
temporary password. Phases move along a single path::

    authorized -> session1 -> await_session2 -> session2 -> enrolled

Callers serialize access per username; this module holds no locks.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
from dataclasses import dataclass, field

import numpy as np

from . import matching
from .errors import AlreadyEnrolled, BadTempPassword, SessionGapNotElapsed

PHASE_AUTHORIZED = "authorized"
PHASE_SESSION1 = "session1"
PHASE_AWAIT_SESSION2 = "await_session2"
PHASE_SESSION2 = "session2"
PHASE_ENROLLED = "enrolled"
PHASES = (PHASE_AUTHORIZED, PHASE_SESSION1, PHASE_AWAIT_SESSION2, PHASE_SESSION2, PHASE_ENROLLED)

_PBKDF2_ITERATIONS = 10_000


def new_temp_password() -> str:
    """128-bit random temporary password, presented once."""
    return secrets.token_hex(16)


def hash_password(password: str, salt: bytes | None = None) -> dict:
    salt = salt if salt is not None else secrets.token_bytes(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode(), salt, _PBKDF2_ITERATIONS)
    return {"salt": salt.hex(), "hash": digest.hex()}


def check_password(stored: dict, password: str) -> bool:
    digest = hashlib.pbkdf2_hmac(
        "sha256", password.encode(), bytes.fromhex(stored["salt"]), _PBKDF2_ITERATIONS
    )
    return hmac.compare_digest(digest.hex(), stored["hash"])


@dataclass
class EnrollmentState:
    r: int = 5
    s1: int = 3
    phase: str = PHASE_AUTHORIZED
    temp_password_hash: dict | None = None
    samples: list[np.ndarray] = field(default_factory=list)
    session_labels: list[int] = field(default_factory=list)
    session1_done_at: float | None = None
    collected: int = 0  # stays at r after enrollment even though samples move into the model

    @property
    def remaining(self) -> int:
        return self.r - self.collected

    def progress(self) -> dict:
        return {
            "phase": self.phase,
            "collected": self.collected,
            "remaining": self.remaining,
            "enrolled": self.phase == PHASE_ENROLLED,
        }


def begin_enrollment(r: int, s1: int) -> tuple[EnrollmentState, str]:
    """Fresh authorized state plus the one-time temporary password."""
    password = new_temp_password()
    state = EnrollmentState(r=r, s1=s1, temp_password_hash=hash_password(password))
    return state, password


def authenticate(state: EnrollmentState, temp_password: str) -> None:
    """Check the temporary password; always fails once enrolled (hash erased)."""
    if state.temp_password_hash is None or not check_password(
        state.temp_password_hash, temp_password
    ):
        raise BadTempPassword()


def add_sample(
    state: EnrollmentState,
    features: np.ndarray,
    now: float,
    min_session_gap: float,
) -> matching.UserModel | None:
    """Accept one enrollment sample, advancing the phase in place.

    Returns the built UserModel when this sample completes enrollment,
    else None. Caller must have already authenticated the temp password
    and featurized the sample.
    """
    if state.phase == PHASE_ENROLLED:
        raise AlreadyEnrolled()
    if state.phase == PHASE_AWAIT_SESSION2:
        elapsed = now - (state.session1_done_at or 0.0)
        if elapsed < min_session_gap:
            wait = min_session_gap - elapsed
            raise SessionGapNotElapsed(f"second session opens in {wait:.0f} s")
        state.phase = PHASE_SESSION2

    if state.phase == PHASE_AUTHORIZED:
        state.phase = PHASE_SESSION1
    session = 1 if state.phase == PHASE_SESSION1 else 2
    state.samples.append(np.asarray(features, dtype=np.float64))
    state.session_labels.append(session)
    state.collected += 1

    if state.phase == PHASE_SESSION1 and state.collected >= state.s1:
        state.phase = PHASE_AWAIT_SESSION2
        state.session1_done_at = now
    if state.collected >= state.r:
        state.phase = PHASE_ENROLLED
        state.temp_password_hash = None
        model = matching.build_model(state.samples, r=state.r, now=now)
        state.samples = []
        state.session_labels = []
        return model
    return None


def state_to_dict(state: EnrollmentState) -> dict:
    return {
        "r": state.r,
        "s1": state.s1,
        "phase": state.phase,
        "temp_password_hash": state.temp_password_hash,
        "samples": [s.tolist() for s in state.samples],
        "session_labels": list(state.session_labels),
        "session1_done_at": state.session1_done_at,
        "collected": state.collected,
    }


def state_from_dict(doc: dict) -> EnrollmentState:
    return EnrollmentState(
        r=int(doc["r"]),
        s1=int(doc["s1"]),
        phase=doc["phase"],
        temp_password_hash=doc["temp_password_hash"],
        samples=[np.asarray(s, dtype=np.float64) for s in doc["samples"]],
        session_labels=[int(v) for v in doc["session_labels"]],
        session1_done_at=doc["session1_done_at"],
        collected=int(doc["collected"]),
    )
