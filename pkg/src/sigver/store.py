"""On-disk state: per-user documents, terminal registry, and the transaction log.

Layout under data_dir::

    config.json          current SystemConfig (rewritten atomically)
    terminals.json       terminal_id -> {secret, enabled}
    users/<name>.json    one document per user (record + enrollment + model)
    transactions.log     append-only, one JSON record per line (or log_path)

Documents are written with os.replace for atomicity; any file that fails to
load raises CorruptStore naming the file so the server refuses to start
rather than running on partial state.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from . import enroll, matching
from .errors import CorruptStore

TRANSACTION_KINDS = (
    "authorize",
    "enroll_sample",
    "enroll_complete",
    "challenge",
    "verify",
    "admin",
    "attack_detected",
    "edge_attest",
)
TRANSACTION_OUTCOMES = ("accept", "reject", "error", "blocked", "replay")

USERNAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]{0,63}$")


def valid_username(username) -> bool:
    """Usernames become file names; keep them path-safe."""
    return isinstance(username, str) and bool(USERNAME_RE.match(username))


@dataclass
class UserRecord:
    username: str
    display_name: str = ""
    enrollment: enroll.EnrollmentState = field(default_factory=enroll.EnrollmentState)
    model: matching.UserModel | None = None
    last_success_at: float | None = None
    consecutive_failures: int = 0
    blocked: bool = False

    def summary(self) -> dict:
        """The admin-facing listing: the four management fields plus phase."""
        return {
            "username": self.username,
            "display_name": self.display_name,
            "phase": self.enrollment.phase,
            "last_success_at": self.last_success_at,
            "consecutive_failures": self.consecutive_failures,
            "blocked": self.blocked,
        }


def user_to_dict(rec: UserRecord) -> dict:
    return {
        "username": rec.username,
        "display_name": rec.display_name,
        "enrollment": enroll.state_to_dict(rec.enrollment),
        "model": matching.model_to_dict(rec.model) if rec.model else None,
        "last_success_at": rec.last_success_at,
        "consecutive_failures": rec.consecutive_failures,
        "blocked": rec.blocked,
    }


def user_from_dict(doc: dict) -> UserRecord:
    return UserRecord(
        username=doc["username"],
        display_name=doc.get("display_name", ""),
        enrollment=enroll.state_from_dict(doc["enrollment"]),
        model=matching.model_from_dict(doc["model"]) if doc.get("model") else None,
        last_success_at=doc["last_success_at"],
        consecutive_failures=int(doc["consecutive_failures"]),
        blocked=bool(doc["blocked"]),
    )


@dataclass(frozen=True)
class TransactionRecord:
    seq: int
    timestamp: float
    username: str
    kind: str
    outcome: str
    normalized_score: float | None
    detail: str

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "username": self.username,
            "kind": self.kind,
            "outcome": self.outcome,
            "normalized_score": self.normalized_score,
            "detail": self.detail,
        }


def atomic_write_json(path: Path, doc: dict) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")
    os.replace(tmp, path)


def load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise CorruptStore(f"{path}: {e}") from e


class TransactionLog:
    """Append-only audit log: one UTF-8 JSON line per record, strictly increasing seq."""

    def __init__(self, path: Path, clock=None):
        import time

        self._path = Path(path)
        self._clock = clock or time.time
        self._lock = threading.Lock()
        self._records: list[TransactionRecord] = []
        self._seq = 0
        if self._path.exists():
            self._load()
        else:
            self._path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self._path, "a", encoding="utf-8")

    def _load(self) -> None:
        with open(self._path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    doc = json.loads(line)
                    rec = TransactionRecord(
                        seq=int(doc["seq"]),
                        timestamp=float(doc["timestamp"]),
                        username=doc["username"],
                        kind=doc["kind"],
                        outcome=doc["outcome"],
                        normalized_score=doc["normalized_score"],
                        detail=doc["detail"],
                    )
                except (ValueError, KeyError, TypeError) as e:
                    raise CorruptStore(f"{self._path}:{lineno}: {e}") from e
                if rec.seq <= self._seq:
                    raise CorruptStore(f"{self._path}:{lineno}: seq not increasing")
                self._records.append(rec)
                self._seq = rec.seq

    def append(
        self,
        kind: str,
        username: str,
        outcome: str,
        normalized_score: float | None = None,
        detail: str = "",
    ) -> TransactionRecord:
        assert kind in TRANSACTION_KINDS, kind
        assert outcome in TRANSACTION_OUTCOMES, outcome
        with self._lock:
            self._seq += 1
            rec = TransactionRecord(
                seq=self._seq,
                timestamp=self._clock(),
                username=username or "-",
                kind=kind,
                outcome=outcome,
                normalized_score=normalized_score,
                detail=detail,
            )
            self._records.append(rec)
            self._fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
            self._fh.flush()
            return rec

    def tail(self, n: int) -> list[TransactionRecord]:
        with self._lock:
            if n <= 0:
                return []
            return list(self._records[-n:])

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def close(self) -> None:
        self._fh.close()


class DataStore:
    """Filesystem persistence for the verification server."""

    def __init__(self, data_dir, log_path=None, clock=None):
        self.data_dir = Path(data_dir)
        self.users_dir = self.data_dir / "users"
        self.users_dir.mkdir(parents=True, exist_ok=True)
        self.config_path = self.data_dir / "config.json"
        self.terminals_path = self.data_dir / "terminals.json"
        self.log = TransactionLog(
            Path(log_path) if log_path else self.data_dir / "transactions.log", clock=clock
        )

    # -- config --

    def load_config_dict(self) -> dict | None:
        if not self.config_path.exists():
            return None
        return load_json(self.config_path)

    def save_config_dict(self, doc: dict) -> None:
        atomic_write_json(self.config_path, doc)

    # -- users --

    def _user_path(self, username: str) -> Path:
        return self.users_dir / f"{username}.json"

    def load_users(self) -> dict[str, UserRecord]:
        users = {}
        for path in sorted(self.users_dir.glob("*.json")):
            doc = load_json(path)
            try:
                rec = user_from_dict(doc)
            except (KeyError, ValueError, TypeError) as e:
                raise CorruptStore(f"{path}: {e}") from e
            users[rec.username] = rec
        return users

    def save_user(self, rec: UserRecord) -> None:
        atomic_write_json(self._user_path(rec.username), user_to_dict(rec))

    # -- terminals --

    def load_terminals(self) -> dict[str, dict]:
        if not self.terminals_path.exists():
            return {}
        doc = load_json(self.terminals_path)
        if not isinstance(doc, dict):
            raise CorruptStore(f"{self.terminals_path}: expected an object")
        return doc

    def save_terminals(self, terminals: dict[str, dict]) -> None:
        atomic_write_json(self.terminals_path, terminals)

    def close(self) -> None:
        self.log.close()
