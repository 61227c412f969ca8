"""Replay defense and component trust primitives.

Replay: every state-changing client request (enroll, verify, edge attest)
must carry a server-issued single-use nonce bound to the username, expiring
after the configured TTL. Consumption is an atomic check-and-set, so across
any interleaving of concurrent requests a token authorizes at most one.

Trust between components: edge terminals share a 256-bit secret with the
server and authenticate decisions with HMAC-SHA256 over the exact byte
string ``terminal_id 0x00 username 0x00 decision 0x00 nonce`` (fields
UTF-8 encoded, separated by single zero bytes). Comparison is constant-time
via hmac.compare_digest. Test vectors live in docs/security.md.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
import time
from dataclasses import dataclass

from .errors import BadMac, NonceExpired, NonceUnknown, ReplayDetected, UnknownTerminal


@dataclass
class Nonce:
    token: str
    username: str
    issued_at: float
    ttl: float
    used: bool = False

    @property
    def expires_at(self) -> float:
        return self.issued_at + self.ttl


class NonceStore:
    """In-memory single-use token table shared across request handlers."""

    def __init__(self, clock=None):
        self._clock = clock or time.time
        self._lock = threading.Lock()
        self._nonces: dict[str, Nonce] = {}

    def issue(self, username: str, ttl: float) -> Nonce:
        nonce = Nonce(
            token=secrets.token_hex(16),
            username=username,
            issued_at=self._clock(),
            ttl=ttl,
        )
        with self._lock:
            self._nonces[nonce.token] = nonce
        return nonce

    def consume(self, token, username: str) -> None:
        """Mark the token used; exactly one consume per token ever succeeds."""
        if not isinstance(token, str):
            raise NonceUnknown("nonce must be a string token")
        now = self._clock()
        with self._lock:
            nonce = self._nonces.get(token)
            if nonce is None or nonce.username != username:
                raise NonceUnknown()
            if nonce.used:
                raise ReplayDetected("nonce already spent")
            if now > nonce.expires_at:
                raise NonceExpired()
            nonce.used = True

    def sweep(self) -> int:
        """Drop expired and spent tokens; safe to run at any time."""
        now = self._clock()
        with self._lock:
            dead = [t for t, n in self._nonces.items() if n.used or now > n.expires_at]
            for t in dead:
                del self._nonces[t]
        return len(dead)

    def __len__(self) -> int:
        with self._lock:
            return len(self._nonces)


@dataclass(frozen=True)
class TerminalIdentity:
    terminal_id: str
    shared_secret: str  # 256-bit key, hex
    enabled: bool = True


def new_terminal_secret() -> str:
    return secrets.token_hex(32)


def attestation_message(terminal_id: str, username: str, decision: str, nonce: str) -> bytes:
    return b"\x00".join(
        part.encode("utf-8") for part in (terminal_id, username, decision, nonce)
    )


def attestation_mac(secret_hex: str, terminal_id: str, username: str, decision: str, nonce: str) -> str:
    msg = attestation_message(terminal_id, username, decision, nonce)
    return hmac.new(bytes.fromhex(secret_hex), msg, hashlib.sha256).hexdigest()


class TerminalRegistry:
    """Registered edge terminals and their shared secrets."""

    def __init__(self, terminals: dict[str, TerminalIdentity] | None = None):
        self._terminals = dict(terminals or {})
        self._lock = threading.Lock()

    @classmethod
    def from_doc(cls, doc: dict) -> "TerminalRegistry":
        terminals = {
            tid: TerminalIdentity(
                terminal_id=tid,
                shared_secret=entry["secret"],
                enabled=bool(entry.get("enabled", True)),
            )
            for tid, entry in doc.items()
        }
        return cls(terminals)

    def to_doc(self) -> dict:
        with self._lock:
            return {
                tid: {"secret": t.shared_secret, "enabled": t.enabled}
                for tid, t in self._terminals.items()
            }

    def register(self, terminal_id: str, secret_hex: str | None = None) -> TerminalIdentity:
        terminal = TerminalIdentity(terminal_id, secret_hex or new_terminal_secret())
        with self._lock:
            self._terminals[terminal_id] = terminal
        return terminal

    def verify_mac(self, terminal_id, username: str, decision: str, nonce, mac) -> None:
        """Constant-time attestation check for a registered, enabled terminal."""
        with self._lock:
            terminal = self._terminals.get(terminal_id)
        if terminal is None or not terminal.enabled:
            raise UnknownTerminal()
        if not isinstance(mac, str) or not isinstance(nonce, str):
            raise BadMac("mac and nonce must be hex strings")
        expected = attestation_mac(terminal.shared_secret, terminal_id, username, decision, nonce)
        if not hmac.compare_digest(expected, mac.lower()):
            raise BadMac()
