"""The verification server's domain logic, independent of transport.

AccessService owns user records, models, configuration, the nonce table,
the terminal registry, and the transaction log. The HTTP layer (api.py) is
a thin adapter over these methods.

Guarantees:
  * every public operation appends exactly one TransactionRecord, on
    success and on every error path;
  * all mutations for one username are serialized behind a per-user lock,
    and persisted before the operation returns;
  * configuration updates are atomic snapshots: requests read one
    consistent SystemConfig;
  * a blocked user is rejected before any matching happens, so no record
    for a blocked user ever carries a score.
"""

from __future__ import annotations

import hmac
import threading
import time
from pathlib import Path

from . import enroll, matching, signals
from .config import SystemConfig, apply_delta, config_from_dict, config_to_dict, validate_config
from .errors import (
    AlreadyEnrolled,
    BadMac,
    DuplicateUser,
    InvalidConfig,
    InvalidUsername,
    MalformedRequest,
    NotAdmin,
    NotBlocked,
    NotEnrolled,
    ReplayDetected,
    SigverError,
    UnknownTerminal,
    UnknownUser,
    UserBlocked,
)
from .security import NonceStore, TerminalRegistry
from .store import DataStore, UserRecord, valid_username


class AccessService:
    def __init__(
        self,
        config: SystemConfig,
        admin_token: str,
        clock=None,
        score_fn=None,
        featurize_fn=None,
    ):
        if not admin_token:
            raise InvalidConfig("admin token must be set (ADMIN_TOKEN)")
        self._clock = clock or time.time
        self._admin_token = admin_token
        # matcher/featurizer are injectable so the attack harness can plant
        # trojan doubles; production always uses the real pipeline
        self._score_fn = score_fn or matching.score
        self._featurize_fn = featurize_fn or signals.sample_to_features

        data_dir = Path(config.data_dir)
        persisted = self._read_persisted_config(data_dir)
        if persisted is not None:
            cfg = config_from_dict({**persisted, "data_dir": str(data_dir)})
        else:
            cfg = config
        self._cfg = validate_config(cfg)

        self._store = DataStore(data_dir, self._cfg.log_path or None, clock=self._clock)
        if persisted is None:
            self._store.save_config_dict(config_to_dict(self._cfg))
        self._users = self._store.load_users()
        self._terminals = TerminalRegistry.from_doc(self._store.load_terminals())
        self._nonces = NonceStore(clock=self._clock)

        self._registry_lock = threading.Lock()
        self._user_locks: dict[str, threading.Lock] = {}

    @staticmethod
    def _read_persisted_config(data_dir: Path) -> dict | None:
        path = data_dir / "config.json"
        if not path.exists():
            return None
        from .store import load_json

        return load_json(path)

    # ------------------------------------------------------------------
    # plumbing

    @property
    def config(self) -> SystemConfig:
        return self._cfg

    @property
    def transaction_log(self):
        return self._store.log

    def close(self) -> None:
        self._store.close()

    def _lock_for(self, username) -> threading.Lock:
        if not isinstance(username, str):
            raise UnknownUser()
        with self._registry_lock:
            lock = self._user_locks.get(username)
            if lock is None:
                lock = self._user_locks[username] = threading.Lock()
            return lock

    def _require_admin(self, token) -> None:
        if not isinstance(token, str) or not hmac.compare_digest(token, self._admin_token):
            raise NotAdmin()

    def _get_user(self, username) -> UserRecord:
        rec = self._users.get(username) if isinstance(username, str) else None
        if rec is None:
            raise UnknownUser()
        return rec

    def _run(self, kind: str, username, fn):
        """Execute fn, translating its outcome into exactly one log record.

        fn returns (kind, outcome, normalized_score, detail, result).
        """
        uname = username if isinstance(username, str) and username else "-"
        log = self._store.log
        try:
            final_kind, outcome, score, detail, result = fn()
        except ReplayDetected as e:
            log.append("attack_detected", uname, "replay", detail=f"{kind}: {e.code}")
            raise
        except (BadMac, UnknownTerminal) as e:
            log.append("attack_detected", uname, "error", detail=f"{kind}: {e.code}")
            raise
        except UserBlocked as e:
            log.append(kind, uname, "blocked", detail=e.code)
            raise
        except SigverError as e:
            log.append(kind, uname, "error", detail=e.detail and f"{e.code}: {e.detail}" or e.code)
            raise
        except Exception as e:
            log.append(kind, uname, "error", detail=f"internal: {e!r}")
            raise
        log.append(final_kind, uname, outcome, score, detail)
        return result

    def note_bad_request(self, kind: str, username, detail: str) -> None:
        """Log a routed request whose body never made it to a service call."""
        uname = username if isinstance(username, str) and username else "-"
        self._store.log.append(kind, uname, "error", detail=detail)

    # ------------------------------------------------------------------
    # enrollment

    def authorize_user(self, admin_token, username, display_name: str = "") -> dict:
        def inner():
            self._require_admin(admin_token)
            if not valid_username(username):
                raise InvalidUsername(f"{username!r}")
            cfg = self._cfg
            with self._lock_for(username):
                if username in self._users:
                    raise DuplicateUser(username)
                state, password = enroll.begin_enrollment(cfg.enroll_count, cfg.session_split)
                rec = UserRecord(
                    username=username,
                    display_name=display_name or username,
                    enrollment=state,
                )
                self._users[username] = rec
                self._store.save_user(rec)
            result = {"username": username, "temp_password": password}
            return ("authorize", "accept", None, "user authorized", result)

        return self._run("authorize", username, inner)

    def enrollment_status(self, username) -> dict:
        def inner():
            rec = self._get_user(username)
            return ("enroll_sample", "accept", None, "status query", rec.enrollment.progress())

        return self._run("enroll_sample", username, inner)

    def submit_enrollment_sample(
        self, username, temp_password, sample_wire, nonce, admin_token=None
    ) -> dict:
        def inner():
            cfg = self._cfg
            with self._lock_for(username):
                rec = self._get_user(username)
                if cfg.attended_enrollment:
                    self._require_admin(admin_token)
                if rec.enrollment.phase == enroll.PHASE_ENROLLED:
                    raise AlreadyEnrolled()
                enroll.authenticate(rec.enrollment, temp_password)
                self._nonces.consume(nonce, username)
                sample = signals.parse_sample(sample_wire)
                features = self._featurize_fn(sample)
                model = enroll.add_sample(
                    rec.enrollment, features, self._clock(), cfg.min_session_gap
                )
                if model is not None:
                    rec.model = model
                self._store.save_user(rec)
                progress = rec.enrollment.progress()
            kind = "enroll_complete" if progress["enrolled"] else "enroll_sample"
            detail = f"sample {progress['collected']}/{rec.enrollment.r}"
            if model is not None:
                # signature-consistency signal for the operator: a wide spread
                # relative to the mean marks an easy-to-imitate enrollment
                detail += f"; ref spread mu={model.mu_ref:.4f} sigma={model.sigma_ref:.4f}"
            return (kind, "accept", None, detail, progress)

        return self._run("enroll_sample", username, inner)

    # ------------------------------------------------------------------
    # challenge / verify

    def issue_challenge(self, username) -> dict:
        def inner():
            self._get_user(username)
            if len(self._nonces) > 1000:
                self._nonces.sweep()
            nonce = self._nonces.issue(username, self._cfg.nonce_ttl)
            result = {"nonce": nonce.token, "expires_at": nonce.expires_at}
            return ("challenge", "accept", None, "nonce issued", result)

        return self._run("challenge", username, inner)

    def verify(self, username, sample_wire, nonce) -> dict:
        def inner():
            cfg = self._cfg
            with self._lock_for(username):
                rec = self._get_user(username)
                if rec.enrollment.phase != enroll.PHASE_ENROLLED or rec.model is None:
                    raise NotEnrolled()
                if rec.blocked:
                    raise UserBlocked()
                self._nonces.consume(nonce, username)
                sample = signals.parse_sample(sample_wire)
                features = self._featurize_fn(sample)
                ms = self._score_fn(rec.model, features, cfg.accept_threshold)
                now = self._clock()
                if ms.accepted:
                    rec.consecutive_failures = 0
                    rec.last_success_at = now
                    if cfg.update_rule == "replace_oldest":
                        rec.model = matching.update_model(rec.model, features, now)
                else:
                    rec.consecutive_failures += 1
                    if rec.consecutive_failures >= cfg.max_failures:
                        rec.blocked = True
                self._store.save_user(rec)
                outcome = "accept" if ms.accepted else "reject"
                detail = "blocked now" if (not ms.accepted and rec.blocked) else ""
                result = {"accepted": ms.accepted, "score": ms.normalized}
            return ("verify", outcome, ms.normalized, detail, result)

        return self._run("verify", username, inner)

    def edge_attest(self, terminal_id, username, decision, nonce, mac) -> dict:
        def inner():
            if decision not in ("accept", "reject"):
                raise MalformedRequest("decision must be 'accept' or 'reject'")
            self._terminals.verify_mac(terminal_id, username, decision, nonce, mac)
            cfg = self._cfg
            with self._lock_for(username):
                rec = self._get_user(username)
                self._nonces.consume(nonce, username)
                now = self._clock()
                if rec.blocked:
                    outcome = "blocked"
                elif decision == "accept":
                    rec.consecutive_failures = 0
                    rec.last_success_at = now
                    outcome = "accept"
                else:
                    rec.consecutive_failures += 1
                    if rec.consecutive_failures >= cfg.max_failures:
                        rec.blocked = True
                    outcome = "reject"
                self._store.save_user(rec)
                result = {
                    "recorded": decision,
                    "blocked": rec.blocked,
                    "consecutive_failures": rec.consecutive_failures,
                }
            detail = f"terminal={terminal_id}"
            return ("edge_attest", outcome, None, detail, result)

        return self._run("edge_attest", username, inner)

    # ------------------------------------------------------------------
    # administration

    def admin_list_users(self, admin_token) -> list[dict]:
        def inner():
            self._require_admin(admin_token)
            with self._registry_lock:
                names = sorted(self._users)
            listing = [self._users[name].summary() for name in names]
            return ("admin", "accept", None, "list users", listing)

        return self._run("admin", None, inner)

    def admin_unblock(self, admin_token, username) -> dict:
        def inner():
            self._require_admin(admin_token)
            with self._lock_for(username):
                rec = self._get_user(username)
                if not rec.blocked:
                    raise NotBlocked(username)
                rec.blocked = False
                rec.consecutive_failures = 0
                self._store.save_user(rec)
                result = rec.summary()
            return ("admin", "accept", None, "unblock", result)

        return self._run("admin", username, inner)

    def get_config(self, admin_token) -> dict:
        def inner():
            self._require_admin(admin_token)
            return ("admin", "accept", None, "get config", config_to_dict(self._cfg))

        return self._run("admin", None, inner)

    def set_config(self, admin_token, delta) -> dict:
        def inner():
            self._require_admin(admin_token)
            if not isinstance(delta, dict):
                raise InvalidConfig("config delta must be an object")
            if "data_dir" in delta and delta["data_dir"] != self._cfg.data_dir:
                raise InvalidConfig("data_dir cannot change at runtime; move the store and restart")
            cfg = apply_delta(self._cfg, delta)
            self._store.save_config_dict(config_to_dict(cfg))
            self._cfg = cfg
            detail = "set " + ",".join(sorted(delta)) if delta else "set (empty)"
            return ("admin", "accept", None, detail, config_to_dict(cfg))

        return self._run("admin", None, inner)

    def read_transactions(self, admin_token, last_n: int = 50) -> list[dict]:
        def inner():
            self._require_admin(admin_token)
            records = [rec.to_dict() for rec in self._store.log.tail(last_n)]
            return ("admin", "accept", None, f"read last {last_n}", records)

        return self._run("admin", None, inner)

    # ------------------------------------------------------------------
    # terminal provisioning (in-process/file only; not an HTTP endpoint)

    def register_terminal(self, admin_token, terminal_id, secret_hex=None) -> dict:
        def inner():
            self._require_admin(admin_token)
            if not valid_username(terminal_id):
                raise InvalidUsername(f"terminal id {terminal_id!r}")
            terminal = self._terminals.register(terminal_id, secret_hex)
            self._store.save_terminals(self._terminals.to_doc())
            result = {"terminal_id": terminal.terminal_id, "secret": terminal.shared_secret}
            return ("admin", "accept", None, f"register terminal {terminal_id}", result)

        return self._run("admin", None, inner)
