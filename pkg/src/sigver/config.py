"""Server configuration: storage locations, policy knobs, and transport settings."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from .errors import InvalidConfig

UPDATE_RULES = ("none", "replace_oldest")


@dataclass(frozen=True)
class SystemConfig:
    data_dir: str = "data"
    log_path: str = ""  # empty -> <data_dir>/transactions.log
    max_failures: int = 5
    accept_threshold: float = 1.6
    update_rule: str = "replace_oldest"
    enroll_count: int = 5
    session_split: int = 3
    min_session_gap: float = 0.0  # seconds; production profile uses 86400
    bind_address: str = "127.0.0.1:8420"
    nonce_ttl: float = 120.0
    attended_enrollment: bool = False


def validate_config(cfg: SystemConfig) -> SystemConfig:
    if cfg.max_failures < 1:
        raise InvalidConfig("max_failures must be >= 1")
    if cfg.enroll_count < 2:
        raise InvalidConfig("enroll_count must be >= 2")
    if not 1 <= cfg.session_split < cfg.enroll_count:
        raise InvalidConfig("session_split must satisfy 1 <= s1 < enroll_count")
    if cfg.accept_threshold <= 0:
        raise InvalidConfig("accept_threshold must be positive")
    if cfg.update_rule not in UPDATE_RULES:
        raise InvalidConfig(f"update_rule must be one of {UPDATE_RULES}")
    if cfg.min_session_gap < 0:
        raise InvalidConfig("min_session_gap must be >= 0")
    if cfg.nonce_ttl <= 0:
        raise InvalidConfig("nonce_ttl must be positive")
    if not cfg.data_dir:
        raise InvalidConfig("data_dir must be set")
    host, _, port = cfg.bind_address.rpartition(":")
    if not host or not port.isdigit() or not 0 < int(port) < 65536:
        raise InvalidConfig(f"bind_address must be host:port, got {cfg.bind_address!r}")
    return cfg


def config_to_dict(cfg: SystemConfig) -> dict:
    return asdict(cfg)


def config_from_dict(doc: dict) -> SystemConfig:
    return apply_delta(SystemConfig(), doc)


def apply_delta(cfg: SystemConfig, delta: dict) -> SystemConfig:
    """Merge a partial config dict into cfg, validating names, types, and invariants."""
    if not isinstance(delta, dict):
        raise InvalidConfig("config delta must be an object")
    known = {f.name: f.type for f in fields(SystemConfig)}
    clean = {}
    for key, value in delta.items():
        if key not in known:
            raise InvalidConfig(f"unknown config field {key!r}")
        current = getattr(cfg, key)
        if isinstance(current, bool):
            if not isinstance(value, bool):
                raise InvalidConfig(f"{key} must be a boolean")
        elif isinstance(current, int):
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvalidConfig(f"{key} must be an integer")
        elif isinstance(current, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidConfig(f"{key} must be a number")
            value = float(value)
        elif isinstance(current, str):
            if not isinstance(value, str):
                raise InvalidConfig(f"{key} must be a string")
        clean[key] = value
    return validate_config(replace(cfg, **clean))
