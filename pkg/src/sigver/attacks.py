"""Scripted attack scenarios against a running verification server.

The eight classic attack surfaces of a verification pipeline are: (1) the
scanner, (2) the scanner-to-feature-extractor channel, (3) the feature
extractor, (4) the extractor-to-matcher channel, (5) the matcher, (6) the
template database, (7) the database-to-matcher channel, and (8) the
matcher-to-application channel. Channel attacks (2, 4, 7, 8) are replays;
module attacks (1, 3, 5, 6) are rogue components.

What this harness can exercise:
  * replay at the network channel points: resubmit a previously accepted
    request byte-for-byte and expect the nonce layer to flag it;
  * rogue feature extractor / matcher (points 3, 5): only as in-process
    test doubles planted through a service factory; the report checks that
    the takeover is visible in logged score statistics (all scores equal)
    -- detection is observational, not preventive;
  * dos_flood: hammer the public channel, then require a control request
    to answer within a deadline derived from measured baseline latency;
  * sensor destruction (point 1): represented as connection refusal.

Database tampering (point 6) has no double here and is unsupported.
"""

from __future__ import annotations

import concurrent.futures
import json
import secrets
import time
from dataclasses import dataclass, field

import httpx

from . import matching, synth
from .errors import ScenarioUnsupported

REPLAY_POINTS = (2, 4, 7, 8)
TROJAN_POINTS = (3, 5)
KINDS = ("replay", "trojan_accept", "trojan_reject", "dos_flood", "sensor_destroy")


@dataclass(frozen=True)
class AttackScenario:
    attack_point: int
    kind: str
    script: tuple = ()

    def __post_init__(self):
        if not 1 <= self.attack_point <= 8:
            raise ValueError(f"attack_point must be in 1..8, got {self.attack_point}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")


@dataclass
class AttackReport:
    scenario: AttackScenario
    detected: bool
    log_entries_matched: int = 0
    notes: str = ""
    extra: dict = field(default_factory=dict)

    def summary(self) -> str:
        state = "detected" if self.detected else "NOT detected"
        return (
            f"attack point {self.scenario.attack_point} ({self.scenario.kind}): {state}; "
            f"{self.log_entries_matched} matching log entries; {self.notes}"
        )


def replay_scenario(point: int = 8) -> AttackScenario:
    return AttackScenario(
        attack_point=point,
        kind="replay",
        script=(
            {"op": "enroll_user"},
            {"op": "verify_genuine"},
            {"op": "replay_last_request"},
            {"op": "inspect_log"},
        ),
    )


def trojan_scenario(kind: str, point: int = 5) -> AttackScenario:
    return AttackScenario(
        attack_point=point,
        kind=kind,
        script=(
            {"op": "enroll_user"},
            {"op": "verify_many", "n": 10},
            {"op": "inspect_score_statistics"},
        ),
    )


def dos_flood_scenario(point: int = 8, n_requests: int = 1000) -> AttackScenario:
    return AttackScenario(
        attack_point=point,
        kind="dos_flood",
        script=(
            {"op": "measure_baseline", "n": 20},
            {"op": "flood", "n": n_requests, "concurrency": 32},
            {"op": "control_request", "deadline_factor": 5},
        ),
    )


def sensor_destroy_scenario() -> AttackScenario:
    return AttackScenario(
        attack_point=1,
        kind="sensor_destroy",
        script=({"op": "probe_connection"},),
    )


def run_attack_scenario(
    scenario: AttackScenario,
    server_url: str | None = None,
    admin_token: str | None = None,
    service_factory=None,
    seed: int = 20257,
) -> AttackReport:
    """Execute a scenario against a live server (test mode) or a service factory.

    Trojan scenarios need service_factory(score_fn) -> AccessService so the
    rogue module can be planted; they cannot be launched from outside.
    """
    if scenario.kind == "replay":
        if scenario.attack_point not in REPLAY_POINTS:
            raise ScenarioUnsupported(
                f"replay applies to channel points {REPLAY_POINTS}, not {scenario.attack_point}"
            )
        if not server_url:
            raise ScenarioUnsupported("replay needs a running server URL")
        return _run_replay(scenario, server_url, admin_token, seed)
    if scenario.kind in ("trojan_accept", "trojan_reject"):
        if scenario.attack_point not in TROJAN_POINTS:
            raise ScenarioUnsupported(
                f"trojan doubles exist for points {TROJAN_POINTS}, not {scenario.attack_point}"
            )
        if service_factory is None:
            raise ScenarioUnsupported(
                "interior trojan points are simulated via in-process test doubles only"
            )
        return _run_trojan(scenario, service_factory, seed)
    if scenario.kind == "dos_flood":
        if scenario.attack_point not in REPLAY_POINTS:
            raise ScenarioUnsupported("dos_flood targets the communication channel points")
        if not server_url:
            raise ScenarioUnsupported("dos_flood needs a running server URL")
        return _run_dos(scenario, server_url, admin_token, seed)
    if scenario.kind == "sensor_destroy":
        if not server_url:
            raise ScenarioUnsupported("sensor_destroy needs the (dead) sensor endpoint URL")
        return _run_sensor_destroy(scenario, server_url)
    raise ScenarioUnsupported(scenario.kind)


# ----------------------------------------------------------------------
# live-server helpers


class _Client:
    def __init__(self, server_url: str, admin_token: str | None):
        self.http = httpx.Client(base_url=server_url, timeout=30.0)
        self.admin = {"X-Admin-Token": admin_token or ""}

    def close(self):
        self.http.close()

    def enroll_fresh_user(self, seed: int) -> tuple[str, synth.WriterPool]:
        """Authorize and fully enroll a throwaway user; returns its name and writer."""
        username = f"attacksim{secrets.token_hex(4)}"
        pool = synth.WriterPool(seed, 1)
        cfg = self.http.get("/api/v1/admin/config", headers=self.admin)
        cfg.raise_for_status()
        cfg = cfg.json()
        if cfg["min_session_gap"] != 0:
            r = self.http.put(
                "/api/v1/admin/config", headers=self.admin, json={"min_session_gap": 0}
            )
            r.raise_for_status()
        r = self.http.post(
            "/api/v1/admin/authorize", headers=self.admin, json={"username": username}
        )
        r.raise_for_status()
        temp_password = r.json()["temp_password"]
        for _ in range(cfg["enroll_count"]):
            nonce = self.challenge(username)
            r = self.http.post(
                "/api/v1/enroll",
                json={
                    "username": username,
                    "temp_password": temp_password,
                    "sample": pool.genuine(0),
                    "nonce": nonce,
                },
            )
            r.raise_for_status()
        return username, pool

    def challenge(self, username: str) -> str:
        r = self.http.post("/api/v1/challenge", json={"username": username})
        r.raise_for_status()
        return r.json()["nonce"]


def _run_replay(scenario, server_url, admin_token, seed) -> AttackReport:
    client = _Client(server_url, admin_token)
    try:
        username, pool = client.enroll_fresh_user(seed)
        nonce = client.challenge(username)
        body = json.dumps(
            {"username": username, "sample": pool.genuine(0), "nonce": nonce}
        ).encode()
        headers = {"Content-Type": "application/json"}
        first = client.http.post("/api/v1/verify", content=body, headers=headers)
        replayed = client.http.post("/api/v1/verify", content=body, headers=headers)
        rejected = replayed.status_code == 409 and replayed.json().get("error") == "ReplayDetected"
        r = client.http.get(
            "/api/v1/admin/transactions", params={"last": 50}, headers=client.admin
        )
        r.raise_for_status()
        matched = [
            rec
            for rec in r.json()["transactions"]
            if rec["kind"] == "attack_detected"
            and rec["outcome"] == "replay"
            and rec["username"] == username
        ]
        notes = (
            f"first submission: {first.status_code}; replay: {replayed.status_code} "
            f"{replayed.json().get('error')}"
        )
        return AttackReport(
            scenario=scenario,
            detected=rejected and len(matched) >= 1,
            log_entries_matched=len(matched),
            notes=notes,
        )
    finally:
        client.close()


def _run_dos(scenario, server_url, admin_token, seed) -> AttackReport:
    flood_step = next(s for s in scenario.script if s["op"] == "flood")
    baseline_step = next(s for s in scenario.script if s["op"] == "measure_baseline")
    control_step = next(s for s in scenario.script if s["op"] == "control_request")
    client = _Client(server_url, admin_token)
    try:
        username, _pool = client.enroll_fresh_user(seed)

        def control_latency() -> float:
            t0 = time.perf_counter()
            client.challenge(username)
            return time.perf_counter() - t0

        baseline = sorted(control_latency() for _ in range(baseline_step["n"]))
        p99 = baseline[max(0, int(len(baseline) * 0.99) - 1)]
        deadline = max(1.0, control_step["deadline_factor"] * p99)

        def one_request(_):
            try:
                with httpx.Client(base_url=server_url, timeout=30.0) as c:
                    c.post("/api/v1/challenge", json={"username": username})
            except httpx.HTTPError:
                pass

        n, workers = flood_step["n"], flood_step["concurrency"]
        t0 = time.perf_counter()
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(one_request, range(n)))
        flood_elapsed = time.perf_counter() - t0
        control_elapsed = control_latency()
        survived = control_elapsed < deadline
        return AttackReport(
            scenario=scenario,
            detected=survived,
            notes=(
                f"{n} flood requests in {flood_elapsed:.2f}s; control answered in "
                f"{control_elapsed * 1000:.1f} ms (deadline {deadline * 1000:.0f} ms)"
            ),
            extra={"deadline_s": deadline, "control_s": control_elapsed},
        )
    finally:
        client.close()


def _run_sensor_destroy(scenario, server_url) -> AttackReport:
    try:
        with httpx.Client(base_url=server_url, timeout=2.0) as c:
            r = c.get("/api/v1/enroll/status", params={"username": "probe"})
        return AttackReport(
            scenario=scenario,
            detected=False,
            notes=f"endpoint still answering (HTTP {r.status_code}); sensor not destroyed",
        )
    except httpx.HTTPError as e:
        return AttackReport(
            scenario=scenario,
            detected=True,
            notes=f"sensor offline: {type(e).__name__} (denial of service at the capture point)",
        )


# ----------------------------------------------------------------------
# in-process trojan doubles


def always_accept_matcher(model, probe, threshold):
    """Rogue matcher: accepts everything with a constant zero score."""
    return matching.MatchScore(raw_min=0.0, normalized=0.0, accepted=True)


def always_reject_matcher(model, probe, threshold):
    """Rogue matcher: rejects everything with a constant saturated score."""
    return matching.MatchScore(raw_min=1e9, normalized=1e9, accepted=False)


def _run_trojan(scenario, service_factory, seed) -> AttackReport:
    double = always_accept_matcher if scenario.kind == "trojan_accept" else always_reject_matcher
    service = service_factory(double)
    try:
        pool = synth.WriterPool(seed, 1)
        username = f"trojanprobe{secrets.token_hex(4)}"
        admin = service._admin_token
        temp = service.authorize_user(admin, username)["temp_password"]
        for _ in range(service.config.enroll_count):
            nonce = service.issue_challenge(username)["nonce"]
            service.submit_enrollment_sample(username, temp, pool.genuine(0), nonce)
        n = next(s["n"] for s in scenario.script if s["op"] == "verify_many")
        blocked = False
        for _ in range(n):
            nonce = service.issue_challenge(username)["nonce"]
            try:
                service.verify(username, pool.genuine(0), nonce)
            except Exception:
                blocked = True
                break
        records = service.read_transactions(admin, last_n=200)
        scores = [
            r["normalized_score"]
            for r in records
            if r["kind"] == "verify" and r["username"] == username
            and r["normalized_score"] is not None
        ]
        constant = len(scores) >= 2 and len(set(scores)) == 1
        outcomes = {
            r["outcome"]
            for r in records
            if r["kind"] == "verify" and r["username"] == username
        }
        notes = (
            f"{len(scores)} scored verifies, score set {sorted(set(scores))[:3]}, "
            f"outcomes {sorted(outcomes)}"
        )
        if blocked:
            notes += "; user became blocked (denial of service)"
        return AttackReport(
            scenario=scenario,
            detected=constant,
            log_entries_matched=len(scores),
            notes=notes,
        )
    finally:
        service.close()
