import socket
import threading
import time

import pytest

from sigver import synth
from sigver.config import SystemConfig
from sigver.service import AccessService

ADMIN_TOKEN = "test-admin-token"


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class LiveServer:
    """uvicorn in a daemon thread, for tests that need a real socket."""

    def __init__(self, service, port=None):
        import uvicorn

        from sigver.api import create_app

        self.service = service
        self.port = port or free_port()
        self.url = f"http://127.0.0.1:{self.port}"
        config = uvicorn.Config(
            create_app(service), host="127.0.0.1", port=self.port, log_level="error"
        )
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def start(self):
        self._thread.start()
        deadline = time.time() + 10
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.02)
        return self

    def stop(self):
        self._server.should_exit = True
        self._thread.join(timeout=10)


@pytest.fixture
def live_server(tmp_path):
    cfg = SystemConfig(data_dir=str(tmp_path / "srv-data"))
    service = AccessService(cfg, admin_token=ADMIN_TOKEN)
    server = LiveServer(service).start()
    yield server
    server.stop()
    service.close()


class FakeClock:
    """Injectable wall clock for session-gap and nonce-TTL tests."""

    def __init__(self, start: float = 1_700_000_000.0):
        self.now = start

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> None:
        self.now += seconds


@pytest.fixture
def clock() -> FakeClock:
    return FakeClock()


@pytest.fixture
def make_service(tmp_path, clock):
    created = []

    def make(data_dir=None, clock_override=None, score_fn=None, **overrides):
        cfg = SystemConfig(data_dir=str(data_dir or tmp_path / "data"), **overrides)
        svc = AccessService(
            cfg, admin_token=ADMIN_TOKEN, clock=clock_override or clock, score_fn=score_fn
        )
        created.append(svc)
        return svc

    yield make
    for svc in created:
        svc.close()


@pytest.fixture
def service(make_service):
    return make_service()


@pytest.fixture
def pool() -> synth.WriterPool:
    return synth.WriterPool(777, 3)


def enroll_user(service, pool, idx=0, username=None) -> str:
    """Authorize and fully enroll a synthetic writer; returns the username."""
    username = username or pool.username(idx)
    temp = service.authorize_user(ADMIN_TOKEN, username)["temp_password"]
    for _ in range(service.config.enroll_count):
        nonce = service.issue_challenge(username)["nonce"]
        service.submit_enrollment_sample(username, temp, pool.genuine(idx), nonce)
    return username


def fresh_nonce(service, username) -> str:
    return service.issue_challenge(username)["nonce"]
