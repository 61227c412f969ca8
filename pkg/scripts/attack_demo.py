#!/usr/bin/env python3
"""Spin up a throwaway server and run every supported attack scenario.

Usage: python scripts/attack_demo.py
Prints one report line per scenario; everything runs against a temporary
data directory on a random local port.
"""

import sys
import tempfile
import threading
import time
from pathlib import Path

import uvicorn

from sigver import attacks
from sigver.api import create_app
from sigver.config import SystemConfig
from sigver.service import AccessService

ADMIN = "attack-demo-token"


def start_server(service, port: int):
    server = uvicorn.Server(
        uvicorn.Config(create_app(service), host="127.0.0.1", port=port, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    while not server.started:
        time.sleep(0.02)
    return server, thread


def free_port() -> int:
    import socket

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def main() -> int:
    with tempfile.TemporaryDirectory(prefix="sigver-demo-") as tmp:
        service = AccessService(
            SystemConfig(data_dir=str(Path(tmp) / "data")), admin_token=ADMIN
        )
        port = free_port()
        server, thread = start_server(service, port)
        url = f"http://127.0.0.1:{port}"
        print(f"server on {url}\n")

        for scenario in (
            attacks.replay_scenario(point=8),
            attacks.replay_scenario(point=2),
            attacks.dos_flood_scenario(n_requests=200),
        ):
            report = attacks.run_attack_scenario(scenario, server_url=url, admin_token=ADMIN)
            print(report.summary())

        def factory(score_fn):
            return AccessService(
                SystemConfig(data_dir=str(Path(tmp) / f"trojan-{score_fn.__name__}")),
                admin_token=ADMIN,
                score_fn=score_fn,
            )

        for kind in ("trojan_accept", "trojan_reject"):
            report = attacks.run_attack_scenario(
                attacks.trojan_scenario(kind), service_factory=factory
            )
            print(report.summary())

        server.should_exit = True
        thread.join(timeout=5)
        service.close()

        dead = f"http://127.0.0.1:{free_port()}"
        report = attacks.run_attack_scenario(attacks.sensor_destroy_scenario(), server_url=dead)
        print(report.summary())
    return 0


if __name__ == "__main__":
    sys.exit(main())
