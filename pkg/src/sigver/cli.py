"""Operator command line.

serve            run the verification server
authorize/users/unblock/config/logs
                 administer a running server over HTTP (ADMIN_TOKEN env)
gen-corpus       write a deterministic synthetic corpus
enroll-batch     authorize + enroll every corpus user against a live server
verify-batch     run every corpus probe through /api/v1/verify
eval             in-process FAR/FRR/EER sweep over a corpus
attack-sim       run an attack scenario and report whether it was detected

Every command exits 0 only if its postcondition held; failures print one
diagnostic line on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import httpx

from . import attacks, evaluate, synth
from .config import SystemConfig, config_from_dict
from .errors import SigverError

DEFAULT_SERVER = "http://127.0.0.1:8420"


class CliFailure(Exception):
    pass


def _admin_token(args) -> str:
    token = getattr(args, "admin_token", None) or os.environ.get("ADMIN_TOKEN", "")
    if not token:
        raise CliFailure("admin token required: set ADMIN_TOKEN or pass --admin-token")
    return token


def _client(args) -> httpx.Client:
    return httpx.Client(base_url=args.server, timeout=60.0)


def _checked(response: httpx.Response) -> dict:
    if response.status_code >= 400:
        try:
            doc = response.json()
            msg = f"{doc.get('error')}: {doc.get('detail', '')}"
        except ValueError:
            msg = response.text[:200]
        raise CliFailure(f"HTTP {response.status_code} {msg}")
    return response.json()


# ----------------------------------------------------------------------
# commands


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app
    from .service import AccessService

    if args.config:
        cfg = config_from_dict(json.loads(Path(args.config).read_text()))
    else:
        cfg = SystemConfig()
    if args.data_dir:
        cfg = config_from_dict({**cfg.__dict__, "data_dir": args.data_dir})
    token = _admin_token(args)
    service = AccessService(cfg, admin_token=token)
    host, _, port = service.config.bind_address.rpartition(":")
    if args.host:
        host = args.host
    if args.port:
        port = args.port
    app = create_app(service, static_dir=args.static or None)
    print(f"serving on {host}:{port} (data_dir={service.config.data_dir})", file=sys.stderr)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return 0


def cmd_authorize(args) -> int:
    with _client(args) as http:
        doc = _checked(
            http.post(
                "/api/v1/admin/authorize",
                headers={"X-Admin-Token": _admin_token(args)},
                json={"username": args.username, "display_name": args.display_name or ""},
            )
        )
    print(doc["temp_password"])
    return 0


def cmd_users(args) -> int:
    with _client(args) as http:
        doc = _checked(
            http.get("/api/v1/admin/users", headers={"X-Admin-Token": _admin_token(args)})
        )
    users = doc["users"]
    print(f"{'username':<20} {'phase':<16} {'last_success':<20} {'failures':>8} blocked")
    for u in users:
        last = "-" if u["last_success_at"] is None else f"{u['last_success_at']:.0f}"
        print(
            f"{u['username']:<20} {u['phase']:<16} {last:<20} "
            f"{u['consecutive_failures']:>8} {u['blocked']}"
        )
    print(f"{len(users)} user(s)", file=sys.stderr)
    return 0


def cmd_unblock(args) -> int:
    with _client(args) as http:
        doc = _checked(
            http.post(
                "/api/v1/admin/unblock",
                headers={"X-Admin-Token": _admin_token(args)},
                json={"username": args.username},
            )
        )
    print(f"unblocked {doc['user']['username']}")
    return 0


def cmd_config(args) -> int:
    headers = {"X-Admin-Token": _admin_token(args)}
    with _client(args) as http:
        if args.action == "get":
            doc = _checked(http.get("/api/v1/admin/config", headers=headers))
        else:
            delta = {}
            for item in args.values:
                key, _, raw = item.partition("=")
                if not _:
                    raise CliFailure(f"expected KEY=VALUE, got {item!r}")
                try:
                    delta[key] = json.loads(raw)
                except ValueError:
                    delta[key] = raw
            doc = _checked(http.put("/api/v1/admin/config", headers=headers, json=delta))
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def cmd_logs(args) -> int:
    with _client(args) as http:
        doc = _checked(
            http.get(
                "/api/v1/admin/transactions",
                params={"last": args.last},
                headers={"X-Admin-Token": _admin_token(args)},
            )
        )
    for rec in doc["transactions"]:
        score = "-" if rec["normalized_score"] is None else f"{rec['normalized_score']:.4f}"
        print(
            f"{rec['seq']:>6} {rec['timestamp']:.3f} {rec['kind']:<15} "
            f"{rec['username']:<16} {rec['outcome']:<8} {score:>8} {rec['detail']}"
        )
    return 0


def cmd_gen_corpus(args) -> int:
    manifest = synth.gen_corpus(
        args.out_dir,
        n_users=args.users,
        genuines_per_user=args.genuines,
        forgeries_per_user=args.forgeries,
        master_seed=args.seed,
        n_harmonics=args.harmonics,
        genuine_jitter=args.jitter,
        forgery_warp=args.warp,
    )
    total = args.users * (args.genuines + args.forgeries)
    print(f"wrote {total} samples for {manifest['n_users']} users to {args.out_dir}")
    return 0


def _server_enroll_count(http: httpx.Client, headers: dict) -> int:
    return int(_checked(http.get("/api/v1/admin/config", headers=headers))["enroll_count"])


def cmd_enroll_batch(args) -> int:
    corpus = evaluate.load_corpus(args.corpus)
    headers = {"X-Admin-Token": _admin_token(args)}
    enrolled = 0
    with _client(args) as http:
        enroll_count = _server_enroll_count(http, headers)
        for user in corpus["users"]:
            username = user["username"]
            doc = _checked(
                http.post(
                    "/api/v1/admin/authorize", headers=headers, json={"username": username}
                )
            )
            temp_password = doc["temp_password"]
            progress = None
            for fname in user["genuine"][:enroll_count]:
                sample = json.loads((user["dir"] / fname).read_text())
                nonce = _checked(
                    http.post("/api/v1/challenge", json={"username": username})
                )["nonce"]
                progress = _checked(
                    http.post(
                        "/api/v1/enroll",
                        headers=headers,
                        json={
                            "username": username,
                            "temp_password": temp_password,
                            "sample": sample,
                            "nonce": nonce,
                        },
                    )
                )
            if not progress or not progress["enrolled"]:
                raise CliFailure(f"{username}: not enrolled after {enroll_count} samples")
            enrolled += 1
    print(f"enrolled {enrolled} users")
    return 0


def cmd_verify_batch(args) -> int:
    corpus = evaluate.load_corpus(args.corpus)
    headers = {"X-Admin-Token": _admin_token(args)}
    with _client(args) as http:
        enroll_count = _server_enroll_count(http, headers)
    trials = []
    for user in corpus["users"]:
        for fname in user["genuine"][enroll_count:]:
            trials.append((user["username"], user["dir"] / fname, fname, "genuine"))
        for entry in user["forgery"]:
            trials.append((user["username"], user["dir"] / entry["file"], entry["file"], entry["kind"]))

    # one shared client: httpx.Client is thread-safe and keeps connections alive
    shared = httpx.Client(base_url=args.server, timeout=60.0)

    def run_trial(trial):
        username, path, fname, kind = trial
        nonce = _checked(shared.post("/api/v1/challenge", json={"username": username}))["nonce"]
        doc = _checked(
            shared.post(
                "/api/v1/verify",
                json={
                    "username": username,
                    "sample": json.loads(path.read_text()),
                    "nonce": nonce,
                },
            )
        )
        return {
            "username": username,
            "file": fname,
            "kind": kind,
            "score": doc["score"],
            "accepted": doc["accepted"],
        }

    try:
        if args.parallel > 1:
            import concurrent.futures

            with concurrent.futures.ThreadPoolExecutor(max_workers=args.parallel) as pool:
                results = list(pool.map(run_trial, trials))
        else:
            results = [run_trial(t) for t in trials]
    finally:
        shared.close()
    results.sort(key=lambda r: (r["username"], r["file"]))

    genuine = [r for r in results if r["kind"] == "genuine"]
    impostor = [r for r in results if r["kind"] != "genuine"]
    acc_g = sum(r["accepted"] for r in genuine)
    acc_i = sum(r["accepted"] for r in impostor)
    print(
        f"genuine accepted {acc_g}/{len(genuine)}; forgeries accepted {acc_i}/{len(impostor)}"
    )
    if args.out:
        Path(args.out).write_text(json.dumps({"trials": results}, indent=1, sort_keys=True))
        print(f"report written to {args.out}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    report = evaluate.eval_corpus(args.corpus, enroll_count=args.enroll_count)
    far_at, frr_at = evaluate.rates_at(report, args.threshold)
    step = max(1, len(report.thresholds) // 12)
    print(f"{'threshold':>10} {'FAR':>8} {'FRR':>8}")
    for i in range(0, len(report.thresholds), step):
        print(f"{report.thresholds[i]:>10.2f} {report.far[i]:>8.4f} {report.frr[i]:>8.4f}")
    print(f"at threshold {args.threshold}: FAR {far_at:.4f} FRR {frr_at:.4f}")
    print(f"EER {report.eer:.4f} at threshold {report.eer_threshold:.4f}")
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True))
        print(f"report written to {args.out}", file=sys.stderr)
    return 0


def cmd_attack_sim(args) -> int:
    kind = args.kind.replace("-", "_")
    if kind == "replay":
        scenario = attacks.replay_scenario(point=args.point or 8)
        report = attacks.run_attack_scenario(
            scenario, server_url=args.server, admin_token=_admin_token(args)
        )
    elif kind in ("trojan_accept", "trojan_reject"):
        scenario = attacks.trojan_scenario(kind, point=args.point or 5)
        with tempfile.TemporaryDirectory(prefix="sigver-attack-") as tmp:

            def factory(score_fn):
                from .service import AccessService

                return AccessService(
                    SystemConfig(data_dir=str(Path(tmp) / "data")),
                    admin_token="attack-sim-token",
                    score_fn=score_fn,
                )

            report = attacks.run_attack_scenario(scenario, service_factory=factory)
    elif kind == "dos_flood":
        scenario = attacks.dos_flood_scenario(point=args.point or 8, n_requests=args.requests)
        report = attacks.run_attack_scenario(
            scenario, server_url=args.server, admin_token=_admin_token(args)
        )
    elif kind == "sensor_destroy":
        scenario = attacks.sensor_destroy_scenario()
        report = attacks.run_attack_scenario(scenario, server_url=args.server)
    else:
        raise CliFailure(f"unknown attack kind {args.kind!r}")
    print(report.summary())
    return 0 if report.detected else 1


# ----------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigver",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_server_args(p):
        p.add_argument("--server", default=DEFAULT_SERVER)
        p.add_argument("--admin-token", default=None)

    p = sub.add_parser("serve", help="run the verification server")
    p.add_argument("--config", help="path to a JSON SystemConfig file")
    p.add_argument("--data-dir", help="override data_dir")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--static", help="serve this directory as the web client")
    p.add_argument("--admin-token", default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("authorize", help="authorize a new user; prints the temp password")
    p.add_argument("username")
    p.add_argument("--display-name")
    add_server_args(p)
    p.set_defaults(func=cmd_authorize)

    p = sub.add_parser("users", help="list user records")
    add_server_args(p)
    p.set_defaults(func=cmd_users)

    p = sub.add_parser("unblock", help="unblock a user")
    p.add_argument("username")
    add_server_args(p)
    p.set_defaults(func=cmd_unblock)

    p = sub.add_parser("config", help="get or set server configuration")
    p.add_argument("action", choices=["get", "set"])
    p.add_argument("values", nargs="*", help="KEY=VALUE pairs for set")
    add_server_args(p)
    p.set_defaults(func=cmd_config)

    p = sub.add_parser("logs", help="show the transaction tail")
    p.add_argument("--last", type=int, default=50)
    add_server_args(p)
    p.set_defaults(func=cmd_logs)

    p = sub.add_parser("gen-corpus", help="write a synthetic corpus")
    p.add_argument("out_dir")
    p.add_argument("--users", type=int, default=50)
    p.add_argument("--genuines", type=int, default=15)
    p.add_argument("--forgeries", type=int, default=10)
    p.add_argument("--seed", type=int, default=20060102)
    p.add_argument("--harmonics", type=int, default=synth.DEFAULT_HARMONICS)
    p.add_argument("--jitter", type=float, default=synth.DEFAULT_JITTER)
    p.add_argument("--warp", type=float, default=synth.DEFAULT_WARP)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("enroll-batch", help="enroll every corpus user against a live server")
    p.add_argument("corpus")
    add_server_args(p)
    p.set_defaults(func=cmd_enroll_batch)

    p = sub.add_parser("verify-batch", help="verify every corpus probe against a live server")
    p.add_argument("corpus")
    p.add_argument("--out", help="write the per-trial report here")
    p.add_argument("--parallel", type=int, default=1)
    add_server_args(p)
    p.set_defaults(func=cmd_verify_batch)

    p = sub.add_parser("eval", help="in-process FAR/FRR/EER evaluation of a corpus")
    p.add_argument("corpus")
    p.add_argument("--enroll-count", type=int, default=5)
    p.add_argument("--threshold", type=float, default=1.6)
    p.add_argument("--out", help="write the machine-readable report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("attack-sim", help="run an attack scenario")
    p.add_argument(
        "kind",
        choices=["replay", "trojan-accept", "trojan-reject", "dos-flood", "sensor-destroy"],
    )
    p.add_argument("--point", type=int, default=None)
    p.add_argument("--requests", type=int, default=1000)
    add_server_args(p)
    p.set_defaults(func=cmd_attack_sim)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliFailure as e:
        print(f"sigver: {e}", file=sys.stderr)
        return 1
    except SigverError as e:
        print(f"sigver: {e.code}: {e.detail}", file=sys.stderr)
        return 1
    except httpx.HTTPError as e:
        print(f"sigver: network error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"sigver: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
