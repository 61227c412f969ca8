import json
import re

import pytest

from sigver import cli, synth

from conftest import ADMIN_TOKEN


@pytest.fixture(autouse=True)
def admin_env(monkeypatch):
    monkeypatch.setenv("ADMIN_TOKEN", ADMIN_TOKEN)


@pytest.fixture
def tiny_corpus(tmp_path):
    out = tmp_path / "corpus"
    synth.gen_corpus(out, n_users=2, genuines_per_user=7, forgeries_per_user=2, master_seed=5)
    return out


class TestLocalCommands:
    def test_gen_corpus_and_eval(self, tmp_path, capsys):
        corpus = tmp_path / "c"
        rc = cli.main(
            ["gen-corpus", str(corpus), "--users", "3", "--genuines", "7",
             "--forgeries", "2", "--seed", "11"]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "wrote 27 samples for 3 users" in out

        report_path = tmp_path / "report.json"
        rc = cli.main(["eval", str(corpus), "--out", str(report_path)])
        assert rc == 0
        out = capsys.readouterr().out
        match = re.search(r"EER (\d+\.\d+) at threshold (\d+\.\d+)", out)
        assert match, out
        report = json.loads(report_path.read_text())
        assert float(match.group(1)) == pytest.approx(report["eer"], abs=1e-4)

    def test_eval_missing_corpus_fails(self, tmp_path, capsys):
        rc = cli.main(["eval", str(tmp_path / "nope")])
        assert rc == 1
        assert "sigver:" in capsys.readouterr().err

    def test_attack_sim_trojan_accept(self, capsys):
        rc = cli.main(["attack-sim", "trojan-accept"])
        assert rc == 0
        assert "detected" in capsys.readouterr().out

    def test_attack_sim_sensor_destroy_dead_port(self, capsys):
        from conftest import free_port

        rc = cli.main(
            ["attack-sim", "sensor-destroy", "--server", f"http://127.0.0.1:{free_port()}"]
        )
        assert rc == 0


class TestServerCommands:
    def test_admin_round_trip(self, live_server, capsys):
        server = ["--server", live_server.url]
        rc = cli.main(["users"] + server)
        assert rc == 0
        assert "0 user(s)" in capsys.readouterr().err

        rc = cli.main(["authorize", "alice"] + server)
        assert rc == 0
        temp_password = capsys.readouterr().out.strip()
        assert len(temp_password) == 32

        rc = cli.main(["users"] + server)
        assert rc == 0
        assert "alice" in capsys.readouterr().out

        rc = cli.main(["config", "set", "max_failures=4"] + server)
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["max_failures"] == 4

        rc = cli.main(["config", "get"] + server)
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["max_failures"] == 4

        rc = cli.main(["logs", "--last", "5"] + server)
        assert rc == 0
        assert "authorize" in capsys.readouterr().out

    def test_wrong_admin_token(self, live_server, capsys, monkeypatch):
        monkeypatch.setenv("ADMIN_TOKEN", "wrong")
        rc = cli.main(["users", "--server", live_server.url])
        assert rc == 1
        assert "NotAdmin" in capsys.readouterr().err

    def test_unblock_requires_blocked(self, live_server, capsys):
        cli.main(["authorize", "bob", "--server", live_server.url])
        capsys.readouterr()
        rc = cli.main(["unblock", "bob", "--server", live_server.url])
        assert rc == 1
        assert "NotBlocked" in capsys.readouterr().err


class TestBatchCommands:
    def test_enroll_and_verify_batch(self, live_server, tiny_corpus, tmp_path, capsys):
        server = ["--server", live_server.url]
        rc = cli.main(["enroll-batch", str(tiny_corpus)] + server)
        assert rc == 0
        assert "enrolled 2 users" in capsys.readouterr().out

        report_path = tmp_path / "http_report.json"
        rc = cli.main(
            ["verify-batch", str(tiny_corpus), "--out", str(report_path)] + server
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert re.search(r"genuine accepted \d+/4; forgeries accepted \d+/4", out)
        trials = json.loads(report_path.read_text())["trials"]
        assert len(trials) == 2 * (2 + 2)
        assert all({"username", "file", "kind", "score", "accepted"} <= set(t) for t in trials)

    def test_verify_batch_parallel_deterministic(self, live_server, tiny_corpus, tmp_path, capsys):
        server = ["--server", live_server.url]
        live_server.service.set_config(ADMIN_TOKEN, {"update_rule": "none", "max_failures": 1000})
        assert cli.main(["enroll-batch", str(tiny_corpus)] + server) == 0
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert cli.main(["verify-batch", str(tiny_corpus), "--out", str(a)] + server) == 0
        assert (
            cli.main(
                ["verify-batch", str(tiny_corpus), "--out", str(b), "--parallel", "4"] + server
            )
            == 0
        )
        capsys.readouterr()
        assert a.read_text() == b.read_text()


class TestAttackSimAgainstServer:
    def test_replay_sim(self, live_server, capsys):
        rc = cli.main(["attack-sim", "replay", "--server", live_server.url])
        assert rc == 0
        assert "detected" in capsys.readouterr().out
