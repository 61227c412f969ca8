import numpy as np
import pytest

from sigver import matching, signals, store, synth
from sigver.config import SystemConfig
from sigver.errors import (
    AlreadyEnrolled,
    BadTempPassword,
    CorruptStore,
    DuplicateUser,
    InvalidConfig,
    NotAdmin,
    NotBlocked,
    NotEnrolled,
    ReplayDetected,
    SessionGapNotElapsed,
    UnknownUser,
    UserBlocked,
)
from sigver.service import AccessService

from conftest import ADMIN_TOKEN, enroll_user, fresh_nonce


def reject_probe(pool, idx=0):
    return pool.skilled_forgery(idx)


def last_record(service) -> store.TransactionRecord:
    return service.transaction_log.tail(1)[0]


class TestAuthorize:
    def test_authorize_creates_record_and_log_entry(self, service):
        before = len(service.transaction_log)
        result = service.authorize_user(ADMIN_TOKEN, "alice")
        assert len(result["temp_password"]) == 32
        users = service.admin_list_users(ADMIN_TOKEN)
        assert [u["username"] for u in users] == ["alice"]
        assert users[0]["phase"] == "authorized"
        assert users[0]["blocked"] is False
        assert len(service.transaction_log) == before + 2  # authorize + listing

    def test_duplicate_user(self, service):
        service.authorize_user(ADMIN_TOKEN, "alice")
        with pytest.raises(DuplicateUser):
            service.authorize_user(ADMIN_TOKEN, "alice")

    def test_not_admin(self, service):
        with pytest.raises(NotAdmin):
            service.authorize_user("wrong-token", "alice")
        assert last_record(service).outcome == "error"

    def test_fresh_system_lists_empty(self, service):
        assert service.admin_list_users(ADMIN_TOKEN) == []


class TestEnrollmentFlow:
    def test_full_flow(self, service, pool):
        temp = service.authorize_user(ADMIN_TOKEN, "user000")["temp_password"]
        for i in range(4):
            nonce = fresh_nonce(service, "user000")
            progress = service.submit_enrollment_sample(
                "user000", temp, pool.genuine(0), nonce
            )
        assert progress == {
            "phase": "session2",
            "collected": 4,
            "remaining": 1,
            "enrolled": False,
        }
        nonce = fresh_nonce(service, "user000")
        progress = service.submit_enrollment_sample("user000", temp, pool.genuine(0), nonce)
        assert progress["enrolled"] is True
        assert last_record(service).kind == "enroll_complete"
        # model document landed on disk
        users = service._store.load_users()
        assert users["user000"].model is not None

    def test_bad_temp_password(self, service, pool):
        service.authorize_user(ADMIN_TOKEN, "u1")
        with pytest.raises(BadTempPassword):
            service.submit_enrollment_sample(
                "u1", "0" * 32, pool.genuine(0), fresh_nonce(service, "u1")
            )

    def test_session_gap_enforced_with_injected_clock(self, make_service, pool, clock):
        service = make_service(min_session_gap=3600.0)
        temp = service.authorize_user(ADMIN_TOKEN, "u1")["temp_password"]
        for _ in range(3):
            service.submit_enrollment_sample(
                "u1", temp, pool.genuine(0), fresh_nonce(service, "u1")
            )
        assert service.enrollment_status("u1")["phase"] == "await_session2"
        clock.advance(3599.0)
        with pytest.raises(SessionGapNotElapsed):
            service.submit_enrollment_sample(
                "u1", temp, pool.genuine(0), fresh_nonce(service, "u1")
            )
        clock.advance(1.0)
        progress = service.submit_enrollment_sample(
            "u1", temp, pool.genuine(0), fresh_nonce(service, "u1")
        )
        assert progress["phase"] == "session2"

    def test_temp_password_rejected_after_enrolled(self, service, pool):
        username = enroll_user(service, pool, 0)
        with pytest.raises(AlreadyEnrolled):
            service.submit_enrollment_sample(
                username, "whatever", pool.genuine(0), fresh_nonce(service, username)
            )

    def test_attended_enrollment_requires_admin(self, make_service, pool):
        service = make_service(attended_enrollment=True)
        temp = service.authorize_user(ADMIN_TOKEN, "u1")["temp_password"]
        with pytest.raises(NotAdmin):
            service.submit_enrollment_sample(
                "u1", temp, pool.genuine(0), fresh_nonce(service, "u1")
            )
        progress = service.submit_enrollment_sample(
            "u1", temp, pool.genuine(0), fresh_nonce(service, "u1"), admin_token=ADMIN_TOKEN
        )
        assert progress["collected"] == 1

    def test_status_unknown_user(self, service):
        with pytest.raises(UnknownUser):
            service.enrollment_status("ghost")


class TestVerify:
    def test_genuine_accepted_and_counter_reset(self, service, pool):
        username = enroll_user(service, pool, 0)
        # drive the counter up first
        for _ in range(2):
            service.verify(username, reject_probe(pool), fresh_nonce(service, username))
        result = service.verify(username, pool.genuine(0), fresh_nonce(service, username))
        assert result["accepted"] is True
        summary = next(
            u for u in service.admin_list_users(ADMIN_TOKEN) if u["username"] == username
        )
        assert summary["consecutive_failures"] == 0
        assert summary["last_success_at"] is not None

    def test_reject_reject_accept_reject_leaves_counter_at_one(self, service, pool):
        username = enroll_user(service, pool, 0)
        service.verify(username, reject_probe(pool), fresh_nonce(service, username))
        service.verify(username, reject_probe(pool), fresh_nonce(service, username))
        service.verify(username, pool.genuine(0), fresh_nonce(service, username))
        service.verify(username, reject_probe(pool), fresh_nonce(service, username))
        summary = next(
            u for u in service.admin_list_users(ADMIN_TOKEN) if u["username"] == username
        )
        assert summary["consecutive_failures"] == 1
        assert summary["blocked"] is False

    def test_not_enrolled(self, service, pool):
        service.authorize_user(ADMIN_TOKEN, "u1")
        with pytest.raises(NotEnrolled):
            service.verify("u1", pool.genuine(0), fresh_nonce(service, "u1"))

    def test_unknown_user(self, service, pool):
        with pytest.raises(UnknownUser):
            service.verify("ghost", pool.genuine(0), "f" * 32)

    def test_sample_error_does_not_touch_counter(self, service, pool):
        username = enroll_user(service, pool, 0)
        bad = {"device_id": "x", "points": []}
        with pytest.raises(Exception):
            service.verify(username, bad, fresh_nonce(service, username))
        summary = next(
            u for u in service.admin_list_users(ADMIN_TOKEN) if u["username"] == username
        )
        assert summary["consecutive_failures"] == 0


class TestBlocking:
    def test_blocked_on_fifth_consecutive_reject(self, service, pool):
        username = enroll_user(service, pool, 0)
        assert service.config.max_failures == 5
        for i in range(4):
            service.verify(username, reject_probe(pool), fresh_nonce(service, username))
            assert not any(
                u["blocked"] for u in service.admin_list_users(ADMIN_TOKEN)
            ), f"blocked too early at {i + 1}"
        service.verify(username, reject_probe(pool), fresh_nonce(service, username))
        summary = next(
            u for u in service.admin_list_users(ADMIN_TOKEN) if u["username"] == username
        )
        assert summary["blocked"] is True

    def test_blocked_user_never_reaches_matcher(self, service, pool):
        username = enroll_user(service, pool, 0)
        for _ in range(5):
            service.verify(username, reject_probe(pool), fresh_nonce(service, username))
        before = len(service.transaction_log)
        with pytest.raises(UserBlocked):
            service.verify(username, pool.genuine(0), fresh_nonce(service, username))
        rec = last_record(service)
        assert rec.kind == "verify"
        assert rec.outcome == "blocked"
        assert rec.normalized_score is None
        assert len(service.transaction_log) == before + 2  # challenge + blocked verify

    def test_unblock_resets(self, service, pool):
        username = enroll_user(service, pool, 0)
        for _ in range(5):
            service.verify(username, reject_probe(pool), fresh_nonce(service, username))
        result = service.admin_unblock(ADMIN_TOKEN, username)
        assert result["blocked"] is False
        assert result["consecutive_failures"] == 0
        ok = service.verify(username, pool.genuine(0), fresh_nonce(service, username))
        assert ok["accepted"] is True

    def test_unblock_not_blocked(self, service, pool):
        username = enroll_user(service, pool, 0)
        with pytest.raises(NotBlocked):
            service.admin_unblock(ADMIN_TOKEN, username)

    def test_unblock_unknown(self, service):
        with pytest.raises(UnknownUser):
            service.admin_unblock(ADMIN_TOKEN, "ghost")

    def test_max_failures_config_takes_effect(self, service, pool):
        username = enroll_user(service, pool, 0)
        service.set_config(ADMIN_TOKEN, {"max_failures": 3})
        for _ in range(3):
            service.verify(username, reject_probe(pool), fresh_nonce(service, username))
        summary = next(
            u for u in service.admin_list_users(ADMIN_TOKEN) if u["username"] == username
        )
        assert summary["blocked"] is True


class TestModelUpdate:
    def test_replace_oldest_applied_on_accept(self, service, pool):
        username = enroll_user(service, pool, 0)
        old_model = service._users[username].model
        probe_wire = pool.genuine(0)
        result = service.verify(username, probe_wire, fresh_nonce(service, username))
        assert result["accepted"] is True
        new_model = service._users[username].model
        # FIFO: exactly one reference replaced
        for old, new in zip(old_model.refs[1:], new_model.refs[:-1]):
            assert np.array_equal(old, new)
        expected_feats = signals.sample_to_features(signals.parse_sample(probe_wire))
        assert np.array_equal(new_model.refs[-1], expected_feats)
        # stats recomputed: brute-force check
        mu, sigma = matching.pairwise_reference_stats(new_model.refs)
        assert abs(new_model.mu_ref - mu) < 1e-9
        assert abs(new_model.sigma_ref - sigma) < 1e-9

    def test_update_rule_none_keeps_model(self, make_service, pool):
        service = make_service(update_rule="none")
        username = enroll_user(service, pool, 0)
        old_model = service._users[username].model
        service.verify(username, pool.genuine(0), fresh_nonce(service, username))
        new_model = service._users[username].model
        assert new_model is old_model

    def test_reject_never_updates_model(self, service, pool):
        username = enroll_user(service, pool, 0)
        old_model = service._users[username].model
        service.verify(username, reject_probe(pool), fresh_nonce(service, username))
        assert service._users[username].model is old_model


class TestConfig:
    def test_get_returns_last_set(self, service):
        service.set_config(ADMIN_TOKEN, {"accept_threshold": 2.5})
        assert service.get_config(ADMIN_TOKEN)["accept_threshold"] == 2.5

    def test_invalid_split_rejected(self, service):
        with pytest.raises(InvalidConfig):
            service.set_config(ADMIN_TOKEN, {"session_split": 5})

    def test_unknown_key_rejected(self, service):
        with pytest.raises(InvalidConfig):
            service.set_config(ADMIN_TOKEN, {"not_a_field": 1})

    def test_data_dir_change_rejected(self, service):
        with pytest.raises(InvalidConfig):
            service.set_config(ADMIN_TOKEN, {"data_dir": "/elsewhere"})

    def test_non_admin_cannot_read(self, service):
        with pytest.raises(NotAdmin):
            service.get_config("nope")


class TestTransactionAccounting:
    def test_exactly_one_record_per_operation(self, service, pool):
        ops = 0
        service.authorize_user(ADMIN_TOKEN, "u1")
        ops += 1
        service.enrollment_status("u1")
        ops += 1
        with pytest.raises(UnknownUser):
            service.enrollment_status("ghost")
        ops += 1
        service.issue_challenge("u1")
        ops += 1
        with pytest.raises(NotAdmin):
            service.authorize_user("bad", "u2")
        ops += 1
        service.read_transactions(ADMIN_TOKEN, 5)
        ops += 1
        assert len(service.transaction_log) == ops

    def test_seq_strictly_increasing(self, service, pool):
        enroll_user(service, pool, 0)
        records = service.transaction_log.tail(100)
        seqs = [r.seq for r in records]
        assert seqs == sorted(seqs)
        assert len(set(seqs)) == len(seqs)

    def test_read_transactions_returns_tail_in_order(self, service):
        for name in ("a1", "a2", "a3"):
            service.authorize_user(ADMIN_TOKEN, name)
        records = service.read_transactions(ADMIN_TOKEN, 2)
        assert [r["kind"] for r in records] == ["authorize", "authorize"]
        assert records[0]["seq"] < records[1]["seq"]


class TestCrossUserConcurrency:
    def test_concurrent_verifies_match_sequential_decisions(self, tmp_path, pool, clock):
        import concurrent.futures

        # same corpus of probes against two identically-seeded services:
        # one hit sequentially, one with interleaved workers
        probes = {}
        for idx in range(3):
            probes[pool.username(idx)] = [
                pool.genuine(idx), pool.skilled_forgery(idx), pool.genuine(idx),
                pool.skilled_forgery(idx), pool.genuine(idx),
            ]

        def run(mode: str) -> dict:
            local_pool = synth.WriterPool(777, 3)  # fresh RNG streams per service
            cfg = SystemConfig(data_dir=str(tmp_path / f"conc-{mode}"), update_rule="none")
            service = AccessService(cfg, admin_token=ADMIN_TOKEN, clock=clock)
            for idx in range(3):
                enroll_user(service, local_pool, idx)
            def run_user(username):
                # a user's own requests stay ordered; users interleave freely
                results = []
                for i, sample in enumerate(probes[username]):
                    nonce = service.issue_challenge(username)["nonce"]
                    result = service.verify(username, sample, nonce)
                    results.append(((username, i), (result["accepted"], result["score"])))
                return results

            if mode == "concurrent":
                with concurrent.futures.ThreadPoolExecutor(max_workers=3) as tp:
                    per_user = tp.map(run_user, probes)
            else:
                per_user = map(run_user, probes)
            outcomes = {key: value for chunk in per_user for key, value in chunk}
            state = {
                u: (r.consecutive_failures, r.blocked) for u, r in service._users.items()
            }
            service.close()
            return {"outcomes": outcomes, "state": state}

        sequential = run("sequential")
        concurrent_run = run("concurrent")
        assert concurrent_run["outcomes"] == sequential["outcomes"]
        assert concurrent_run["state"] == sequential["state"]


class TestPersistence:
    def test_restart_preserves_enrolled_user(self, tmp_path, pool, clock):
        cfg = SystemConfig(data_dir=str(tmp_path / "d"))
        service = AccessService(cfg, admin_token=ADMIN_TOKEN, clock=clock)
        username = enroll_user(service, pool, 0)
        pre_users = {u: store.user_to_dict(r) for u, r in service._users.items()}
        pre_len = len(service.transaction_log)
        service.close()

        reloaded = AccessService(cfg, admin_token=ADMIN_TOKEN, clock=clock)
        post_users = {u: store.user_to_dict(r) for u, r in reloaded._users.items()}
        assert post_users == pre_users
        assert reloaded.enrollment_status(username)["enrolled"] is True
        assert len(reloaded.transaction_log) == pre_len + 1  # + the status query
        reloaded.close()

    def test_restart_mid_session_preserves_counts(self, tmp_path, pool, clock):
        cfg = SystemConfig(data_dir=str(tmp_path / "d"))
        service = AccessService(cfg, admin_token=ADMIN_TOKEN, clock=clock)
        temp = service.authorize_user(ADMIN_TOKEN, "u1")["temp_password"]
        for _ in range(2):
            service.submit_enrollment_sample(
                "u1", temp, pool.genuine(0), fresh_nonce(service, "u1")
            )
        service.close()

        reloaded = AccessService(cfg, admin_token=ADMIN_TOKEN, clock=clock)
        status = reloaded.enrollment_status("u1")
        assert status["phase"] == "session1"
        assert status["collected"] == 2
        # the old temp password still authenticates after restart
        progress = reloaded.submit_enrollment_sample(
            "u1", temp, pool.genuine(0), fresh_nonce(reloaded, "u1")
        )
        assert progress["collected"] == 3
        reloaded.close()

    def test_config_set_survives_restart(self, tmp_path, clock):
        cfg = SystemConfig(data_dir=str(tmp_path / "d"))
        service = AccessService(cfg, admin_token=ADMIN_TOKEN, clock=clock)
        service.set_config(ADMIN_TOKEN, {"max_failures": 7})
        service.close()
        reloaded = AccessService(cfg, admin_token=ADMIN_TOKEN, clock=clock)
        assert reloaded.config.max_failures == 7
        reloaded.close()

    def test_corrupt_user_file_blocks_startup(self, tmp_path, pool, clock):
        cfg = SystemConfig(data_dir=str(tmp_path / "d"))
        service = AccessService(cfg, admin_token=ADMIN_TOKEN, clock=clock)
        enroll_user(service, pool, 0)
        service.close()
        victim = tmp_path / "d" / "users" / f"{pool.username(0)}.json"
        victim.write_text(victim.read_text()[:50])
        with pytest.raises(CorruptStore) as err:
            AccessService(cfg, admin_token=ADMIN_TOKEN, clock=clock)
        assert victim.name in str(err.value)
