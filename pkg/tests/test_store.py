import json

import numpy as np
import pytest

from sigver import enroll, matching, store
from sigver.errors import CorruptStore

RNG = np.random.default_rng(41)


def make_record(username="alice") -> store.UserRecord:
    state, _ = enroll.begin_enrollment(r=5, s1=3)
    for i in range(5):
        enroll.add_sample(state, RNG.standard_normal((9, 7)), float(i), min_session_gap=0.0)
    model = matching.build_model([RNG.standard_normal((9, 7)) for _ in range(5)], now=77.0)
    return store.UserRecord(
        username=username,
        display_name="Alice",
        enrollment=state,
        model=model,
        last_success_at=123.456,
        consecutive_failures=2,
        blocked=False,
    )


class TestUsernames:
    @pytest.mark.parametrize("name", ["alice", "user007", "a.b-c_d", "A" * 64])
    def test_valid(self, name):
        assert store.valid_username(name)

    @pytest.mark.parametrize(
        "name", ["", "../etc/passwd", "a/b", ".hidden", "a b", "é", "A" * 65, None, 42]
    )
    def test_invalid(self, name):
        assert not store.valid_username(name)


class TestUserDocuments:
    def test_round_trip_bit_exact(self, tmp_path):
        ds = store.DataStore(tmp_path / "data")
        rec = make_record()
        ds.save_user(rec)
        loaded = ds.load_users()["alice"]
        assert store.user_to_dict(loaded) == store.user_to_dict(rec)
        for a, b in zip(loaded.model.refs, rec.model.refs):
            assert np.array_equal(a, b)
        assert loaded.model.mu_ref == rec.model.mu_ref

    def test_truncated_file_refuses_to_load(self, tmp_path):
        ds = store.DataStore(tmp_path / "data")
        ds.save_user(make_record())
        path = tmp_path / "data" / "users" / "alice.json"
        path.write_text(path.read_text()[: 100])
        with pytest.raises(CorruptStore) as err:
            ds.load_users()
        assert "alice.json" in str(err.value)

    def test_schema_violation_names_file(self, tmp_path):
        ds = store.DataStore(tmp_path / "data")
        (tmp_path / "data" / "users" / "bob.json").write_text('{"username": "bob"}')
        with pytest.raises(CorruptStore) as err:
            ds.load_users()
        assert "bob.json" in str(err.value)


class TestTransactionLog:
    def test_append_and_tail(self, tmp_path):
        log = store.TransactionLog(tmp_path / "t.log", clock=lambda: 5.0)
        for i in range(4):
            log.append("verify", "alice", "reject", normalized_score=2.0 + i)
        assert [r.seq for r in log.tail(2)] == [3, 4]
        assert len(log) == 4
        log.close()

    def test_strictly_increasing_seq_survives_reopen(self, tmp_path):
        path = tmp_path / "t.log"
        log = store.TransactionLog(path, clock=lambda: 1.0)
        log.append("authorize", "alice", "accept")
        log.append("verify", "alice", "accept", normalized_score=0.4)
        log.close()

        log2 = store.TransactionLog(path, clock=lambda: 2.0)
        rec = log2.append("admin", "-", "accept", detail="after restart")
        assert rec.seq == 3
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 3
        assert [json.loads(l)["seq"] for l in lines] == [1, 2, 3]
        log2.close()

    def test_corrupt_line_detected(self, tmp_path):
        path = tmp_path / "t.log"
        log = store.TransactionLog(path, clock=lambda: 1.0)
        log.append("admin", "-", "accept")
        log.close()
        with open(path, "a") as fh:
            fh.write("{not json\n")
        with pytest.raises(CorruptStore) as err:
            store.TransactionLog(path)
        assert "t.log" in str(err.value)

    def test_records_never_mutated(self, tmp_path):
        log = store.TransactionLog(tmp_path / "t.log", clock=lambda: 1.0)
        rec = log.append("admin", "-", "accept")
        with pytest.raises(AttributeError):
            rec.outcome = "reject"
        log.close()


class TestTerminals:
    def test_round_trip(self, tmp_path):
        ds = store.DataStore(tmp_path / "data")
        ds.save_terminals({"kiosk-1": {"secret": "ab" * 32, "enabled": True}})
        assert ds.load_terminals()["kiosk-1"]["enabled"] is True

    def test_corrupt_registry(self, tmp_path):
        ds = store.DataStore(tmp_path / "data")
        ds.terminals_path.write_text("[1,2,3]")
        with pytest.raises(CorruptStore):
            ds.load_terminals()
