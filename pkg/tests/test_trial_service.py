"""Event-sourced trial sessions: persistence, replay laws, sequence replay,
and the HTTP surface."""

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from brar.errors import InvalidArgumentError, TrialConflictError, TrialNotFoundError
from brar.policies import PolicySpec
from brar.service import create_app
from brar.trial import (
    ECMO_EVENTS,
    TrialConfig,
    TrialStore,
    create_trial,
    draw_allocation,
    ecmo_replay_csv,
    evidence_history,
    get_snapshot,
    record_outcome,
    replay_ecmo,
)


def binomial_config(trial_id, arms=("Control", "Treatment"), p_null=0.5, seed=11, **kw):
    return TrialConfig(
        trial_id=trial_id,
        arms=tuple(arms),
        policy=PolicySpec(method="point_null_binomial", p_null=p_null, **kw),
        seed=seed,
    )


class TestCreateTrial:
    def test_two_arm_initial_allocation(self, tmp_path):
        store = TrialStore(str(tmp_path))
        create_trial(store, binomial_config("t1"))
        snap = get_snapshot(store, "t1")
        assert snap.allocation.as_array() == pytest.approx([0.5, 0.5], abs=1e-10)
        assert snap.next_patient == 1

    def test_four_arm_initial_allocation(self, tmp_path):
        store = TrialStore(str(tmp_path))
        config = binomial_config("t4", arms=("Control", "A", "B", "C"))
        create_trial(store, config)
        snap = get_snapshot(store, "t4")
        assert snap.allocation.as_array() == pytest.approx([0.25] * 4, abs=1e-10)

    def test_one_arm_rejected(self):
        with pytest.raises(InvalidArgumentError):
            TrialConfig("bad", ("only",), PolicySpec(method="equal"))

    def test_duplicate_id_conflicts(self, tmp_path):
        store = TrialStore(str(tmp_path))
        create_trial(store, binomial_config("dup"))
        with pytest.raises(TrialConflictError):
            create_trial(store, binomial_config("dup"))


class TestDrawAndRecord:
    def test_draw_then_record_flow(self, tmp_path):
        store = TrialStore(str(tmp_path))
        create_trial(store, binomial_config("flow"))
        alloc, arm, patient = draw_allocation(store, "flow")
        assert patient == 1
        assert alloc.as_array() == pytest.approx([0.5, 0.5], abs=1e-10)
        snap = record_outcome(store, "flow", 1, 1, arm=arm)
        assert snap.n[arm] == 1

    def test_draw_reproducible_across_stores(self, tmp_path):
        a = TrialStore(str(tmp_path / "a"))
        b = TrialStore(str(tmp_path / "b"))
        create_trial(a, binomial_config("same", seed=99))
        create_trial(b, binomial_config("same", seed=99))
        _, arm_a, _ = draw_allocation(a, "same")
        _, arm_b, _ = draw_allocation(b, "same")
        assert arm_a == arm_b

    def test_p_null_one_draws_uniform_over_replay(self, tmp_path):
        store = TrialStore(str(tmp_path))
        create_trial(store, binomial_config("equalized", p_null=1.0, seed=5))
        arms = []
        for patient in range(1, 31):
            alloc, arm, _ = draw_allocation(store, "equalized", allow_pending=True)
            assert alloc.probs == (0.5, 0.5)
            arms.append(arm)
        assert 0 < sum(arms) < 30  # both arms appear

    def test_unknown_trial_not_found(self, tmp_path):
        store = TrialStore(str(tmp_path))
        with pytest.raises(TrialNotFoundError):
            record_outcome(store, "ghost", 1, 1, arm=0)

    def test_out_of_order_outcome_conflicts(self, tmp_path):
        store = TrialStore(str(tmp_path))
        create_trial(store, binomial_config("ooo"))
        draw_allocation(store, "ooo")
        with pytest.raises(TrialConflictError):
            record_outcome(store, "ooo", 2, 1, arm=0)

    def test_double_record_conflicts(self, tmp_path):
        store = TrialStore(str(tmp_path))
        create_trial(store, binomial_config("dbl"))
        _, arm, _ = draw_allocation(store, "dbl")
        record_outcome(store, "dbl", 1, 1, arm=arm)
        with pytest.raises(TrialConflictError):
            record_outcome(store, "dbl", 1, 0, arm=arm)

    def test_record_without_draw_requires_external_flag(self, tmp_path):
        store = TrialStore(str(tmp_path))
        create_trial(store, binomial_config("ext"))
        with pytest.raises(TrialConflictError):
            record_outcome(store, "ext", 1, 1, arm=1)
        snap = record_outcome(store, "ext", 1, 1, arm=1, external_arm=True)
        assert snap.n == (0, 1)

    def test_wrong_arm_conflicts(self, tmp_path):
        store = TrialStore(str(tmp_path))
        create_trial(store, binomial_config("arm"))
        _, arm, _ = draw_allocation(store, "arm")
        with pytest.raises(TrialConflictError):
            record_outcome(store, "arm", 1, 1, arm=1 - arm)

    def test_draw_from_worked_example_state(self, tmp_path):
        store = TrialStore(str(tmp_path))
        config = binomial_config("golden", arms=("Control", "A", "B", "C"))
        create_trial(store, config)
        y = (10, 9, 14, 13)
        n = (20, 20, 22, 21)
        patient = 0
        for arm in range(4):
            outcomes = [1] * y[arm] + [0] * (n[arm] - y[arm])
            for outcome in outcomes:
                patient += 1
                record_outcome(store, "golden", patient, outcome, arm=arm, external_arm=True)
        alloc, _, next_patient = draw_allocation(store, "golden", allow_pending=False)
        assert next_patient == 1  # all outcomes were external; first draw
        assert alloc.as_array() == pytest.approx([0.236, 0.231, 0.270, 0.263], abs=1e-3)


class TestEcmoStepBehaviors:
    def test_exact_method_first_event_increases_allocation(self, tmp_path):
        store = TrialStore(str(tmp_path))
        create_trial(store, binomial_config("ecmo-x", arms=("Control", "ECMO")))
        snap0 = get_snapshot(store, "ecmo-x")
        snap1 = record_outcome(store, "ecmo-x", 1, 1, arm=1, external_arm=True)
        assert snap1.allocation.probs[1] > snap0.allocation.probs[1]
        assert snap1.allocation.probs[1] > 0.5

    def test_normal_yates_first_event_dips(self, tmp_path):
        store = TrialStore(str(tmp_path))
        config = TrialConfig(
            "ecmo-n",
            ("Control", "ECMO"),
            PolicySpec(method="point_null_normal", p_null=0.5, estimator="yates"),
            seed=3,
        )
        create_trial(store, config)
        snap0 = get_snapshot(store, "ecmo-n")
        snap1 = record_outcome(store, "ecmo-n", 1, 1, arm=1, external_arm=True)
        assert snap1.allocation.probs[1] < snap0.allocation.probs[1]


class TestEventSourcing:
    def _run_some_events(self, store, trial_id):
        create_trial(store, binomial_config(trial_id, seed=21))
        rng = np.random.default_rng(2)
        for patient in range(1, 9):
            _, arm, _ = draw_allocation(store, trial_id)
            record_outcome(store, trial_id, patient, int(rng.integers(0, 2)), arm=arm)

    def test_snapshot_replay_equality(self, tmp_path):
        store = TrialStore(str(tmp_path))
        self._run_some_events(store, "law")
        snap = get_snapshot(store, "law")
        fresh = TrialStore(str(tmp_path))  # new instance, same files
        replayed = get_snapshot(fresh, "law")
        assert replayed == snap

    def test_log_line_format(self, tmp_path):
        store = TrialStore(str(tmp_path))
        self._run_some_events(store, "fmt")
        lines = (tmp_path / "fmt.ndjson").read_text().strip().splitlines()
        seqs = []
        for line in lines:
            obj = json.loads(line)
            assert obj["v"] == 1
            assert set(("seq", "ts", "kind")) <= set(obj)
            seqs.append(obj["seq"])
        assert seqs == list(range(1, len(lines) + 1))

    def test_bf_trace_matches_recomputation(self, tmp_path):
        from brar.binomial import BetaPriorSet, BinomialData, brar_binomial

        store = TrialStore(str(tmp_path))
        self._run_some_events(store, "bf")
        history = evidence_history(store, "bf")
        events = store.read("bf")
        outcomes = [
            (ev.payload["arm"], ev.payload["outcome"])
            for ev in events
            if ev.kind == "outcome_recorded"
        ]
        y = [0, 0]
        n = [0, 0]
        for t in range(len(outcomes) + 1):
            if t > 0:
                arm, out = outcomes[t - 1]
                n[arm] += 1
                y[arm] += out
            evidence = brar_binomial(BinomialData(y, n), BetaPriorSet.uniform(2), 0.5).evidence
            assert history["posterior_trace"][t] == pytest.approx(
                list(evidence.posterior), abs=1e-12
            )
            assert history["log_bf_vs_null_trace"][t] == pytest.approx(
                list(evidence.log_bf_array()[:, 1]), abs=1e-12
            )


class TestEcmoReplay:
    def test_end_of_trial_posteriors(self):
        traces = replay_ecmo((0.0, 0.5), method="exact")
        assert traces["p_null"]["0"]["pr_hplus"][-1] == pytest.approx(0.99, abs=0.02)
        assert traces["p_null"]["0.5"]["pr_hplus"][-1] == pytest.approx(0.86, abs=0.03)

    def test_exact_alloc_nondecreasing_from_patient_three(self):
        traces = replay_ecmo((0.0, 0.25, 0.5, 0.75), method="exact")
        for tr in traces["p_null"].values():
            alloc = tr["allocation"]
            for t in range(3, len(alloc)):
                assert alloc[t] >= alloc[t - 1] - 1e-12

    def test_p_null_one_static(self):
        traces = replay_ecmo((1.0,), method="exact")
        assert traces["p_null"]["1"]["allocation"] == [0.5] * 13

    def test_pointwise_ordering_in_p_null(self):
        for method in ("exact", "normal"):
            traces = replay_ecmo((0.0, 0.25, 0.5, 0.75), method=method)
            grid = ["0", "0.25", "0.5", "0.75"]
            for lo, hi in zip(grid, grid[1:]):
                a = traces["p_null"][lo]["allocation"]
                b = traces["p_null"][hi]["allocation"]
                for t in range(len(a)):
                    assert abs(b[t] - 0.5) <= abs(a[t] - 0.5) + 1e-12

    def test_normal_dip_and_recovery(self):
        traces = replay_ecmo((0.5,), method="normal")
        alloc = traces["p_null"]["0.5"]["allocation"]
        assert alloc[1] < alloc[0]
        for t in range(2, 12):
            assert alloc[t + 1] > alloc[t]

    def test_rpw_comparator_trace(self):
        traces = replay_ecmo((0.5,), method="exact")
        rpw = traces["rpw"]
        # urn (1, 1): success on treatment, then control death feeds treatment
        assert rpw[0] == pytest.approx(0.5)
        assert rpw[1] == pytest.approx(2 / 3, abs=1e-12)
        assert rpw[2] == pytest.approx(3 / 4, abs=1e-12)
        assert rpw[-1] == pytest.approx(13 / 14, abs=1e-12)

    def test_csv_export(self):
        text = ecmo_replay_csv(replay_ecmo((0.0, 1.0), method="exact"))
        lines = text.strip().splitlines()
        assert lines[0] == "patient,series,allocation_treatment,pr_hplus"
        assert len(lines) == 1 + 2 * 13 + 13  # two p_null traces + rpw

    def test_bundled_sequence(self):
        assert ECMO_EVENTS[0] == (1, 1)
        assert ECMO_EVENTS[1] == (0, 0)
        assert all(ev == (1, 1) for ev in ECMO_EVENTS[2:])
        assert len(ECMO_EVENTS) == 12


class TestHttpApi:
    @pytest.fixture()
    def client(self, tmp_path):
        return TestClient(create_app(str(tmp_path)))

    def test_healthz(self, client):
        res = client.get("/healthz")
        assert res.status_code == 200
        assert res.json() == {"status": "ok"}

    def test_create_and_get(self, client):
        body = {
            "id": "web",
            "arms": ["Control", "Treatment"],
            "policy": {"method": "point_null_binomial", "p_null": 0.5},
            "prior": {"a0": 1, "b0": 1, "a": [1, 1], "b": [1, 1]},
            "seed": 7,
        }
        res = client.post("/trials", json=body)
        assert res.status_code == 201
        assert res.json()["allocation"] == pytest.approx([0.5, 0.5])
        res = client.get("/trials/web")
        assert res.status_code == 200
        assert res.json()["counts"] == {"y": [0, 0], "n": [0, 0]}

    def test_draw_outcome_evidence_cycle(self, client):
        body = {
            "id": "cycle",
            "arms": ["Control", "Treatment"],
            "policy": {"method": "point_null_binomial", "p_null": 0.5},
            "seed": 1,
        }
        assert client.post("/trials", json=body).status_code == 201
        draw = client.post("/trials/cycle/draw", json={}).json()
        assert draw["patient"] == 1
        res = client.post(
            "/trials/cycle/outcomes",
            json={"patient": 1, "arm": draw["arm"], "outcome": 1},
        )
        assert res.status_code == 200
        snap = res.json()
        assert snap["counts"]["n"][draw["arm"]] == 1
        ev = client.get("/trials/cycle/evidence", params={"history": "true"}).json()
        assert "history" in ev
        assert len(ev["history"]["posterior_trace"]) == 2

    def test_not_found_shape(self, client):
        res = client.get("/trials/nope")
        assert res.status_code == 404
        assert res.json()["code"] == "not_found"
        assert "message" in res.json()

    def test_conflict_shape(self, client):
        body = {
            "id": "c1",
            "arms": ["Control", "Treatment"],
            "policy": {"method": "equal"},
        }
        assert client.post("/trials", json=body).status_code == 201
        res = client.post("/trials", json=body)
        assert res.status_code == 409
        assert res.json()["code"] == "conflict"

    def test_validation_shape(self, client):
        res = client.post(
            "/trials",
            json={"id": "v", "arms": ["one"], "policy": {"method": "equal"}},
        )
        assert res.status_code == 422
        assert res.json()["code"] == "validation"
