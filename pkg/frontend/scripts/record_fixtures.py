"""Record API fixtures for the console's snapshot tests.

Drives the real trial service in-process and dumps the JSON responses the
browser console would receive, so UI tests compare rendered output against
genuine server payloads. Re-run after server-side changes:

    python frontend/scripts/record_fixtures.py
"""

import json
import pathlib
import tempfile

from fastapi.testclient import TestClient

from brar.service import create_app
from brar.trial import ECMO_EVENTS, replay_ecmo

OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def dump(name: str, payload) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / f"{name}.json").write_text(json.dumps(payload, indent=2) + "\n")
    print(f"wrote fixtures/{name}.json")


def main() -> None:
    with tempfile.TemporaryDirectory() as root:
        client = TestClient(create_app(root))

        res = client.post(
            "/trials",
            json={
                "id": "two-arm-default",
                "arms": ["Control", "Treatment"],
                "policy": {"method": "point_null_binomial", "p_null": 0.5},
                "prior": {"a0": 1, "b0": 1, "a": [1, 1], "b": [1, 1]},
                "seed": 11,
            },
        )
        assert res.status_code == 201, res.text
        dump("snapshot_2arm_initial", res.json())

        res = client.post(
            "/trials",
            json={
                "id": "four-arm-preset",
                "arms": ["Control", "Treatment 1", "Treatment 2", "Treatment 3"],
                "policy": {"method": "point_null_binomial", "p_null": 0.5},
                "seed": 4,
            },
        )
        assert res.status_code == 201, res.text
        dump("snapshot_4arm_initial", res.json())

        res = client.post(
            "/trials",
            json={
                "id": "equalized",
                "arms": ["Control", "Treatment"],
                "policy": {"method": "point_null_binomial", "p_null": 1.0},
                "seed": 2,
            },
        )
        assert res.status_code == 201, res.text
        dump("snapshot_pnull_one", res.json())

        # a mid-trial snapshot with one draw + outcome recorded
        draw = client.post("/trials/two-arm-default/draw", json={}).json()
        dump("draw_patient1", draw)
        snap = client.post(
            "/trials/two-arm-default/outcomes",
            json={"patient": 1, "arm": draw["arm"], "outcome": 1},
        ).json()
        dump("snapshot_after_outcome1", snap)

        # the 12-patient walkthrough: evidence after each recorded outcome
        res = client.post(
            "/trials",
            json={
                "id": "ecmo-preset",
                "arms": ["Control", "ECMO"],
                "policy": {"method": "point_null_binomial", "p_null": 0.5},
                "seed": 9,
            },
        )
        assert res.status_code == 201, res.text
        steps = [client.get("/trials/ecmo-preset").json()]
        for patient, (arm, outcome) in enumerate(ECMO_EVENTS, start=1):
            snap = client.post(
                "/trials/ecmo-preset/outcomes",
                json={"patient": patient, "arm": arm, "outcome": outcome, "external_arm": True},
            ).json()
            steps.append(snap)
        history = client.get(
            "/trials/ecmo-preset/evidence", params={"history": "true"}
        ).json()
        dump("ecmo_walkthrough", {"steps": steps, "final": history})

        # the library-level replay trace the walkthrough must reproduce
        trace = replay_ecmo((0.5,), method="exact")
        dump("ecmo_server_trace", trace)

        # error shapes the console must surface
        dump(
            "error_conflict",
            {
                "status": 409,
                "body": client.post(
                    "/trials/ecmo-preset/outcomes",
                    json={"patient": 1, "arm": 1, "outcome": 1},
                ).json(),
            },
        )
        dump(
            "error_validation",
            {
                "status": 422,
                "body": client.post(
                    "/trials",
                    json={"id": "bad", "arms": ["only"], "policy": {"method": "equal"}},
                ).json(),
            },
        )


if __name__ == "__main__":
    main()
