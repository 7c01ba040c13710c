"""Command-line surface: subcommands produce the documented formats."""

import json

import pytest

from brar.cli import main

GOLDEN_INPUT = {
    "y": [10, 9, 14, 13],
    "n": [20, 20, 22, 21],
    "a0": 1,
    "b0": 1,
    "a": [1, 1, 1, 1],
    "b": [1, 1, 1, 1],
    "p_null": 0.5,
}


class TestBinomialCommand:
    def test_report_output(self, tmp_path, capsys):
        path = tmp_path / "in.json"
        path.write_text(json.dumps(GOLDEN_INPUT))
        assert main(["brar-binomial", str(path)]) == 0
        out = capsys.readouterr().out
        assert "PRIOR PROBABILITIES" in out
        assert "RANDOMIZATION PROBABILITIES" in out
        assert "0.236" in out

    def test_json_output(self, tmp_path, capsys):
        path = tmp_path / "in.json"
        path.write_text(json.dumps(GOLDEN_INPUT))
        assert main(["brar-binomial", str(path), "--json"]) == 0
        obj = json.loads(capsys.readouterr().out)
        assert obj["posterior"][1] == pytest.approx(0.91148, abs=5e-4)
        assert obj["allocation"][2] == pytest.approx(0.270, abs=1e-3)
        assert obj["hypotheses"] == ["H-", "H0", "H+1", "H+2", "H+3"]


class TestNormalCommand:
    def test_documented_schema(self, tmp_path, capsys):
        payload = {
            "theta_hat": [0.3, 0.1],
            "cov": [[0.04, 0.0], [0.0, 0.04]],
            "prior": {"mean": [0.0, 0.0], "cov": [[1.0, 0.5], [0.5, 1.0]]},
            "p_null": 0.5,
            "seed": 4,
        }
        path = tmp_path / "normal.json"
        path.write_text(json.dumps(payload))
        assert main(["brar-normal", str(path)]) == 0
        obj = json.loads(capsys.readouterr().out)
        assert len(obj["allocation"]) == 3
        assert sum(obj["allocation"]) == pytest.approx(1.0, abs=1e-9)
        assert obj["posterior"][2] > obj["posterior"][3]  # treatment 1 ahead


class TestSimulateCommand:
    def test_grid_run_to_csv(self, tmp_path):
        grid = {
            "conditions": [
                {
                    "cond_id": "demo",
                    "n": 30,
                    "k": 1,
                    "theta1": 0.25,
                    "policy": {"method": "equal"},
                }
            ]
        }
        gpath = tmp_path / "grid.json"
        gpath.write_text(json.dumps(grid))
        out = tmp_path / "results.csv"
        jout = tmp_path / "results.json"
        code = main(
            [
                "simulate",
                "--grid",
                str(gpath),
                "--nsim",
                "8",
                "--seed",
                "42",
                "--out",
                str(out),
                "--json-out",
                str(jout),
                "--workers",
                "1",
            ]
        )
        assert code == 0
        rows = out.read_text().strip().splitlines()
        assert rows[0].startswith("cond_id,method")
        assert rows[1].startswith("demo,equal")
        assert json.loads(jout.read_text())["results"][0]["cond_id"] == "demo"


class TestTrialCommands:
    def test_create_draw_record_status_export(self, tmp_path, capsys):
        config = {
            "id": "cli-trial",
            "arms": ["Control", "Treatment"],
            "policy": {"method": "point_null_binomial", "p_null": 0.5},
            "prior": {"a0": 1, "b0": 1, "a": [1, 1], "b": [1, 1]},
            "seed": 2,
        }
        cpath = tmp_path / "config.json"
        cpath.write_text(json.dumps(config))
        store = str(tmp_path / "store")

        assert main(["trial", "create", "--store", store, "--config", str(cpath)]) == 0
        created = json.loads(capsys.readouterr().out)
        assert created["allocation"] == pytest.approx([0.5, 0.5])

        assert main(["trial", "draw", "--store", store, "--id", "cli-trial"]) == 0
        draw = json.loads(capsys.readouterr().out)
        assert draw["patient"] == 1

        assert (
            main(
                [
                    "trial",
                    "record",
                    "--store",
                    store,
                    "--id",
                    "cli-trial",
                    "--patient",
                    "1",
                    "--arm",
                    str(draw["arm"]),
                    "--outcome",
                    "1",
                ]
            )
            == 0
        )
        snap = json.loads(capsys.readouterr().out)
        assert snap["counts"]["n"][draw["arm"]] == 1

        assert main(["trial", "status", "--store", store, "--id", "cli-trial", "--history"]) == 0
        status = json.loads(capsys.readouterr().out)
        assert len(status["history"]["allocation_trace"]) == 2

        out = tmp_path / "log.ndjson"
        assert (
            main(["trial", "export", "--store", store, "--id", "cli-trial", "--out", str(out)])
            == 0
        )
        lines = out.read_text().strip().splitlines()
        assert json.loads(lines[0])["kind"] == "created"


class TestEcmoCommand:
    def test_csv_trace(self, tmp_path):
        out = tmp_path / "trace.csv"
        code = main(
            ["ecmo-replay", "--pnull", "0,0.5,1", "--method", "exact", "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "patient,series,allocation_treatment,pr_hplus"
        assert any("exact_pnull_0.5" in line for line in lines)

    def test_json_trace(self, capsys):
        assert main(["ecmo-replay", "--pnull", "0.5", "--method", "normal", "--json"]) == 0
        obj = json.loads(capsys.readouterr().out)
        assert obj["method"] == "normal"
        assert len(obj["p_null"]["0.5"]["allocation"]) == 13
