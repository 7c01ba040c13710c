"""Command-line interface.

Subcommands:
  brar-binomial   exact point null RAR from counts (JSON in, report or JSON out)
  brar-normal     normal-method RAR from effect estimates (JSON in/out)
  simulate        run a simulation grid to CSV/JSON
  trial           create/record/draw/status/export against a trial store
  ecmo-replay     allocation and posterior traces for the bundled sequence
  serve           run the HTTP service
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .binomial import BetaPriorSet, BinomialData, brar_binomial, format_binomial_report
from .normal import MultiEffectEstimate, MvnPrior, default_mvn_prior, multi_group_allocation
from .policies import PolicySpec
from .simulate import SimCondition, grid_to_csv, grid_to_json, run_grid
from .trial import (
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


def _read_json(path: str) -> dict:
    if path == "-":
        return json.load(sys.stdin)
    with open(path) as fh:
        return json.load(fh)


def _write_out(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_binomial(args: argparse.Namespace) -> int:
    obj = _read_json(args.input)
    data = BinomialData(obj["y"], obj["n"])
    m = data.n_arms
    prior = BetaPriorSet(
        obj.get("a0", 1.0),
        obj.get("b0", 1.0),
        obj.get("a", [1.0] * m),
        obj.get("b", [1.0] * m),
    )
    result = brar_binomial(data, prior, float(obj.get("p_null", 0.5)))
    if args.json:
        _write_out(json.dumps(result.to_json(), indent=2), args.out)
    else:
        _write_out(format_binomial_report(result), args.out)
    return 0


def _cmd_normal(args: argparse.Namespace) -> int:
    obj = _read_json(args.input)
    theta = np.atleast_1d(np.asarray(obj["theta_hat"], dtype=float))
    k = theta.size
    cov = obj.get("cov")
    if cov is None and "se" in obj:
        cov = np.diag(np.square(np.atleast_1d(np.asarray(obj["se"], dtype=float))))
    est = MultiEffectEstimate(theta, cov)
    prior_obj = obj.get("prior")
    if prior_obj is None:
        prior = default_mvn_prior(k)
    else:
        prior = MvnPrior(prior_obj["mean"], prior_obj["cov"])
    evidence, allocation = multi_group_allocation(
        est, prior, float(obj.get("p_null", 0.5)), seed=int(obj.get("seed", 0))
    )
    out = {**evidence.to_json(), **allocation.to_json()}
    _write_out(json.dumps(out, indent=2), args.out)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    grid_obj = _read_json(args.grid)
    rows = grid_obj["conditions"] if isinstance(grid_obj, dict) else grid_obj
    conditions = []
    for i, row in enumerate(rows):
        policy = PolicySpec.from_json(row["policy"])
        conditions.append(
            SimCondition(
                cond_id=row.get("cond_id", f"cond{i}"),
                n=int(row["n"]),
                k=int(row["k"]),
                theta1=float(row["theta1"]),
                policy=policy,
                n_sim=int(row.get("n_sim", args.nsim)),
                seed=int(row.get("seed", args.seed)),
                theta_c=float(row.get("theta_c", 0.25)),
                theta_rest=float(row.get("theta_rest", 0.3)),
            )
        )
    results = run_grid(conditions, workers=args.workers, csv_path=args.out)
    if args.json_out:
        with open(args.json_out, "w") as fh:
            fh.write(grid_to_json(results))
    if not args.out:
        sys.stdout.write(grid_to_csv(results))
    return 0


def _cmd_trial(args: argparse.Namespace) -> int:
    store = TrialStore(args.store)
    if args.action == "create":
        config = TrialConfig.from_json(_read_json(args.config))
        trial_id = create_trial(store, config)
        print(json.dumps(get_snapshot(store, trial_id).to_json(), indent=2))
    elif args.action == "draw":
        allocation, arm, patient = draw_allocation(
            store, args.id, patient=args.patient, allow_pending=args.allow_pending
        )
        print(
            json.dumps(
                {"patient": patient, "allocation": list(allocation.probs), "arm": arm}, indent=2
            )
        )
    elif args.action == "record":
        snapshot = record_outcome(
            store,
            args.id,
            args.patient,
            args.outcome,
            arm=args.arm,
            external_arm=args.external_arm,
        )
        print(json.dumps(snapshot.to_json(), indent=2))
    elif args.action == "status":
        out = get_snapshot(store, args.id).to_json()
        if args.history:
            out["history"] = evidence_history(store, args.id)
        print(json.dumps(out, indent=2))
    elif args.action == "export":
        _write_out(store.read_raw(args.id), args.out)
    return 0


def _cmd_ecmo(args: argparse.Namespace) -> int:
    grid = [float(v) for v in args.pnull.split(",")]
    traces = replay_ecmo(grid, method=args.method)
    if args.json:
        _write_out(json.dumps(traces, indent=2), args.out)
    else:
        _write_out(ecmo_replay_csv(traces), args.out)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(args.store), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="brar", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("brar-binomial", help="exact point null RAR from counts")
    p.add_argument("input", help="JSON input path or - for stdin")
    p.add_argument("--json", action="store_true", help="machine output instead of the report")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_binomial)

    p = sub.add_parser("brar-normal", help="normal-method RAR from effect estimates")
    p.add_argument("input", help="JSON input path or - for stdin")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_normal)

    p = sub.add_parser("simulate", help="run a simulation grid")
    p.add_argument("--grid", required=True, help="JSON grid file")
    p.add_argument("--nsim", type=int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None, help="CSV output path")
    p.add_argument("--json-out", default=None, help="JSON output path")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("trial", help="manage sequential trials")
    p.add_argument("action", choices=["create", "draw", "record", "status", "export"])
    p.add_argument("--store", default="./trials")
    p.add_argument("--config", default=None, help="trial config JSON (create)")
    p.add_argument("--id", default=None)
    p.add_argument("--patient", type=int, default=None)
    p.add_argument("--arm", type=int, default=None)
    p.add_argument("--outcome", type=int, default=None, choices=[0, 1])
    p.add_argument("--external-arm", action="store_true")
    p.add_argument("--allow-pending", action="store_true")
    p.add_argument("--history", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_trial)

    p = sub.add_parser("ecmo-replay", help="replay the bundled trial sequence")
    p.add_argument("--pnull", default="0,0.25,0.5,0.75,1")
    p.add_argument("--method", choices=["exact", "normal"], default="exact")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_ecmo)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--store", default="./trials")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
