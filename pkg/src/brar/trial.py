"""Event-sourced sequential trial sessions.

Each trial is an append-only newline-delimited JSON event log (fsync on
append); snapshots, evidence traces, and drawn arms are all recomputed from
the log, so a crashed-and-recovered service behaves identically. Arm draws
use a counter-based generator keyed by (trial seed, patient index): replays
reproduce the same arm.

Also houses the bundled ECMO data sequence and its replay across prior null
probabilities, exact and normal methods, with the randomized play-the-winner
comparator.
"""

from __future__ import annotations

import datetime as _dt
import io
import json
import math
import os
import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .binomial import BetaPriorSet, BinomialData, brar_binomial
from .errors import InvalidArgumentError, TrialConflictError, TrialNotFoundError
from .freq import logistic_fit, sequential_yates_estimate
from .hypotheses import AllocationVector, EvidenceSummary
from .normal import (
    EffectEstimate,
    MultiEffectEstimate,
    MvnPrior,
    NormalPrior,
    multi_group_evidence,
    two_group_evidence,
)
from .hypotheses import allocation_equal_shrink
from .policies import (
    EvidenceEngines,
    PolicySpec,
    allocation_from_counts,
    rpw_urn_from_counts,
)

__all__ = [
    "TrialConfig",
    "TrialEvent",
    "TrialSnapshot",
    "TrialStore",
    "create_trial",
    "draw_allocation",
    "record_outcome",
    "get_snapshot",
    "evidence_history",
    "ECMO_EVENTS",
    "replay_ecmo",
    "ecmo_replay_csv",
]

_LOG_VERSION = 1

# (arm, outcome) with arm 1 = ECMO treatment, outcome 1 = survival:
# the first newborn received the treatment and survived, the second received
# control and died, and the next ten all received the treatment and survived.
ECMO_EVENTS: tuple = ((1, 1), (0, 0)) + ((1, 1),) * 10


@dataclass(frozen=True)
class TrialConfig:
    """Static configuration of a sequential trial."""

    trial_id: str
    arms: tuple
    policy: PolicySpec
    seed: int = 0
    engines: EvidenceEngines = field(default_factory=EvidenceEngines)

    def __post_init__(self) -> None:
        if not self.trial_id or "/" in self.trial_id:
            raise InvalidArgumentError("trial id must be a nonempty path-safe string")
        arms = tuple(str(a) for a in self.arms)
        if len(arms) < 2:
            raise InvalidArgumentError("a trial needs at least two arms")
        object.__setattr__(self, "arms", arms)
        # Prior and policy method tags must agree.
        if self.policy.method == "point_null_binomial" and self.engines.beta is not None:
            if self.engines.beta.n_arms != len(arms):
                raise InvalidArgumentError("beta prior arm count mismatch")
        if self.policy.method == "point_null_normal" and self.policy.estimator == "yates":
            if len(arms) != 2:
                raise InvalidArgumentError("yates estimator requires exactly two arms")

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    def to_json(self) -> dict:
        out = {
            "id": self.trial_id,
            "arms": list(self.arms),
            "policy": self.policy.to_json(),
            "seed": self.seed,
        }
        if self.engines.beta is not None:
            b = self.engines.beta
            out["prior"] = {"a0": b.a0, "b0": b.b0, "a": list(b.a), "b": list(b.b)}
        elif self.engines.normal is not None:
            out["prior"] = {"mu": self.engines.normal.mu, "tau": self.engines.normal.tau}
        elif self.engines.mvn is not None:
            out["prior"] = {
                "mean": list(self.engines.mvn.mean),
                "cov": [list(r) for r in self.engines.mvn.cov],
            }
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "TrialConfig":
        policy = PolicySpec.from_json(obj["policy"])
        prior = obj.get("prior")
        engines = EvidenceEngines()
        if prior:
            if "a0" in prior:
                engines = EvidenceEngines(
                    beta=BetaPriorSet(prior["a0"], prior["b0"], prior["a"], prior["b"])
                )
            elif "tau" in prior:
                engines = EvidenceEngines(normal=NormalPrior(prior.get("mu", 0.0), prior["tau"]))
            elif "cov" in prior:
                engines = EvidenceEngines(mvn=MvnPrior(prior["mean"], prior["cov"]))
            else:
                raise InvalidArgumentError("unrecognized prior configuration")
        return cls(
            trial_id=str(obj["id"]),
            arms=tuple(obj["arms"]),
            policy=policy,
            seed=int(obj.get("seed", 0)),
            engines=engines,
        )


@dataclass(frozen=True)
class TrialEvent:
    seq: int
    ts: str
    kind: str
    payload: dict

    def to_line(self) -> str:
        return json.dumps({"v": _LOG_VERSION, "seq": self.seq, "ts": self.ts, "kind": self.kind, **self.payload})

    @classmethod
    def from_line(cls, line: str) -> "TrialEvent":
        obj = json.loads(line)
        payload = {k: v for k, v in obj.items() if k not in ("v", "seq", "ts", "kind")}
        return cls(int(obj["seq"]), obj["ts"], obj["kind"], payload)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


class TrialStore:
    """Directory of append-only trial event logs, one writer per trial."""

    def __init__(self, root: str) -> None:
        self.root = root
        os.makedirs(root, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _path(self, trial_id: str) -> str:
        return os.path.join(self.root, f"{trial_id}.ndjson")

    def lock(self, trial_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(trial_id, threading.Lock())

    def exists(self, trial_id: str) -> bool:
        return os.path.exists(self._path(trial_id))

    def list_ids(self) -> list[str]:
        return sorted(
            f[: -len(".ndjson")] for f in os.listdir(self.root) if f.endswith(".ndjson")
        )

    def append(self, trial_id: str, event: TrialEvent) -> None:
        with open(self._path(trial_id), "a") as fh:
            fh.write(event.to_line() + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def read(self, trial_id: str) -> list[TrialEvent]:
        path = self._path(trial_id)
        if not os.path.exists(path):
            raise TrialNotFoundError(f"no trial {trial_id!r}")
        with open(path) as fh:
            return [TrialEvent.from_line(line) for line in fh if line.strip()]

    def read_raw(self, trial_id: str) -> str:
        """The event log verbatim, for export."""
        path = self._path(trial_id)
        if not os.path.exists(path):
            raise TrialNotFoundError(f"no trial {trial_id!r}")
        with open(path) as fh:
            return fh.read()


# ---------------------------------------------------------------------------
# Replay helpers


@dataclass(frozen=True)
class _ReplayState:
    config: TrialConfig
    y: tuple
    n: tuple
    draws: dict  # patient -> arm
    outcomes: dict  # patient -> (arm, outcome)
    last_seq: int


def _replay(events: list[TrialEvent]) -> _ReplayState:
    if not events or events[0].kind != "created":
        raise TrialConflictError("event log must start with a created event")
    config = TrialConfig.from_json(events[0].payload["config"])
    m = config.n_arms
    y = [0] * m
    n = [0] * m
    draws: dict[int, int] = {}
    outcomes: dict[int, tuple] = {}
    for ev in events[1:]:
        if ev.kind == "allocation_drawn":
            draws[int(ev.payload["patient"])] = int(ev.payload["arm"])
        elif ev.kind == "outcome_recorded":
            patient = int(ev.payload["patient"])
            arm = int(ev.payload["arm"])
            outcome = int(ev.payload["outcome"])
            outcomes[patient] = (arm, outcome)
            n[arm] += 1
            y[arm] += outcome
    return _ReplayState(config, tuple(y), tuple(n), draws, outcomes, events[-1].seq)


def _evidence_for_counts(
    config: TrialConfig, y: Sequence[int], n: Sequence[int]
) -> EvidenceSummary | None:
    """Monitoring evidence for the current counts; None when the engine fails.

    Non-evidence policies (equal, fixed, rpw) are monitored with the exact
    binomial engine so the hypothesis traces stay available.
    """
    data = BinomialData(y, n)
    policy = config.policy
    if policy.method == "point_null_normal":
        prior = config.engines.normal_for()
        if policy.estimator == "yates":
            return two_group_evidence(sequential_yates_estimate(data), prior, policy.p_null)
        fit = logistic_fit(data)
        if not fit.converged:
            return None
        coef, cov = fit.coef_array(), fit.cov_array()
        if data.n_arms == 2:
            return two_group_evidence(
                EffectEstimate(coef[1], math.sqrt(cov[1, 1])), prior, policy.p_null
            )
        return multi_group_evidence(
            MultiEffectEstimate(coef[1:], cov[1:, 1:]),
            config.engines.mvn_for(data.n_arms - 1),
            policy.p_null,
            seed=config.seed,
        )
    prior_b = config.engines.beta_for(data.n_arms)
    p_null = policy.p_null if policy.method == "point_null_binomial" else 0.5
    return brar_binomial(data, prior_b, p_null).evidence


@dataclass(frozen=True)
class TrialSnapshot:
    """Current state derived purely from the event log."""

    trial_id: str
    arms: tuple
    y: tuple
    n: tuple
    seq: int
    next_patient: int
    allocation: AllocationVector
    fallback: bool
    evidence: EvidenceSummary | None

    def to_json(self) -> dict:
        return {
            "id": self.trial_id,
            "arms": list(self.arms),
            "counts": {"y": list(self.y), "n": list(self.n)},
            "seq": self.seq,
            "next_patient": self.next_patient,
            "allocation": list(self.allocation.probs),
            "fallback": self.fallback,
            "evidence": self.evidence.to_json() if self.evidence is not None else None,
        }


def _snapshot_from_state(state: _ReplayState) -> TrialSnapshot:
    config = state.config
    decision = allocation_from_counts(
        state.y,
        state.n,
        config.policy,
        config.engines,
        patient_index=sum(state.n) + 1,
        seed=config.seed,
    )
    evidence = _evidence_for_counts(config, state.y, state.n)
    return TrialSnapshot(
        config.trial_id,
        config.arms,
        state.y,
        state.n,
        state.last_seq,
        len(state.draws) + 1,
        decision.allocation,
        decision.fallback,
        evidence,
    )


# ---------------------------------------------------------------------------
# Operations


def create_trial(store: TrialStore, config: TrialConfig) -> str:
    """Persist the created event; the initial snapshot shows the prior allocation."""
    with store.lock(config.trial_id):
        if store.exists(config.trial_id):
            raise TrialConflictError(f"trial {config.trial_id!r} already exists")
        event = TrialEvent(1, _now(), "created", {"config": config.to_json()})
        store.append(config.trial_id, event)
    return config.trial_id


def _draw_arm(config: TrialConfig, patient: int, probs: np.ndarray) -> int:
    seq = np.random.SeedSequence((int(config.seed), int(patient)))
    rng = np.random.Generator(np.random.Philox(seq))
    u = rng.random()
    arm = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    return min(arm, probs.size - 1)


def draw_allocation(
    store: TrialStore, trial_id: str, patient: int | None = None, allow_pending: bool = False
) -> tuple[AllocationVector, int, int]:
    """Compute the next allocation, sample the arm, and persist both.

    Returns (allocation, arm, patient). By default every earlier patient's
    outcome must be recorded; pass ``allow_pending`` to draw ahead.
    """
    with store.lock(trial_id):
        state = _replay(store.read(trial_id))
        next_patient = len(state.draws) + 1
        if patient is None:
            patient = next_patient
        if patient != next_patient:
            raise TrialConflictError(f"next patient to draw is {next_patient}, not {patient}")
        if not allow_pending and len(state.outcomes) < len(state.draws):
            raise TrialConflictError("previous patients have unrecorded outcomes")
        decision = allocation_from_counts(
            state.y,
            state.n,
            state.config.policy,
            state.config.engines,
            patient_index=patient,
            seed=state.config.seed,
        )
        probs = decision.allocation.as_array()
        arm = _draw_arm(state.config, patient, probs)
        event = TrialEvent(
            state.last_seq + 1,
            _now(),
            "allocation_drawn",
            {
                "patient": patient,
                "allocation": list(decision.allocation.probs),
                "arm": arm,
                "rng_counter": patient,
                "fallback": decision.fallback,
            },
        )
        store.append(trial_id, event)
    return decision.allocation, arm, patient


def record_outcome(
    store: TrialStore,
    trial_id: str,
    patient: int,
    outcome: int,
    arm: int | None = None,
    external_arm: bool = False,
) -> TrialSnapshot:
    """Append an outcome and return the recomputed snapshot.

    The patient must have a drawn allocation (unless ``external_arm`` marks an
    externally assigned arm) and outcomes must arrive in patient order.
    """
    if outcome not in (0, 1):
        raise InvalidArgumentError("outcome must be 0 or 1")
    with store.lock(trial_id):
        state = _replay(store.read(trial_id))
        if patient in state.outcomes:
            raise TrialConflictError(f"patient {patient} already has an outcome")
        if patient != len(state.outcomes) + 1:
            raise TrialConflictError(
                f"outcomes must be recorded in order; expected patient {len(state.outcomes) + 1}"
            )
        drawn = state.draws.get(patient)
        if drawn is None and not external_arm:
            raise TrialConflictError(f"no allocation drawn for patient {patient}")
        if arm is None:
            if drawn is None:
                raise InvalidArgumentError("external outcomes must name the arm")
            arm = drawn
        if drawn is not None and arm != drawn and not external_arm:
            raise TrialConflictError(f"patient {patient} was drawn to arm {drawn}, not {arm}")
        if not 0 <= arm < state.config.n_arms:
            raise InvalidArgumentError("arm index out of range")
        event = TrialEvent(
            state.last_seq + 1,
            _now(),
            "outcome_recorded",
            {"patient": patient, "arm": arm, "outcome": outcome},
        )
        store.append(trial_id, event)
        new_state = _replay(store.read(trial_id))
    return _snapshot_from_state(new_state)


def get_snapshot(store: TrialStore, trial_id: str) -> TrialSnapshot:
    return _snapshot_from_state(_replay(store.read(trial_id)))


def evidence_history(store: TrialStore, trial_id: str) -> dict:
    """Per-patient traces: posterior, log BF (vs H0), and allocation.

    Entry t is the state after t recorded outcomes (entry 0 is the prior
    state); each is recomputed from scratch, so the trace is consistent with
    the event-sourcing law by construction.
    """
    state = _replay(store.read(trial_id))
    config = state.config
    ordered = [state.outcomes[p] for p in sorted(state.outcomes)]
    m = config.n_arms
    y = [0] * m
    n = [0] * m
    post_trace = []
    logbf_trace = []
    alloc_trace = []
    fallback_trace = []
    for t in range(len(ordered) + 1):
        if t > 0:
            arm, out = ordered[t - 1]
            n[arm] += 1
            y[arm] += out
        evidence = _evidence_for_counts(config, y, n)
        decision = allocation_from_counts(
            y, n, config.policy, config.engines, patient_index=sum(n) + 1, seed=config.seed
        )
        post_trace.append(list(evidence.posterior) if evidence else None)
        logbf_trace.append(
            [float(v) for v in evidence.log_bf_array()[:, 1]] if evidence else None
        )
        alloc_trace.append(list(decision.allocation.probs))
        fallback_trace.append(decision.fallback)
    return {
        "id": trial_id,
        "arms": list(config.arms),
        "posterior_trace": post_trace,
        "log_bf_vs_null_trace": logbf_trace,
        "allocation_trace": alloc_trace,
        "fallback_trace": fallback_trace,
    }


# ---------------------------------------------------------------------------
# ECMO replay


def _ecmo_engine_evidence(method: str, y, n, p_null: float) -> EvidenceSummary:
    data = BinomialData(y, n)
    if method == "exact":
        return brar_binomial(data, BetaPriorSet.uniform(2), p_null).evidence
    if method == "normal":
        return two_group_evidence(sequential_yates_estimate(data), NormalPrior(0.0, 1.0), p_null)
    raise InvalidArgumentError("method must be 'exact' or 'normal'")


def replay_ecmo(
    p_null_grid: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
    method: str = "exact",
    include_rpw: bool = True,
) -> dict:
    """Allocation and Pr(H+ | y) traces over the bundled 12-patient sequence.

    Entry t of each trace is the state after t patients; the treatment
    allocation is the probability of randomizing the next patient to the
    treatment arm. The uniform-prior exact method and the standard-normal
    prior on the Yates-corrected log odds ratio are available, plus the
    randomized play-the-winner urn the original trial used.
    """
    traces: dict = {"method": method, "patients": list(range(len(ECMO_EVENTS) + 1)), "p_null": {}}
    for p_null in p_null_grid:
        y = [0, 0]
        n = [0, 0]
        alloc_trace = []
        hplus_trace = []
        for t in range(len(ECMO_EVENTS) + 1):
            if t > 0:
                arm, outcome = ECMO_EVENTS[t - 1]
                n[arm] += 1
                y[arm] += outcome
            evidence = _ecmo_engine_evidence(method, y, n, p_null)
            alloc = allocation_equal_shrink(evidence, 1)
            alloc_trace.append(alloc.probs[1])
            hplus_trace.append(evidence.posterior[2])
        traces["p_null"][f"{p_null:g}"] = {
            "allocation": alloc_trace,
            "pr_hplus": hplus_trace,
        }
    if include_rpw:
        y = [0, 0]
        n = [0, 0]
        rpw_trace = []
        for t in range(len(ECMO_EVENTS) + 1):
            if t > 0:
                arm, outcome = ECMO_EVENTS[t - 1]
                n[arm] += 1
                y[arm] += outcome
            rpw_trace.append(rpw_urn_from_counts(y, n).draw_probs().probs[1])
        traces["rpw"] = rpw_trace
    return traces


def ecmo_replay_csv(traces: dict) -> str:
    """Flatten replay traces to CSV (patient, series, value columns)."""
    buf = io.StringIO()
    buf.write("patient,series,allocation_treatment,pr_hplus\n")
    method = traces["method"]
    for label, tr in traces["p_null"].items():
        for t, (a, h) in enumerate(zip(tr["allocation"], tr["pr_hplus"])):
            buf.write(f"{t},{method}_pnull_{label},{a:.10g},{h:.10g}\n")
    if "rpw" in traces:
        for t, a in enumerate(traces["rpw"]):
            buf.write(f"{t},rpw,{a:.10g},\n")
    return buf.getvalue()
