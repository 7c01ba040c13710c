"""Sequential-trial simulation harness.

One repetition randomizes patients one at a time: the allocation for patient
i is computed from the preceding i-1 outcomes, the arm is drawn from it by
inverse CDF, and the outcome is Bernoulli with the arm's true success
probability. Conditions aggregate repetitions into the six performance
measures (success rate, extreme-probability rate, negative imbalance, bias,
coverage, rejection rate) with Monte Carlo standard errors.

Reproducibility contract: every repetition's randomness flows from a
counter-based generator keyed by (master seed, condition id, repetition
index), so grid outputs are byte-identical regardless of worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .freq import rate_diff_wald
from .policies import EvidenceEngines, PolicySpec, allocation_from_counts

__all__ = [
    "SimCondition",
    "RepetitionResult",
    "MetricsSummary",
    "run_repetition",
    "run_condition",
    "run_grid",
    "default_grid",
    "grid_to_csv",
    "grid_to_json",
]

_EXTREME_LO = 0.1
_EXTREME_HI = 0.9
_EXTREME_EPS = 1e-9


@dataclass(frozen=True)
class SimCondition:
    """One cell of the simulation grid."""

    cond_id: str
    n: int
    k: int
    theta1: float
    policy: PolicySpec
    n_sim: int
    seed: int
    theta_c: float = 0.25
    theta_rest: float = 0.3

    def __post_init__(self) -> None:
        if self.n < 1 or self.k < 1 or self.n_sim < 1:
            raise InvalidArgumentError("n, k, and n_sim must be >= 1")
        for p in (self.theta1, self.theta_c, self.theta_rest):
            if not 0.0 < p < 1.0:
                raise InvalidArgumentError("success probabilities must lie in (0, 1)")

    def theta(self) -> np.ndarray:
        return np.array([self.theta_c, self.theta1] + [self.theta_rest] * (self.k - 1))

    @property
    def rd1_true(self) -> float:
        return self.theta1 - self.theta_c


@dataclass(frozen=True)
class RepetitionResult:
    successes: int
    extreme_steps: int
    n_arm: tuple
    rd1_estimate: float
    ci_covers: bool
    rejected: bool
    fallback_steps: int
    degenerate: bool


@dataclass(frozen=True)
class MetricsSummary:
    """Performance measures for one condition, with MCSEs.

    Proportion metrics use sqrt(p (1 - p) / n_sim); mean metrics use the
    sample standard deviation over repetitions divided by sqrt(n_sim).
    """

    rs_mean: float
    rep_mean: float
    s01: float
    bias: float
    coverage: float
    rejection_rate: float
    mcse_rs: float
    mcse_rep: float
    mcse_s01: float
    mcse_bias: float
    mcse_coverage: float
    mcse_rejection: float
    fallback_rate: float
    n_sim: int
    degenerate_reps: int

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _rep_rng(cond: SimCondition, rep_index: int) -> np.random.Generator:
    cond_hash = zlib.crc32(cond.cond_id.encode("utf-8"))
    seq = np.random.SeedSequence((int(cond.seed), cond_hash, int(rep_index)))
    return np.random.Generator(np.random.Philox(seq))


def run_repetition(cond: SimCondition, rep_index: int) -> RepetitionResult:
    """Simulate one trial under the condition's policy."""
    theta = cond.theta()
    m = cond.k + 1
    rng = _rep_rng(cond, rep_index)
    y = [0] * m
    n_arm = [0] * m
    successes = 0
    extreme_steps = 0
    fallback_steps = 0
    engines = EvidenceEngines()
    for i in range(1, cond.n + 1):
        decision = allocation_from_counts(
            y, n_arm, cond.policy, engines, patient_index=i, seed=cond.seed
        )
        probs = decision.allocation.as_array()
        if np.any(probs < _EXTREME_LO - _EXTREME_EPS) or np.any(probs > _EXTREME_HI + _EXTREME_EPS):
            extreme_steps += 1
        if decision.fallback:
            fallback_steps += 1
        u = rng.random()
        arm = int(np.searchsorted(np.cumsum(probs), u, side="right"))
        arm = min(arm, m - 1)
        outcome = int(rng.random() < theta[arm])
        n_arm[arm] += 1
        y[arm] += outcome
        successes += outcome

    if n_arm[0] >= 1 and n_arm[1] >= 1:
        wald = rate_diff_wald(y[1], n_arm[1], y[0], n_arm[0])
        covers = bool(wald.ci_lo <= cond.rd1_true <= wald.ci_hi)
        return RepetitionResult(
            successes,
            extreme_steps,
            tuple(n_arm),
            wald.estimate,
            covers,
            wald.reject,
            fallback_steps,
            wald.degenerate,
        )
    return RepetitionResult(
        successes, extreme_steps, tuple(n_arm), float("nan"), False, False, fallback_steps, True
    )


def _summarize(cond: SimCondition, reps: list[RepetitionResult]) -> MetricsSummary:
    n_sim = len(reps)
    n = cond.n
    rs = np.array([r.successes / n for r in reps])
    rep = np.array([r.extreme_steps / n for r in reps])
    n1 = np.array([r.n_arm[1] for r in reps], dtype=float)
    s01_ind = ((n - n1) / cond.k - n1) > 0.1 * n
    rd1 = np.array([r.rd1_estimate for r in reps])
    covers = np.array([r.ci_covers for r in reps], dtype=float)
    rejects = np.array([r.rejected for r in reps], dtype=float)
    fallback = np.array([r.fallback_steps / n for r in reps])
    ok = ~np.isnan(rd1)
    degenerate = int(np.sum([r.degenerate for r in reps]))

    def prop(x: np.ndarray) -> tuple[float, float]:
        p = float(np.mean(x))
        return p, math.sqrt(p * (1.0 - p) / n_sim)

    def mean_sd(x: np.ndarray) -> tuple[float, float]:
        mu = float(np.mean(x))
        sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
        return mu, sd / math.sqrt(x.size)

    rs_mean, mcse_rs = mean_sd(rs)
    rep_mean, mcse_rep = mean_sd(rep)
    s01, mcse_s01 = prop(s01_ind.astype(float))
    if ok.any():
        bias_mean, mcse_bias = mean_sd(rd1[ok])
        bias = bias_mean - cond.rd1_true
    else:
        bias, mcse_bias = float("nan"), float("nan")
    coverage, mcse_cov = prop(covers[ok]) if ok.any() else (float("nan"), float("nan"))
    rejection, mcse_rej = prop(rejects)
    return MetricsSummary(
        rs_mean,
        rep_mean,
        s01,
        bias,
        coverage,
        rejection,
        mcse_rs,
        mcse_rep,
        mcse_s01,
        mcse_bias,
        mcse_cov,
        mcse_rej,
        float(np.mean(fallback)),
        n_sim,
        degenerate,
    )


def _rep_range(cond: SimCondition, start: int, stop: int) -> list[RepetitionResult]:
    return [run_repetition(cond, r) for r in range(start, stop)]


def run_condition(cond: SimCondition, workers: int = 1) -> MetricsSummary:
    """Run all repetitions of one condition; deterministic for any worker count."""
    reps = _collect_reps(cond, workers)
    return _summarize(cond, reps)


def _collect_reps(cond: SimCondition, workers: int) -> list[RepetitionResult]:
    if workers <= 1:
        return _rep_range(cond, 0, cond.n_sim)
    chunk = max(1, math.ceil(cond.n_sim / (workers * 4)))
    bounds = [(s, min(s + chunk, cond.n_sim)) for s in range(0, cond.n_sim, chunk)]
    out: list[list[RepetitionResult]] = [None] * len(bounds)  # type: ignore[list-item]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(_rep_range, cond, s, e): i for i, (s, e) in enumerate(bounds)}
        for fut, idx in futures.items():
            out[idx] = fut.result()
    return [r for chunk_res in out for r in chunk_res]


def run_grid(
    conditions: list[SimCondition],
    workers: int | None = None,
    csv_path: str | None = None,
    json_path: str | None = None,
) -> list[tuple[SimCondition, MetricsSummary]]:
    """Run a list of conditions, optionally streaming rows to CSV as they finish.

    Rows are written in condition order after each condition completes, so a
    failure preserves a partial results file.
    """
    if not conditions:
        raise InvalidArgumentError("empty condition grid")
    workers = workers or os.cpu_count() or 1
    results: list[tuple[SimCondition, MetricsSummary]] = []
    csv_file = open(csv_path, "w", newline="") if csv_path else None
    writer = None
    try:
        for cond in conditions:
            metrics = run_condition(cond, workers=workers)
            results.append((cond, metrics))
            if csv_file is not None:
                if writer is None:
                    writer = csv.writer(csv_file)
                    writer.writerow(_CSV_HEADER)
                writer.writerow(_csv_row(cond, metrics))
                csv_file.flush()
    finally:
        if csv_file is not None:
            csv_file.close()
    if json_path:
        with open(json_path, "w") as fh:
            fh.write(grid_to_json(results))
    return results


_CSV_HEADER = [
    "cond_id",
    "method",
    "p_null",
    "estimator",
    "burn_in",
    "cap",
    "power",
    "n",
    "k",
    "theta1",
    "theta_c",
    "theta_rest",
    "rd1_true",
    "n_sim",
    "seed",
    "rs_mean",
    "mcse_rs",
    "rep_mean",
    "mcse_rep",
    "s01",
    "mcse_s01",
    "bias",
    "mcse_bias",
    "coverage",
    "mcse_coverage",
    "rejection_rate",
    "mcse_rejection",
    "fallback_rate",
    "degenerate_reps",
]


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _csv_row(cond: SimCondition, m: MetricsSummary) -> list[str]:
    pol = cond.policy
    power = json.dumps(pol.power.to_json()) if pol.power else ""
    cap = f"{pol.cap[0]:g}:{pol.cap[1]:g}" if pol.cap else ""
    return [
        cond.cond_id,
        pol.method,
        _fmt(pol.p_null) if pol.method.startswith("point_null") else "",
        pol.estimator if pol.method == "point_null_normal" else "",
        str(pol.burn_in),
        cap,
        power,
        str(cond.n),
        str(cond.k),
        _fmt(cond.theta1),
        _fmt(cond.theta_c),
        _fmt(cond.theta_rest),
        _fmt(cond.rd1_true),
        str(cond.n_sim),
        str(cond.seed),
        _fmt(m.rs_mean),
        _fmt(m.mcse_rs),
        _fmt(m.rep_mean),
        _fmt(m.mcse_rep),
        _fmt(m.s01),
        _fmt(m.mcse_s01),
        _fmt(m.bias),
        _fmt(m.mcse_bias),
        _fmt(m.coverage),
        _fmt(m.mcse_coverage),
        _fmt(m.rejection_rate),
        _fmt(m.mcse_rejection),
        _fmt(m.fallback_rate),
        str(m.degenerate_reps),
    ]


def grid_to_csv(results: list[tuple[SimCondition, MetricsSummary]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(_CSV_HEADER)
    for cond, metrics in results:
        writer.writerow(_csv_row(cond, metrics))
    return buf.getvalue()


def grid_to_json(results: list[tuple[SimCondition, MetricsSummary]]) -> str:
    rows = []
    for cond, metrics in results:
        rows.append(
            {
                "cond_id": cond.cond_id,
                "policy": cond.policy.to_json(),
                "n": cond.n,
                "k": cond.k,
                "theta1": cond.theta1,
                "theta_c": cond.theta_c,
                "theta_rest": cond.theta_rest,
                "rd1_true": cond.rd1_true,
                "n_sim": cond.n_sim,
                "seed": cond.seed,
                "metrics": metrics.to_json(),
            }
        )
    return json.dumps({"results": rows}, indent=2, allow_nan=True)


def default_grid(
    policies: list[PolicySpec],
    n_sim: int,
    seed: int,
    ns: tuple = (200, 654),
    ks: tuple = (1, 2, 3),
    theta1s: tuple = (0.25, 0.35, 0.45),
) -> list[SimCondition]:
    """The full factorial condition grid crossed with the given policies."""
    conditions = []
    for n in ns:
        for k in ks:
            for theta1 in theta1s:
                for pol in policies:
                    if pol.power is not None and pol.power.ramp and pol.n_max is None:
                        pol = PolicySpec(
                            method=pol.method,
                            p_null=pol.p_null,
                            burn_in=pol.burn_in,
                            cap=pol.cap,
                            power=pol.power,
                            baseline=pol.baseline,
                            estimator=pol.estimator,
                            n_max=n,
                        )
                    label = pol.method
                    if pol.method.startswith("point_null"):
                        label += f"_p{pol.p_null:g}"
                    if pol.cap:
                        label += "_cap"
                    if pol.power:
                        label += "_pow" + ("Ramp" if pol.power.ramp else f"{pol.power.constant:g}")
                    if pol.burn_in:
                        label += f"_burn{pol.burn_in}"
                    cond_id = f"n{n}_k{k}_t{theta1:g}_{label}"
                    conditions.append(
                        SimCondition(cond_id, n, k, theta1, pol, n_sim, seed)
                    )
    return conditions
