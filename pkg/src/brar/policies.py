"""Allocation policies: evidence-based RAR plus classic comparators.

A policy wraps a base allocation rule (point-null evidence, equal, fixed,
or a randomized play-the-winner urn) with the usual ad hoc modifications:
an equal-randomization burn-in, a power transformation of the probabilities,
and probability capping with renormalization of the uncapped entries.
Evidence-engine failures (e.g. logistic non-convergence on sparse data)
downgrade to equal randomization with a recorded fallback flag; they never
abort a trial.

All state carriers are immutable values; updates return new values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .binomial import BetaPriorSet, BinomialData, brar_binomial
from .errors import InvalidArgumentError
from .freq import logistic_fit, sequential_yates_estimate
from .hypotheses import AllocationVector
from .normal import (
    EffectEstimate,
    MultiEffectEstimate,
    MvnPrior,
    NormalPrior,
    default_mvn_prior,
    multi_group_allocation,
    two_group_allocation,
)

__all__ = [
    "PowerSpec",
    "PolicySpec",
    "RpwUrn",
    "TrialState",
    "EvidenceEngines",
    "AllocationDecision",
    "power_transform",
    "cap_and_renormalize",
    "ramp_exponent",
    "rpw_update",
    "rpw_urn_from_counts",
    "next_allocation",
    "allocation_from_counts",
]

_METHODS = ("equal", "fixed", "rpw", "point_null_binomial", "point_null_normal")


@dataclass(frozen=True)
class PowerSpec:
    """Exponent schedule for tempering allocation probabilities.

    Either a positive constant, or the ramp c = i / (2 n_max) that reaches 1/2
    at the maximal sample size.
    """

    constant: float | None = None
    ramp: bool = False

    def __post_init__(self) -> None:
        if self.ramp == (self.constant is not None):
            raise InvalidArgumentError("specify exactly one of constant or ramp")
        if self.constant is not None and not self.constant > 0:
            raise InvalidArgumentError("power constant must be > 0")

    def exponent(self, patient_index: int, n_max: int | None) -> float:
        if self.constant is not None:
            return self.constant
        if n_max is None or n_max < 1:
            raise InvalidArgumentError("ramp power schedule requires n_max")
        return ramp_exponent(patient_index, n_max)

    def to_json(self) -> dict:
        return {"ramp": True} if self.ramp else {"constant": self.constant}

    @classmethod
    def from_json(cls, obj: dict) -> "PowerSpec":
        if obj.get("ramp"):
            return cls(ramp=True)
        return cls(constant=float(obj["constant"]))


def ramp_exponent(patient_index: int, n_max: int) -> float:
    """c = i / (2 n); equals 1/2 when the current index reaches the maximum."""
    return patient_index / (2.0 * n_max)


@dataclass(frozen=True)
class PolicySpec:
    """Allocation method plus optional burn-in, capping, and power transform."""

    method: str
    p_null: float = 0.5
    burn_in: int = 0
    cap: tuple | None = None
    power: PowerSpec | None = None
    baseline: tuple | None = None
    estimator: str = "logistic"
    n_max: int | None = None

    def __post_init__(self) -> None:
        if self.method not in _METHODS:
            raise InvalidArgumentError(f"unknown method {self.method!r}")
        if math.isnan(self.p_null) or not 0.0 <= self.p_null <= 1.0:
            raise InvalidArgumentError("p_null must lie in [0, 1]")
        if self.burn_in < 0:
            raise InvalidArgumentError("burn_in must be >= 0")
        if self.cap is not None:
            lo, hi = self.cap
            if not 0.0 <= lo < hi <= 1.0:
                raise InvalidArgumentError("cap must satisfy 0 <= lo < hi <= 1")
            object.__setattr__(self, "cap", (float(lo), float(hi)))
        if self.method == "fixed":
            if self.baseline is None:
                raise InvalidArgumentError("fixed method requires a baseline allocation")
            object.__setattr__(self, "baseline", tuple(AllocationVector(self.baseline).probs))
        if self.estimator not in ("logistic", "yates"):
            raise InvalidArgumentError("estimator must be 'logistic' or 'yates'")

    def to_json(self) -> dict:
        out: dict = {"method": self.method}
        if self.method.startswith("point_null"):
            out["p_null"] = self.p_null
        if self.method == "point_null_normal":
            out["estimator"] = self.estimator
        if self.burn_in:
            out["burn_in"] = self.burn_in
        if self.cap is not None:
            out["cap"] = list(self.cap)
        if self.power is not None:
            out["power"] = self.power.to_json()
        if self.baseline is not None:
            out["baseline"] = list(self.baseline)
        if self.n_max is not None:
            out["n_max"] = self.n_max
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "PolicySpec":
        return cls(
            method=obj["method"],
            p_null=float(obj.get("p_null", 0.5)),
            burn_in=int(obj.get("burn_in", 0)),
            cap=tuple(obj["cap"]) if obj.get("cap") is not None else None,
            power=PowerSpec.from_json(obj["power"]) if obj.get("power") else None,
            baseline=tuple(obj["baseline"]) if obj.get("baseline") is not None else None,
            estimator=obj.get("estimator", "logistic"),
            n_max=int(obj["n_max"]) if obj.get("n_max") is not None else None,
        )


@dataclass(frozen=True)
class RpwUrn:
    """Ball counts per arm for the randomized play-the-winner scheme."""

    balls: tuple

    def __init__(self, balls: Sequence[float]) -> None:
        balls = tuple(float(b) for b in balls)
        if len(balls) < 2 or any(b < 0 for b in balls) or sum(balls) <= 0:
            raise InvalidArgumentError("urn needs >= 2 arms and positive total")
        object.__setattr__(self, "balls", balls)

    @classmethod
    def initial(cls, n_arms: int, balls_per_arm: float = 1.0) -> "RpwUrn":
        return cls((balls_per_arm,) * n_arms)

    @property
    def total(self) -> float:
        return sum(self.balls)

    def draw_probs(self) -> AllocationVector:
        t = self.total
        return AllocationVector(tuple(b / t for b in self.balls))


def rpw_update(urn: RpwUrn, arm: int, outcome: int) -> RpwUrn:
    """RPW(1, 1): success adds a ball to the same arm, failure one ball split
    evenly over the other arms. The total always grows by exactly one."""
    m = len(urn.balls)
    if not 0 <= arm < m:
        raise InvalidArgumentError("arm index out of range")
    balls = list(urn.balls)
    if outcome:
        balls[arm] += 1.0
    else:
        share = 1.0 / (m - 1)
        for other in range(m):
            if other != arm:
                balls[other] += share
    return RpwUrn(balls)


def rpw_urn_from_counts(y: Sequence[int], n: Sequence[int], balls_per_arm: float = 1.0) -> RpwUrn:
    """Urn composition after observing the given counts (order-independent)."""
    m = len(y)
    balls = [balls_per_arm] * m
    for arm in range(m):
        balls[arm] += y[arm]
        failures = n[arm] - y[arm]
        share = failures / (m - 1)
        for other in range(m):
            if other != arm:
                balls[other] += share
    return RpwUrn(balls)


@dataclass(frozen=True)
class TrialState:
    """Append-only record of (arm, outcome) events for a fixed set of arms."""

    n_arms: int
    events: tuple = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.n_arms < 2:
            raise InvalidArgumentError("need at least two arms")
        for arm, outcome in self.events:
            if not 0 <= arm < self.n_arms or outcome not in (0, 1):
                raise InvalidArgumentError("invalid event")
        object.__setattr__(self, "events", tuple((int(a), int(o)) for a, o in self.events))

    def with_event(self, arm: int, outcome: int) -> "TrialState":
        return TrialState(self.n_arms, self.events + ((arm, outcome),))

    def counts(self) -> tuple[tuple, tuple]:
        y = [0] * self.n_arms
        n = [0] * self.n_arms
        for arm, outcome in self.events:
            n[arm] += 1
            y[arm] += outcome
        return tuple(y), tuple(n)

    @property
    def n_patients(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class EvidenceEngines:
    """Prior configuration for the evidence-based methods."""

    beta: BetaPriorSet | None = None
    normal: NormalPrior | None = None
    mvn: MvnPrior | None = None

    def beta_for(self, n_arms: int) -> BetaPriorSet:
        return self.beta if self.beta is not None else BetaPriorSet.uniform(n_arms)

    def normal_for(self) -> NormalPrior:
        return self.normal if self.normal is not None else NormalPrior(0.0, 1.0)

    def mvn_for(self, k: int) -> MvnPrior:
        return self.mvn if self.mvn is not None else default_mvn_prior(k)


class AllocationDecision(NamedTuple):
    allocation: AllocationVector
    fallback: bool


# ---------------------------------------------------------------------------
# Modification transforms


def power_transform(probs: AllocationVector, c: float) -> AllocationVector:
    """Temper probabilities to p^c / sum p^c; preserves the argmax."""
    if not c > 0:
        raise InvalidArgumentError("power exponent must be > 0")
    p = probs.as_array()
    with np.errstate(divide="ignore"):
        logp = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), -np.inf)
    x = c * logp
    x -= x.max()
    w = np.exp(x)
    return AllocationVector(w / w.sum())


def cap_and_renormalize(probs: AllocationVector, lo: float, hi: float) -> AllocationVector:
    """Clip to [lo, hi], then rescale the entries above lo to restore the sum.

    Entries pinned at lo are never scaled below it; rescaling repeats (pinning
    any entry the rescale pushed out of bounds) until a fixed point, which is
    reached in at most one pass per arm because the pinned set only grows.
    """
    if not 0.0 <= lo < hi <= 1.0:
        raise InvalidArgumentError("need 0 <= lo < hi <= 1")
    p = probs.as_array().copy()
    m = p.size
    if m * lo > 1.0 + 1e-12 or m * hi < 1.0 - 1e-12:
        raise InvalidArgumentError("bounds are infeasible for this many arms")
    q = np.clip(p, lo, hi)
    pin_lo = np.zeros(m, dtype=bool)
    pin_hi = np.zeros(m, dtype=bool)
    for _ in range(2 * m):
        pin_lo |= q <= lo
        free = ~pin_lo & ~pin_hi
        if not free.any():
            break
        target = 1.0 - lo * pin_lo.sum() - hi * pin_hi.sum()
        s = q[free].sum()
        if s <= 0.0:
            q[free] = target / free.sum()
        else:
            q[free] *= target / s
        under = free & (q < lo - 1e-15)
        over = free & (q > hi + 1e-15)
        if not under.any() and not over.any():
            q[pin_lo] = lo
            q[pin_hi] = hi
            break
        q[under] = lo
        pin_lo |= under
        q[over] = hi
        pin_hi |= over
    # Water-fill any residual (only reachable in corner configurations where
    # every entry ended pinned): move mass within the bounds.
    resid = 1.0 - q.sum()
    for _ in range(m):
        if abs(resid) <= 1e-12:
            break
        if resid > 0:
            room = hi - q
        else:
            room = lo - q  # negative room
        movable = np.abs(room) > 1e-15
        if not movable.any():
            break
        step = resid / movable.sum()
        bounded = np.where(movable, np.clip(step, np.minimum(room, 0), np.maximum(room, 0)), 0.0)
        q += bounded
        resid = 1.0 - q.sum()
    q = np.clip(q, lo, hi)
    return AllocationVector(q / q.sum())


# ---------------------------------------------------------------------------
# Evidence caches (counts are integers, so memoization is exact)


def _beta_key(prior: BetaPriorSet) -> tuple:
    return (prior.a0, prior.b0, prior.a, prior.b)


@lru_cache(maxsize=400_000)
def _binomial_alloc(y: tuple, n: tuple, prior_key: tuple, p_null: float) -> tuple:
    prior = BetaPriorSet(prior_key[0], prior_key[1], prior_key[2], prior_key[3])
    result = brar_binomial(BinomialData(y, n), prior, p_null)
    return result.allocation.probs


@lru_cache(maxsize=400_000)
def _normal_alloc(
    y: tuple,
    n: tuple,
    prior_mu: float,
    prior_tau: float,
    mvn_mean: tuple,
    mvn_cov: tuple,
    p_null: float,
    estimator: str,
    seed: int,
) -> tuple | None:
    """Allocation for the normal method, or None when the fit fails."""
    data = BinomialData(y, n)
    m = data.n_arms
    if estimator == "yates":
        if m != 2:
            raise InvalidArgumentError("yates estimator requires exactly two arms")
        est = sequential_yates_estimate(data)
        prior = NormalPrior(prior_mu, prior_tau)
        return two_group_allocation(est, prior, p_null).probs
    fit = logistic_fit(data)
    if not fit.converged:
        return None
    coef = fit.coef_array()
    cov = fit.cov_array()
    if m == 2:
        est2 = EffectEstimate(coef[1], math.sqrt(cov[1, 1]))
        return two_group_allocation(est2, NormalPrior(prior_mu, prior_tau), p_null).probs
    est_k = MultiEffectEstimate(coef[1:], cov[1:, 1:])
    mprior = MvnPrior(mvn_mean, mvn_cov)
    _, alloc = multi_group_allocation(est_k, mprior, p_null, seed=seed)
    return alloc.probs


def _equal(m: int) -> AllocationVector:
    return AllocationVector((1.0 / m,) * m)


def allocation_from_counts(
    y: Sequence[int],
    n: Sequence[int],
    spec: PolicySpec,
    engines: EvidenceEngines | None = None,
    patient_index: int | None = None,
    seed: int = 0,
) -> AllocationDecision:
    """Allocation for the next patient given per-arm counts.

    ``patient_index`` is the 1-based index of the patient about to be
    randomized (defaults to one past the observed total); indices at or below
    the burn-in get the equal allocation. The base allocation is then power
    transformed and capped as configured.
    """
    y = tuple(int(v) for v in y)
    n = tuple(int(v) for v in n)
    m = len(y)
    engines = engines or EvidenceEngines()
    if patient_index is None:
        patient_index = sum(n) + 1

    if spec.burn_in and patient_index <= spec.burn_in:
        return AllocationDecision(_equal(m), False)

    fallback = False
    if spec.method == "equal":
        alloc = _equal(m)
    elif spec.method == "fixed":
        if len(spec.baseline) != m:
            raise InvalidArgumentError("baseline arm count mismatch")
        alloc = AllocationVector(spec.baseline)
    elif spec.method == "rpw":
        alloc = rpw_urn_from_counts(y, n).draw_probs()
    elif spec.method == "point_null_binomial":
        prior = engines.beta_for(m)
        alloc = AllocationVector(_binomial_alloc(y, n, _beta_key(prior), spec.p_null))
    else:  # point_null_normal
        nprior = engines.normal_for()
        mprior = engines.mvn_for(m - 1)
        probs = _normal_alloc(
            y,
            n,
            nprior.mu,
            nprior.tau,
            mprior.mean,
            mprior.cov,
            spec.p_null,
            spec.estimator,
            seed,
        )
        if probs is None:
            alloc, fallback = _equal(m), True
        else:
            alloc = AllocationVector(probs)

    if spec.power is not None:
        alloc = power_transform(alloc, spec.power.exponent(patient_index, spec.n_max))
    if spec.cap is not None:
        alloc = cap_and_renormalize(alloc, spec.cap[0], spec.cap[1])
    return AllocationDecision(alloc, fallback)


def next_allocation(
    state: TrialState,
    spec: PolicySpec,
    engines: EvidenceEngines | None = None,
    seed: int = 0,
) -> AllocationDecision:
    """Allocation for the next patient from the trial's event record.

    Pure in (state, spec, seed): replaying an event log reproduces every
    allocation bit for bit.
    """
    y, n = state.counts()
    return allocation_from_counts(
        y, n, spec, engines, patient_index=state.n_patients + 1, seed=seed
    )
