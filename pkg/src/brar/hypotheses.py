"""Hypothesis bookkeeping: prior weights, posteriors, Bayes factors, allocations.

The hypothesis set is {H-, H0, H+1, ..., H+K} in that fixed order everywhere,
including serialized output. Arms are ordered (control, treatment 1, ...,
treatment K). Posterior probabilities are kept in plain form (bounded in
[0, 1]); Bayes factors are kept as a log matrix since their linear values can
overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError
from .numerics import logsumexp

__all__ = [
    "HypothesisId",
    "hypothesis_labels",
    "arm_labels",
    "PriorWeights",
    "EvidenceSummary",
    "AllocationVector",
    "default_prior_weights",
    "posterior_from_logml",
    "allocation_equal_shrink",
    "allocation_baseline_shrink",
    "dunnett_baseline",
]

_SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class HypothesisId:
    """One member of the hypothesis set: Minus, Null, or Plus(i)."""

    tag: str
    index: int = 0

    def __post_init__(self) -> None:
        if self.tag not in ("minus", "null", "plus"):
            raise InvalidArgumentError("tag must be minus, null, or plus")
        if self.tag == "plus" and self.index < 1:
            raise InvalidArgumentError("plus hypotheses are indexed from 1")
        if self.tag != "plus" and self.index != 0:
            raise InvalidArgumentError("only plus hypotheses carry an index")

    @classmethod
    def minus(cls) -> "HypothesisId":
        return cls("minus")

    @classmethod
    def null(cls) -> "HypothesisId":
        return cls("null")

    @classmethod
    def plus(cls, i: int) -> "HypothesisId":
        return cls("plus", i)

    @classmethod
    def all_for(cls, k: int) -> list["HypothesisId"]:
        """The fixed ordering (Minus, Null, Plus 1..K) used everywhere."""
        if k < 1:
            raise InvalidArgumentError("need at least one treatment")
        return [cls.minus(), cls.null()] + [cls.plus(i) for i in range(1, k + 1)]

    @property
    def label(self) -> str:
        if self.tag == "minus":
            return "H-"
        if self.tag == "null":
            return "H0"
        return f"H+{self.index}"

    def slot(self, k: int) -> int:
        """Position in the fixed ordering over K treatments."""
        if self.tag == "plus" and self.index > k:
            raise InvalidArgumentError("plus index exceeds the number of treatments")
        return {"minus": 0, "null": 1}.get(self.tag, 1 + self.index)


def hypothesis_labels(k: int) -> list[str]:
    """Labels in the fixed hypothesis order for K treatments."""
    return [h.label for h in HypothesisId.all_for(k)]


def arm_labels(k: int) -> list[str]:
    """Arm labels, control first."""
    return ["Control"] + [f"Treatment {i}" for i in range(1, k + 1)]


@dataclass(frozen=True)
class PriorWeights:
    """Prior probability mass over (H-, H0, H+1..H+K)."""

    p_minus: float
    p_null: float
    p_plus: tuple

    def __init__(self, p_minus: float, p_null: float, p_plus: Sequence[float]) -> None:
        p_plus = tuple(float(p) for p in p_plus)
        p_minus, p_null = float(p_minus), float(p_null)
        vals = (p_minus, p_null) + p_plus
        if len(p_plus) < 1:
            raise InvalidArgumentError("need at least one treatment hypothesis")
        if any(math.isnan(v) or v < -_SIMPLEX_TOL or v > 1 + _SIMPLEX_TOL for v in vals):
            raise InvalidArgumentError("prior weights must lie in [0, 1]")
        if abs(sum(vals) - 1.0) > 1e-9:
            raise InvalidArgumentError("prior weights must sum to 1")
        object.__setattr__(self, "p_minus", p_minus)
        object.__setattr__(self, "p_null", p_null)
        object.__setattr__(self, "p_plus", p_plus)

    @property
    def k(self) -> int:
        return len(self.p_plus)

    def as_array(self) -> np.ndarray:
        return np.array((self.p_minus, self.p_null) + self.p_plus, dtype=float)

    def to_json(self) -> dict:
        return dict(zip(hypothesis_labels(self.k), self.as_array().tolist()))


@dataclass(frozen=True)
class AllocationVector:
    """Randomization probabilities per arm, control first; sums to one."""

    probs: tuple

    def __init__(self, probs: Sequence[float]) -> None:
        probs = tuple(float(p) for p in probs)
        if len(probs) < 2:
            raise InvalidArgumentError("allocation needs at least two arms")
        if any(math.isnan(p) or p < -_SIMPLEX_TOL or p > 1 + _SIMPLEX_TOL for p in probs):
            raise InvalidArgumentError("allocation probabilities must lie in [0, 1]")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise InvalidArgumentError("allocation probabilities must sum to 1")
        object.__setattr__(self, "probs", probs)

    @property
    def n_arms(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def to_json(self) -> dict:
        return {"allocation": list(self.probs)}


@dataclass(frozen=True)
class EvidenceSummary:
    """Log marginal likelihoods, posterior probabilities, and the BF matrix.

    ``log_bf[j, i]`` is log BF of hypothesis j against hypothesis i, i.e.
    ``log_ml[j] - log_ml[i]``; the linear matrix is exposed via :meth:`bf`.
    """

    log_ml: tuple
    posterior: tuple
    log_bf: tuple

    def __init__(self, log_ml: Sequence[float], posterior: Sequence[float]) -> None:
        ml = np.asarray(log_ml, dtype=float)
        post = np.asarray(posterior, dtype=float)
        if ml.ndim != 1 or ml.shape != post.shape or ml.size < 3:
            raise InvalidArgumentError("log_ml and posterior must align over >= 3 hypotheses")
        if np.any(np.isnan(ml)) or np.any(np.isnan(post)):
            raise InvalidArgumentError("evidence contains NaN")
        if abs(post.sum() - 1.0) > 1e-9:
            raise InvalidArgumentError("posterior must sum to 1")
        with np.errstate(invalid="ignore"):
            log_bf = ml[:, None] - ml[None, :]
        log_bf[np.isnan(log_bf)] = 0.0  # only from (-inf) - (-inf) pairs
        np.fill_diagonal(log_bf, 0.0)
        object.__setattr__(self, "log_ml", tuple(ml.tolist()))
        object.__setattr__(self, "posterior", tuple(post.tolist()))
        object.__setattr__(self, "log_bf", tuple(map(tuple, log_bf.tolist())))

    @property
    def k(self) -> int:
        return len(self.log_ml) - 2

    def posterior_array(self) -> np.ndarray:
        return np.asarray(self.posterior, dtype=float)

    def log_ml_array(self) -> np.ndarray:
        return np.asarray(self.log_ml, dtype=float)

    def log_bf_array(self) -> np.ndarray:
        return np.asarray(self.log_bf, dtype=float)

    def bf(self) -> np.ndarray:
        """Linear Bayes-factor matrix BF[j, i] = p(y|H_j) / p(y|H_i)."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_bf_array())

    def to_json(self) -> dict:
        labels = hypothesis_labels(self.k)
        return {
            "hypotheses": labels,
            "log_ml": list(self.log_ml),
            "posterior": list(self.posterior),
            "bf_log": [list(row) for row in self.log_bf],
        }


def default_prior_weights(p_null: float, region_probs: Sequence[float]) -> PriorWeights:
    """Split 1 - p_null over the directional hypotheses by region probability.

    ``region_probs`` is ordered (Minus, Plus 1, ..., Plus K) and must sum to
    one; it is renormalized exactly so the returned weights satisfy the
    simplex invariant to machine precision.
    """
    p_null = float(p_null)
    if math.isnan(p_null) or not 0.0 <= p_null <= 1.0:
        raise InvalidArgumentError("p_null must lie in [0, 1]")
    r = np.asarray(region_probs, dtype=float)
    if r.size < 2:
        raise InvalidArgumentError("need region probabilities for Minus and at least one Plus")
    if np.any(np.isnan(r)) or np.any(r < 0):
        raise InvalidArgumentError("region probabilities must be nonnegative")
    total = r.sum()
    if abs(total - 1.0) > 1e-9:
        raise InvalidArgumentError("region probabilities must sum to 1")
    r = r / total
    rest = 1.0 - p_null
    return PriorWeights(rest * r[0], p_null, tuple(rest * r[1:]))


def posterior_from_logml(log_ml: Sequence[float], prior: PriorWeights) -> EvidenceSummary:
    """Posterior hypothesis probabilities from log marginal likelihoods.

    Hypotheses with zero prior weight are excluded from the normalization and
    receive posterior exactly 0, whatever their log marginal likelihood.
    """
    ml = np.asarray(log_ml, dtype=float)
    pw = prior.as_array()
    if ml.shape != pw.shape:
        raise InvalidArgumentError("log_ml and prior weights must align")
    if np.any(np.isnan(ml)):
        raise InvalidArgumentError("log_ml contains NaN")
    active = pw > 0.0
    if not np.any(active):
        raise InvalidArgumentError("all prior weights are zero")
    z = ml[active] + np.log(pw[active])
    norm = logsumexp(z)
    if norm == -np.inf:
        raise InvalidArgumentError("all active hypotheses have zero marginal likelihood")
    post = np.zeros_like(pw)
    post[active] = np.exp(z - norm)
    post[active] /= post[active].sum()
    return EvidenceSummary(ml, post)


def allocation_equal_shrink(summary: EvidenceSummary, k: int) -> AllocationVector:
    """Directional posterior mass plus an equal 1/(K+1) share of the null mass."""
    post = summary.posterior_array()
    if k != summary.k:
        raise InvalidArgumentError("summary covers a different number of treatments")
    share = post[1] / (k + 1)
    probs = np.concatenate([[post[0] + share], post[2:] + share])
    return AllocationVector(probs / probs.sum())


def allocation_baseline_shrink(summary: EvidenceSummary, baseline: AllocationVector) -> AllocationVector:
    """Directional posterior mass plus the null mass spread over ``baseline``.

    With an equal baseline this coincides with :func:`allocation_equal_shrink`.
    """
    post = summary.posterior_array()
    if baseline.n_arms != summary.k + 1:
        raise InvalidArgumentError("baseline arm count does not match the hypothesis set")
    base = baseline.as_array()
    probs = np.concatenate([[post[0]], post[2:]]) + post[1] * base
    return AllocationVector(probs / probs.sum())


def dunnett_baseline(k: int) -> AllocationVector:
    """sqrt(K):1:...:1 allocation of control to treatments (variance-optimal)."""
    if k < 1:
        raise InvalidArgumentError("need at least one treatment")
    root = math.sqrt(k)
    return AllocationVector([root / (k + root)] + [1.0 / (k + root)] * k)
