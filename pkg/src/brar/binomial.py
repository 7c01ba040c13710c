"""Exact point null Bayesian RAR for binary outcomes.

Arm counts are beta-binomial under every hypothesis: a common success
probability under the null, independent per-arm probabilities truncated to
"arm i is best" under each directional hypothesis. The truncation normalizer
is the probability that arm i's success probability is the maximum under
independent beta laws, computed by adaptive quadrature of a smooth
one-dimensional integral. Binomial coefficients cancel between hypotheses but
are kept so each log marginal likelihood is a true log probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DegeneratePriorError, InvalidArgumentError
from .hypotheses import (
    AllocationVector,
    EvidenceSummary,
    PriorWeights,
    allocation_equal_shrink,
    arm_labels,
    default_prior_weights,
    hypothesis_labels,
    posterior_from_logml,
)
from .numerics import QuadSpec, beta_kernel_quad, inc_beta_reg, log_beta

__all__ = [
    "BinomialData",
    "BetaPriorSet",
    "BrarBinomialResult",
    "logml_null",
    "q_max_prob",
    "logml_directional",
    "brar_binomial",
    "format_binomial_report",
]


@dataclass(frozen=True)
class BinomialData:
    """Success and trial counts per arm, control first."""

    y: tuple
    n: tuple

    def __init__(self, y: Sequence[int], n: Sequence[int]) -> None:
        y = tuple(int(v) for v in y)
        n = tuple(int(v) for v in n)
        if len(y) != len(n) or len(y) < 2:
            raise InvalidArgumentError("need counts for at least two arms")
        if any(v < 0 for v in n) or any(not 0 <= yi <= ni for yi, ni in zip(y, n)):
            raise InvalidArgumentError("need 0 <= y[a] <= n[a] for every arm")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "n", n)

    @property
    def n_arms(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class BetaPriorSet:
    """Beta priors: common-probability prior under the null, per-arm slabs."""

    a0: float
    b0: float
    a: tuple
    b: tuple

    def __init__(self, a0: float, b0: float, a: Sequence[float], b: Sequence[float]) -> None:
        a = tuple(float(v) for v in a)
        b = tuple(float(v) for v in b)
        a0, b0 = float(a0), float(b0)
        if len(a) != len(b) or len(a) < 2:
            raise InvalidArgumentError("need slab priors for at least two arms")
        if a0 <= 0 or b0 <= 0 or any(v <= 0 for v in a + b):
            raise InvalidArgumentError("all beta prior parameters must be > 0")
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "b0", b0)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def uniform(cls, n_arms: int) -> "BetaPriorSet":
        return cls(1.0, 1.0, (1.0,) * n_arms, (1.0,) * n_arms)

    @property
    def n_arms(self) -> int:
        return len(self.a)


def _log_choose(n: int, y: int) -> float:
    return float(gammaln(n + 1) - gammaln(y + 1) - gammaln(n - y + 1))


def logml_null(data: BinomialData, prior: BetaPriorSet) -> float:
    """Log marginal likelihood of the pooled counts under a common probability."""
    if data.n_arms != prior.n_arms:
        raise InvalidArgumentError("data and prior arm counts differ")
    ys, ns = sum(data.y), sum(data.n)
    coeff = sum(_log_choose(n, y) for y, n in zip(data.y, data.n))
    return coeff + log_beta(prior.a0 + ys, prior.b0 + ns - ys) - log_beta(prior.a0, prior.b0)


def q_max_prob(
    a: Sequence[float],
    b: Sequence[float],
    i: int,
    quad: QuadSpec = QuadSpec(),
) -> float:
    """P(theta_i is the maximum) under independent Beta(a_j, b_j) laws."""
    a = tuple(float(v) for v in a)
    b = tuple(float(v) for v in b)
    if len(a) != len(b) or len(a) < 2:
        raise InvalidArgumentError("need at least two arms")
    if not 0 <= i < len(a):
        raise InvalidArgumentError("arm index out of range")
    if any(v <= 0 for v in a + b):
        raise InvalidArgumentError("beta parameters must be > 0")
    others = [(a[j], b[j]) for j in range(len(a)) if j != i]

    def cdf_product(t: np.ndarray) -> np.ndarray:
        out = np.ones_like(t)
        for aj, bj in others:
            out *= inc_beta_reg(t, aj, bj)
        return out

    res = beta_kernel_quad(a[i], b[i], cdf_product, quad)
    value = res.value / math.exp(log_beta(a[i], b[i]))
    return min(1.0, max(0.0, value))


@lru_cache(maxsize=100_000)
def _q_max_cached(a: tuple, b: tuple, i: int, abs_tol: float, rel_tol: float, max_sub: int) -> float:
    return q_max_prob(a, b, i, QuadSpec(abs_tol, rel_tol, max_sub))


def _q_max(a: tuple, b: tuple, i: int, quad: QuadSpec) -> float:
    return _q_max_cached(a, b, i, quad.abs_tol, quad.rel_tol, quad.max_subdivisions)


def _posterior_params(data: BinomialData, prior: BetaPriorSet) -> tuple[tuple, tuple]:
    a_post = tuple(aj + yj for aj, yj in zip(prior.a, data.y))
    b_post = tuple(bj + nj - yj for bj, nj, yj in zip(prior.b, data.n, data.y))
    return a_post, b_post


def logml_directional(
    data: BinomialData,
    prior: BetaPriorSet,
    i: int,
    quad: QuadSpec = QuadSpec(),
) -> float:
    """Log marginal likelihood under "arm i is best" (i = 0 gives H-).

    The product of per-arm beta-binomial marginals is multiplied by the ratio
    of posterior to prior probability that arm i is the maximum.
    """
    if data.n_arms != prior.n_arms:
        raise InvalidArgumentError("data and prior arm counts differ")
    if not 0 <= i < data.n_arms:
        raise InvalidArgumentError("arm index out of range")
    a_post, b_post = _posterior_params(data, prior)
    base = 0.0
    for arm in range(data.n_arms):
        base += _log_choose(data.n[arm], data.y[arm])
        base += log_beta(a_post[arm], b_post[arm]) - log_beta(prior.a[arm], prior.b[arm])
    q_prior = _q_max(prior.a, prior.b, i, quad)
    if q_prior <= 0.0:
        raise DegeneratePriorError(f"prior probability of arm {i} being best is zero")
    q_post = _q_max(a_post, b_post, i, quad)
    if q_post <= 0.0:
        return -np.inf
    return base + math.log(q_post) - math.log(q_prior)


@dataclass(frozen=True)
class BrarBinomialResult:
    data: BinomialData
    prior: BetaPriorSet
    p_null: float
    prior_weights: PriorWeights
    evidence: EvidenceSummary
    allocation: AllocationVector

    def to_json(self) -> dict:
        return {
            "data": {"y": list(self.data.y), "n": list(self.data.n)},
            "p_null": self.p_null,
            "prior_weights": self.prior_weights.to_json(),
            **self.evidence.to_json(),
            **self.allocation.to_json(),
        }


def brar_binomial(
    data: BinomialData,
    prior: BetaPriorSet | None = None,
    p_null: float = 0.5,
    quad: QuadSpec = QuadSpec(),
) -> BrarBinomialResult:
    """Exact point null Bayesian RAR from arm counts.

    Directional prior weights are proportional to each arm's prior probability
    of being best, scaled to share 1 - p_null; evidence follows from the log
    marginal likelihoods and the allocation shrinks Thompson-style treatment
    probabilities toward the equal split by the posterior null mass.
    """
    if prior is None:
        prior = BetaPriorSet.uniform(data.n_arms)
    if math.isnan(p_null) or not 0.0 <= p_null <= 1.0:
        raise InvalidArgumentError("p_null must lie in [0, 1]")
    m = data.n_arms
    regions = np.array([_q_max(prior.a, prior.b, i, quad) for i in range(m)])
    total = regions.sum()
    if total <= 0:
        raise DegeneratePriorError("prior region probabilities sum to zero")
    weights = default_prior_weights(p_null, regions / total)

    log_ml = np.empty(m + 1)
    log_ml[0] = logml_directional(data, prior, 0, quad)
    log_ml[1] = logml_null(data, prior)
    for i in range(1, m):
        log_ml[i + 1] = logml_directional(data, prior, i, quad)

    evidence = posterior_from_logml(log_ml, weights)
    allocation = allocation_equal_shrink(evidence, m - 1)
    return BrarBinomialResult(data, prior, p_null, weights, evidence, allocation)


def _sig(x: float, digits: int = 4) -> str:
    if x == 0 or not math.isfinite(x):
        return f"{x:g}"
    magnitude = math.floor(math.log10(abs(x)))
    decimals = max(0, digits - 1 - magnitude)
    return f"{x:.{decimals}f}"


def format_binomial_report(result: BrarBinomialResult) -> str:
    """Plain-text report: data, prior, Bayes factors, posterior, allocation."""
    k = result.data.n_arms - 1
    arms = arm_labels(k)
    hyps = hypothesis_labels(k)
    lines = ["DATA"]
    width = max(len(a) for a in arms)
    lines.append(f"{'':{width}} Events Trials Proportion")
    for arm, y, n in zip(arms, result.data.y, result.data.n):
        prop = y / n if n else float("nan")
        lines.append(f"{arm:<{width}} {y:>6d} {n:>6d} {prop:>10.3f}")

    lines.append("")
    lines.append("PRIOR PROBABILITIES")
    lines.append(" ".join(f"{h:>7}" for h in hyps))
    lines.append(" ".join(f"{w:>7.3f}" for w in result.prior_weights.as_array()))

    lines.append("")
    lines.append("BAYES FACTORS (BF_ij)")
    bf = result.evidence.bf()
    lines.append(" " * 4 + " ".join(f"{h:>8}" for h in hyps))
    for row_label, row in zip(hyps, bf):
        lines.append(f"{row_label:<4}" + " ".join(f"{_sig(v):>8}" for v in row))

    lines.append("")
    lines.append("POSTERIOR PROBABILITIES")
    lines.append(" ".join(f"{h:>8}" for h in hyps))
    lines.append(" ".join(f"{p:>8.5f}" for p in result.evidence.posterior))

    lines.append("")
    lines.append("RANDOMIZATION PROBABILITIES")
    lines.append(" ".join(f"{a:>12}" for a in arms))
    lines.append(" ".join(f"{p:>12.3f}" for p in result.allocation.probs))
    return "\n".join(lines)
