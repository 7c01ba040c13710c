"""Point null Bayesian RAR for (approximately) normal effect estimates.

Two-group data are summarized by an effect estimate and its standard error;
the three hypothesis marginal likelihoods have closed forms built from the
normal density and normal tail probabilities. With K > 1 treatments the
estimates stack into a vector and the directional hypotheses become orthant
constraints handled through contrast matrices and the multivariate normal
CDF. All marginal likelihoods are computed and returned in the log domain.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError
from .hypotheses import (
    AllocationVector,
    EvidenceSummary,
    PriorWeights,
    allocation_equal_shrink,
    default_prior_weights,
    posterior_from_logml,
)
from .numerics import MvnSpec, mvn_cdf, mvn_logpdf, norm_logcdf

__all__ = [
    "EffectEstimate",
    "NormalPrior",
    "MultiEffectEstimate",
    "MvnPrior",
    "PosteriorMoments",
    "default_mvn_prior",
    "posterior_moments",
    "multi_posterior_moments",
    "two_group_logml",
    "two_group_evidence",
    "two_group_allocation",
    "contrast_matrix",
    "multi_group_logml",
    "multi_group_allocation",
    "multi_group_evidence",
]

_REGION_FLOOR = 1e-300


@dataclass(frozen=True)
class EffectEstimate:
    """Effect estimate (e.g. a log odds ratio) with its standard error."""

    theta_hat: float
    se: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta_hat) and math.isfinite(self.se) and self.se > 0):
            raise InvalidArgumentError("need finite theta_hat and se > 0")


@dataclass(frozen=True)
class NormalPrior:
    """Normal slab for the effect; truncated per directional hypothesis."""

    mu: float = 0.0
    tau: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mu) and math.isfinite(self.tau) and self.tau > 0):
            raise InvalidArgumentError("need finite mu and tau > 0")


def _pd_matrix(m, k: int, name: str) -> np.ndarray:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape != (k, k):
        raise InvalidArgumentError(f"{name} must be {k} x {k}")
    if not np.allclose(m, m.T, rtol=1e-10, atol=1e-12):
        raise InvalidArgumentError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise InvalidArgumentError(f"{name} must be positive definite") from exc
    return m


@dataclass(frozen=True)
class MultiEffectEstimate:
    """Stacked effect estimates for K treatments with their covariance."""

    theta_hat: tuple
    cov: tuple

    def __init__(self, theta_hat, cov) -> None:
        th = np.atleast_1d(np.asarray(theta_hat, dtype=float))
        if th.ndim != 1 or th.size < 1 or not np.all(np.isfinite(th)):
            raise InvalidArgumentError("theta_hat must be a finite vector")
        c = _pd_matrix(cov, th.size, "cov")
        object.__setattr__(self, "theta_hat", tuple(th))
        object.__setattr__(self, "cov", tuple(map(tuple, c)))

    @property
    def k(self) -> int:
        return len(self.theta_hat)

    def theta_array(self) -> np.ndarray:
        return np.asarray(self.theta_hat, dtype=float)

    def cov_array(self) -> np.ndarray:
        return np.asarray(self.cov, dtype=float)


@dataclass(frozen=True)
class MvnPrior:
    """K-variate normal slab, truncated to each hypothesis region."""

    mean: tuple
    cov: tuple

    def __init__(self, mean, cov) -> None:
        m = np.atleast_1d(np.asarray(mean, dtype=float))
        if m.ndim != 1 or not np.all(np.isfinite(m)):
            raise InvalidArgumentError("prior mean must be a finite vector")
        c = _pd_matrix(cov, m.size, "prior cov")
        object.__setattr__(self, "mean", tuple(m))
        object.__setattr__(self, "cov", tuple(map(tuple, c)))

    @property
    def k(self) -> int:
        return len(self.mean)

    def mean_array(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float)

    def cov_array(self) -> np.ndarray:
        return np.asarray(self.cov, dtype=float)


def default_mvn_prior(k: int, variance: float = 1.0, correlation: float = 0.5) -> MvnPrior:
    """Zero-centered prior with unit variances and equicorrelation.

    Correlation 0.5 makes all directional hypotheses a priori equally likely,
    which is the sensible default with a shared control group.
    """
    cov = np.full((k, k), correlation * variance)
    np.fill_diagonal(cov, variance)
    return MvnPrior(np.zeros(k), cov)


@dataclass(frozen=True)
class PosteriorMoments:
    """Conjugate posterior mean and variance of the untruncated slab.

    ``tau_star_sq`` is the scalar posterior variance for the two-group case
    and the posterior covariance matrix for K > 1.
    """

    mu_star: object
    tau_star_sq: object


def posterior_moments(est: EffectEstimate, prior: NormalPrior) -> PosteriorMoments:
    s2, t2 = est.se**2, prior.tau**2
    tau_star_sq = 1.0 / (1.0 / s2 + 1.0 / t2)
    mu_star = (est.theta_hat / s2 + prior.mu / t2) * tau_star_sq
    return PosteriorMoments(mu_star, tau_star_sq)


def multi_posterior_moments(est: MultiEffectEstimate, prior: MvnPrior) -> PosteriorMoments:
    """Matrix analogue, computed with a single solve against cov + prior cov."""
    sigma = est.cov_array()
    tmat = prior.cov_array()
    mu = prior.mean_array()
    gain = tmat @ np.linalg.inv(sigma + tmat)
    mu_star = mu + gain @ (est.theta_array() - mu)
    t_star = tmat - gain @ tmat
    t_star = 0.5 * (t_star + t_star.T)
    return PosteriorMoments(mu_star, t_star)


# ---------------------------------------------------------------------------
# Two groups: closed forms


def _norm_logpdf(x: float, mean: float, var: float) -> float:
    return -0.5 * (math.log(2.0 * math.pi * var) + (x - mean) ** 2 / var)


def two_group_logml(est: EffectEstimate, prior: NormalPrior) -> np.ndarray:
    """Log marginal likelihoods over (H-, H0, H+).

    The directional terms are the untruncated-slab marginal times the ratio of
    posterior to prior mass on the matching side of zero.
    """
    mom = posterior_moments(est, prior)
    z_post = mom.mu_star / math.sqrt(mom.tau_star_sq)
    z_prior = prior.mu / prior.tau
    log_slab = _norm_logpdf(est.theta_hat, prior.mu, est.se**2 + prior.tau**2)
    return np.array(
        [
            log_slab + norm_logcdf(-z_post) - norm_logcdf(-z_prior),
            _norm_logpdf(est.theta_hat, 0.0, est.se**2),
            log_slab + norm_logcdf(z_post) - norm_logcdf(z_prior),
        ]
    )


def _two_group_prior(prior: NormalPrior, p_null: float) -> PriorWeights:
    z = prior.mu / prior.tau
    minus = math.exp(norm_logcdf(-z))
    plus = math.exp(norm_logcdf(z))
    return default_prior_weights(p_null, (minus, plus))


def two_group_evidence(est: EffectEstimate, prior: NormalPrior, p_null: float) -> EvidenceSummary:
    """Posterior over (H-, H0, H+) with prior sides split by the slab's tails."""
    return posterior_from_logml(two_group_logml(est, prior), _two_group_prior(prior, p_null))


def two_group_allocation(est: EffectEstimate, prior: NormalPrior, p_null: float) -> AllocationVector:
    """Treatment allocation = Pr(H+ | y) + Pr(H0 | y) / 2."""
    return allocation_equal_shrink(two_group_evidence(est, prior, p_null), 1)


# ---------------------------------------------------------------------------
# K > 1 treatments: orthant machinery


def contrast_matrix(i: int, k: int) -> np.ndarray:
    """Map effect space so hypothesis "treatment i best" is the negative orthant.

    The first row encodes treatment i's effect being positive; the remaining
    rows encode it exceeding each other treatment's effect.
    """
    if not 1 <= i <= k:
        raise InvalidArgumentError("treatment index out of range")
    rows = []
    first = np.zeros(k, dtype=int)
    first[i - 1] = -1
    rows.append(first)
    for j in range(1, k + 1):
        if j == i:
            continue
        row = np.zeros(k, dtype=int)
        row[j - 1] = 1
        row[i - 1] = -1
        rows.append(row)
    return np.array(rows, dtype=int)


def _derive_seeds(seed: int, count: int) -> list[int]:
    return [int(np.random.SeedSequence((int(seed), slot)).generate_state(1)[0]) for slot in range(count)]


def _orthant_log_prob(mean: np.ndarray, cov: np.ndarray, tol: float, seed: int) -> float:
    """log P(X <= 0) for X ~ N(mean, cov); -inf when the mass underflows."""
    res = mvn_cdf(np.zeros(mean.size), MvnSpec(mean, cov), tol=tol, seed=seed)
    if res.value <= _REGION_FLOOR:
        return -np.inf
    return math.log(res.value)


def _region_log_probs(
    mean: np.ndarray, cov: np.ndarray, tol: float, seeds: Sequence[int]
) -> np.ndarray:
    """log orthant probabilities for (Minus, Plus 1..K) under N(mean, cov)."""
    k = mean.size
    out = np.empty(k + 1)
    out[0] = _orthant_log_prob(mean, cov, tol, seeds[0])
    for i in range(1, k + 1):
        a = contrast_matrix(i, k).astype(float)
        out[i] = _orthant_log_prob(a @ mean, a @ cov @ a.T, tol, seeds[i])
    return out


def multi_group_logml(
    est: MultiEffectEstimate,
    prior: MvnPrior,
    seed: int = 0,
    tol: float = 1e-6,
    seeds: Sequence[int] | None = None,
) -> np.ndarray:
    """Log marginal likelihoods over (H-, H0, H+1..H+K).

    Directional hypotheses multiply the untruncated-slab marginal by the ratio
    of posterior to prior orthant mass. For K = 1 this delegates to the
    closed-form two-group path. Regions whose prior mass underflows get
    log marginal likelihood -inf (they also get prior weight zero downstream).

    ``seeds`` overrides the per-hypothesis quasi-Monte Carlo seeds (ordered as
    the Minus region then each Plus region); by default they are derived from
    ``seed`` and the hypothesis slot.
    """
    if est.k != prior.k:
        raise InvalidArgumentError("estimate and prior dimension mismatch")
    if est.k == 1:
        return two_group_logml(
            EffectEstimate(est.theta_hat[0], math.sqrt(est.cov[0][0])),
            NormalPrior(prior.mean[0], math.sqrt(prior.cov[0][0])),
        )
    use_seeds = list(seeds) if seeds is not None else _derive_seeds(seed, est.k + 1)
    return _multi_group_logml_generic(est, prior, tol, use_seeds)


def _multi_group_logml_generic(
    est: MultiEffectEstimate, prior: MvnPrior, tol: float, use_seeds: Sequence[int]
) -> np.ndarray:
    """Orthant-probability route for any K >= 1 (no closed-form shortcut)."""
    k = est.k
    sigma = est.cov_array()
    tmat = prior.cov_array()
    mu = prior.mean_array()
    theta = est.theta_array()
    mom = multi_posterior_moments(est, prior)
    if len(use_seeds) != k + 1:
        raise InvalidArgumentError("need one seed per directional hypothesis")

    log_prior_regions = _region_log_probs(mu, tmat, tol, use_seeds)
    log_post_regions = _region_log_probs(np.asarray(mom.mu_star), np.asarray(mom.tau_star_sq), tol, use_seeds)

    log_slab = mvn_logpdf(theta, MvnSpec(mu, sigma + tmat))
    out = np.empty(k + 2)
    out[1] = mvn_logpdf(theta, MvnSpec(np.zeros(k), sigma))
    for slot in range(k + 1):
        idx = 0 if slot == 0 else slot + 1
        if log_prior_regions[slot] == -np.inf:
            warnings.warn(
                "prior orthant mass underflowed; hypothesis treated as prior-impossible",
                stacklevel=2,
            )
            out[idx] = -np.inf
        else:
            out[idx] = log_slab + log_post_regions[slot] - log_prior_regions[slot]
    return out


def _multi_region_prior(
    prior: MvnPrior, p_null: float, tol: float, seeds: Sequence[int]
) -> PriorWeights:
    log_regions = _region_log_probs(prior.mean_array(), prior.cov_array(), tol, seeds)
    regions = np.exp(log_regions)
    total = regions.sum()
    if total <= 0:
        raise InvalidArgumentError("all prior regions have zero mass")
    return default_prior_weights(p_null, regions / total)


def multi_group_evidence(
    est: MultiEffectEstimate,
    prior: MvnPrior,
    p_null: float,
    seed: int = 0,
    tol: float = 1e-6,
    seeds: Sequence[int] | None = None,
) -> EvidenceSummary:
    if est.k == 1:
        return two_group_evidence(
            EffectEstimate(est.theta_hat[0], math.sqrt(est.cov[0][0])),
            NormalPrior(prior.mean[0], math.sqrt(prior.cov[0][0])),
            p_null,
        )
    use_seeds = list(seeds) if seeds is not None else _derive_seeds(seed, est.k + 1)
    log_ml = multi_group_logml(est, prior, tol=tol, seeds=use_seeds)
    weights = _multi_region_prior(prior, p_null, tol, use_seeds)
    return posterior_from_logml(log_ml, weights)


def multi_group_allocation(
    est: MultiEffectEstimate,
    prior: MvnPrior,
    p_null: float,
    seed: int = 0,
    tol: float = 1e-6,
    seeds: Sequence[int] | None = None,
) -> tuple[EvidenceSummary, AllocationVector]:
    """Evidence and the equal-shrink allocation over (control, treatments)."""
    summary = multi_group_evidence(est, prior, p_null, seed=seed, tol=tol, seeds=seeds)
    return summary, allocation_equal_shrink(summary, est.k)
