"""Frequentist estimation layer.

Logistic regression on arm indicators (control as reference) supplies log
odds ratio estimates and their covariance for the normal evidence engine;
a Yates-corrected 2x2 log odds ratio covers the sequential two-arm path where
zero cells are routine; a Wald rate-difference estimate/CI/test backs the
simulator's performance measures. Non-convergence is a reported state, never
an exception, so callers can apply an equal-randomization back-up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .binomial import BinomialData
from .errors import InvalidArgumentError
from .normal import EffectEstimate

__all__ = [
    "GlmFit",
    "WaldResult",
    "logistic_fit",
    "yates_log_or",
    "sequential_yates_estimate",
    "rate_diff_wald",
]

_IRLS_MAX_ITER = 25
_IRLS_TOL = 1e-8
_SEPARATION_EPS = 1e-8


@dataclass(frozen=True)
class GlmFit:
    """Logistic regression fit: intercept plus one log odds ratio per treatment."""

    coef: tuple
    cov: tuple
    converged: bool
    iterations: int

    def coef_array(self) -> np.ndarray:
        return np.asarray(self.coef, dtype=float)

    def cov_array(self) -> np.ndarray:
        return np.asarray(self.cov, dtype=float)


def logistic_fit(data: BinomialData) -> GlmFit:
    """Maximum-likelihood logistic fit of success counts on arm indicators.

    Iteratively reweighted least squares with the control arm as reference.
    ``converged`` is False when the score does not vanish within the iteration
    cap, when any fitted probability sits within 1e-8 of 0 or 1 (separation),
    or when the information matrix is singular (e.g. an empty arm).
    """
    m = data.n_arms
    y = np.asarray(data.y, dtype=float)
    n = np.asarray(data.n, dtype=float)
    x = np.zeros((m, m))
    x[:, 0] = 1.0
    for arm in range(1, m):
        x[arm, arm] = 1.0

    beta = np.zeros(m)
    fit_cov = np.full((m, m), np.nan)
    for it in range(1, _IRLS_MAX_ITER + 1):
        eta = x @ beta
        p = 1.0 / (1.0 + np.exp(-eta))
        w = n * p * (1.0 - p)
        score = x.T @ (y - n * p)
        info = x.T @ (w[:, None] * x)
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            return GlmFit(tuple(beta), tuple(map(tuple, fit_cov)), False, it)
        beta = beta + step
        if np.max(np.abs(score)) <= _IRLS_TOL:
            p = 1.0 / (1.0 + np.exp(-(x @ beta)))
            separated = bool(np.any(p < _SEPARATION_EPS) or np.any(p > 1.0 - _SEPARATION_EPS))
            info = x.T @ ((n * p * (1.0 - p))[:, None] * x)
            try:
                fit_cov = np.linalg.inv(info)
            except np.linalg.LinAlgError:
                return GlmFit(tuple(beta), tuple(map(tuple, fit_cov)), False, it)
            ok = not separated and bool(np.all(np.isfinite(beta)))
            return GlmFit(tuple(beta), tuple(map(tuple, fit_cov)), ok, it)
    return GlmFit(tuple(beta), tuple(map(tuple, fit_cov)), False, _IRLS_MAX_ITER)


def yates_log_or(data: BinomialData) -> EffectEstimate:
    """Log odds ratio of treatment vs control with half added to every cell."""
    if data.n_arms != 2:
        raise InvalidArgumentError("yates_log_or requires exactly two arms")
    yc, y1 = data.y
    nc, n1 = data.n
    cells = np.array([yc, nc - yc, y1, n1 - y1], dtype=float) + 0.5
    theta = math.log(cells[2] * cells[1] / (cells[3] * cells[0]))
    se = math.sqrt(np.sum(1.0 / cells))
    return EffectEstimate(theta, se)


def sequential_yates_estimate(data: BinomialData) -> EffectEstimate:
    """Yates-corrected log odds ratio for sequential monitoring of a 2-arm trial.

    The 2x2 table is tabulated positionally over the arms observed so far, so
    the reference category is the first arm with any observations. Until the
    control group has data, the single observed arm occupies the reference
    slot and the orientation of the estimate flips; once both arms have
    observations this agrees with :func:`yates_log_or` exactly.
    """
    est = yates_log_or(data)
    if data.n[0] == 0 and data.n[1] > 0:
        return EffectEstimate(-est.theta_hat, est.se)
    return est


@dataclass(frozen=True)
class WaldResult:
    """Rate-difference estimate with two-sided CI and one-sided upper test."""

    estimate: float
    se: float
    ci_lo: float
    ci_hi: float
    reject: bool
    degenerate: bool = False


def rate_diff_wald(y_t: int, n_t: int, y_c: int, n_c: int, alpha: float = 0.05) -> WaldResult:
    """Wald inference for the success-rate difference, treatment minus control.

    The CI is two-sided at level 1 - alpha; the test is one-sided upper-tail
    at level alpha / 2. A zero standard error (all successes or all failures
    in both arms, with equal rates) yields a degenerate CI flagged as such.
    """
    if n_t < 1 or n_c < 1:
        raise InvalidArgumentError("need at least one observation per arm")
    if not 0 <= y_t <= n_t or not 0 <= y_c <= n_c:
        raise InvalidArgumentError("need 0 <= successes <= trials")
    p_t, p_c = y_t / n_t, y_c / n_c
    est = p_t - p_c
    se = math.sqrt(p_t * (1.0 - p_t) / n_t + p_c * (1.0 - p_c) / n_c)
    z = float(ndtri(1.0 - alpha / 2.0))
    if se == 0.0:
        return WaldResult(est, 0.0, est, est, False, True)
    return WaldResult(est, se, est - z * se, est + z * se, est / se > z, False)
