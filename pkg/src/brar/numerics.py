"""Special functions and integration primitives.

Everything here is pure and reentrant. The quasi-Monte Carlo multivariate
normal CDF takes an explicit seed so results are reproducible and can be
partitioned by the caller. Marginal-likelihood code elsewhere in the package
works in the log domain throughout; the primitives here supply the log-safe
building blocks (``log_ndtr``-backed normal tails, ``logsumexp``, log beta).

NaN inputs are rejected, never propagated.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special as sp

from .errors import AccuracyWarning, CovarianceError, InvalidArgumentError

__all__ = [
    "QuadSpec",
    "MvnSpec",
    "QuadResult",
    "MvnCdfResult",
    "norm_cdf",
    "norm_logcdf",
    "norm_ppf",
    "mvn_cdf",
    "mvn_logpdf",
    "log_beta",
    "inc_beta_reg",
    "adaptive_quad",
    "beta_kernel_quad",
    "logsumexp",
]


# ---------------------------------------------------------------------------
# Specs and result containers


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances and budget for adaptive quadrature."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 200

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise InvalidArgumentError("quadrature tolerances must be > 0")
        if self.max_subdivisions < 1:
            raise InvalidArgumentError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class MvnSpec:
    """Mean vector and covariance matrix of a multivariate normal."""

    mean: tuple
    cov: tuple

    def __init__(self, mean, cov) -> None:
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise InvalidArgumentError("mean must be length d, cov d x d")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidArgumentError("mean and cov must be finite")
        if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-12):
            raise CovarianceError("covariance matrix is not symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise CovarianceError("covariance matrix is not positive definite") from exc
        object.__setattr__(self, "mean", tuple(mean))
        object.__setattr__(self, "cov", tuple(map(tuple, cov)))

    @property
    def dim(self) -> int:
        return len(self.mean)

    def mean_array(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float)

    def cov_array(self) -> np.ndarray:
        return np.asarray(self.cov, dtype=float)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float


@dataclass(frozen=True)
class MvnCdfResult:
    value: float
    error: float


# ---------------------------------------------------------------------------
# Scalar special functions (scipy-backed)


def _check_finite_or_inf(x: float, name: str) -> float:
    x = float(x)
    if math.isnan(x):
        raise InvalidArgumentError(f"{name} must not be NaN")
    return x


def norm_cdf(x: float) -> float:
    """Standard normal CDF. Accepts +-inf, rejects NaN."""
    return float(sp.ndtr(_check_finite_or_inf(x, "x")))


def norm_logcdf(x: float) -> float:
    """log of the standard normal CDF, stable far into the lower tail."""
    return float(sp.log_ndtr(_check_finite_or_inf(x, "x")))


def norm_ppf(p):
    """Standard normal quantile function (vectorized)."""
    return sp.ndtri(p)


def log_beta(a: float, b: float) -> float:
    """log B(a, b) = log G(a) + log G(b) - log G(a+b) for a, b > 0."""
    a, b = float(a), float(b)
    if not (a > 0 and b > 0) or math.isnan(a) or math.isnan(b):
        raise InvalidArgumentError("log_beta requires a > 0 and b > 0")
    return float(sp.betaln(a, b))


def inc_beta_reg(x, a: float, b: float):
    """Regularized incomplete beta function I_x(a, b); vectorized in x."""
    a, b = float(a), float(b)
    if not (a > 0 and b > 0):
        raise InvalidArgumentError("inc_beta_reg requires a > 0 and b > 0")
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise InvalidArgumentError("inc_beta_reg requires x in [0, 1]")
    out = sp.betainc(a, b, arr)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def logsumexp(values: Sequence[float]) -> float:
    """log sum exp with the usual max shift; empty input is an error."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise InvalidArgumentError("logsumexp of empty input")
    if np.any(np.isnan(arr)):
        raise InvalidArgumentError("logsumexp input contains NaN")
    m = np.max(arr)
    if m == -np.inf:
        return -np.inf
    return float(m + np.log(np.sum(np.exp(arr - m))))


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature

# 15-point Kronrod nodes (positive half) with embedded 7-point Gauss rule.
_KRONROD_NODES = np.array(
    [
        0.991455371120813,
        0.949107912342759,
        0.864864423359769,
        0.741531185599394,
        0.586087235467691,
        0.405845151377397,
        0.207784955007898,
        0.0,
    ]
)
_KRONROD_WEIGHTS = np.array(
    [
        0.022935322010529,
        0.063092092629979,
        0.104790010322250,
        0.140653259715525,
        0.169004726639267,
        0.190350578064785,
        0.204432940075298,
        0.209482141084728,
    ]
)
# Gauss weights attach to Kronrod nodes 1, 3, 5, 7 (0-based odd indices + center).
_GAUSS_WEIGHTS = np.array(
    [
        0.129484966168870,
        0.279705391489277,
        0.381830050505119,
        0.417959183673469,
    ]
)

# Full 15-node vector on [-1, 1] in ascending order, with matching weights.
_NODES_FULL = np.concatenate([-_KRONROD_NODES[:-1], _KRONROD_NODES[::-1]])  # 15 nodes
_WK_FULL = np.concatenate([_KRONROD_WEIGHTS[:-1], _KRONROD_WEIGHTS[::-1]])
_WG_FULL = np.zeros(15)
# Gauss nodes sit at positions 1,3,5,7,9,11,13 of the sorted 15-node rule.
_WG_FULL[[1, 3, 5]] = _GAUSS_WEIGHTS[[0, 1, 2]]
_WG_FULL[7] = _GAUSS_WEIGHTS[3]
_WG_FULL[[9, 11, 13]] = _GAUSS_WEIGHTS[[2, 1, 0]]


def _gk15_batch(f: Callable, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the G7/K15 pair on a batch of intervals with one call to f.

    Returns (kronrod_values, error_estimates), one entry per interval.
    """
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    # points shape: (n_intervals, 15)
    pts = mid[:, None] + half[:, None] * _NODES_FULL[None, :]
    vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
    if np.any(np.isnan(vals)):
        raise InvalidArgumentError("integrand returned NaN")
    ik = (vals * _WK_FULL).sum(axis=1) * half
    ig = (vals * _WG_FULL).sum(axis=1) * half
    diff = np.abs(ik - ig)
    # QUADPACK-style sharpening: the Kronrod error is far below |K - G| for
    # smooth panels; keep |K - G| as a safe cap.
    scaled = (200.0 * diff) ** 1.5
    err = np.where(scaled < diff, scaled, diff)
    return ik, err


def adaptive_quad(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    spec: QuadSpec = QuadSpec(),
) -> QuadResult:
    """Adaptive Gauss-Kronrod (G7/K15) integration of a vectorized integrand.

    ``f`` must accept an ndarray of abscissae and return an ndarray of values.
    Panels failing their width-shared tolerance are bisected; the panel budget
    is ``spec.max_subdivisions``. Exhausting the budget emits
    :class:`AccuracyWarning` and returns the best available estimate.
    """
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise InvalidArgumentError("adaptive_quad requires finite lo < hi")
    total_width = hi - lo

    done_val = 0.0
    done_err = 0.0
    active_lo = np.array([lo])
    active_hi = np.array([hi])
    act_val, act_err = _gk15_batch(f, active_lo, active_hi)
    n_panels = 1

    while active_lo.size:
        value = done_val + act_val.sum()
        tol = max(spec.abs_tol, spec.rel_tol * abs(value))
        # Accept panels whose error fits their share of the tolerance.
        share = tol * (active_hi - active_lo) / total_width
        ok = act_err <= share
        if np.all(ok) or done_err + act_err.sum() <= tol:
            return QuadResult(float(value), float(done_err + act_err.sum()))
        done_val += act_val[ok].sum()
        done_err += act_err[ok].sum()
        bad_lo, bad_hi = active_lo[~ok], active_hi[~ok]
        if n_panels + bad_lo.size > spec.max_subdivisions:
            best = done_val + act_val[~ok].sum()
            err = done_err + act_err[~ok].sum()
            warnings.warn(
                f"adaptive_quad: panel budget exhausted, best estimate {best!r} "
                f"with error estimate {err!r}",
                AccuracyWarning,
                stacklevel=2,
            )
            return QuadResult(float(best), float(err))
        mid = 0.5 * (bad_lo + bad_hi)
        active_lo = np.concatenate([bad_lo, mid])
        active_hi = np.concatenate([mid, bad_hi])
        act_val, act_err = _gk15_batch(f, active_lo, active_hi)
        n_panels += bad_lo.size

    return QuadResult(float(done_val), float(done_err))


_ENDPOINT_SPLIT = 1e-8


def beta_kernel_quad(
    a: float,
    b: float,
    factor: Callable[[np.ndarray], np.ndarray] | None,
    spec: QuadSpec = QuadSpec(),
) -> QuadResult:
    """Integrate t^(a-1) (1-t)^(b-1) * factor(t) over [0, 1].

    For shapes below 1 the endpoint singularities are integrable; the interval
    is split at 1e-8 from each end and the end pieces use the substitution
    t = u^p (mirrored near 1) with p chosen so the transformed integrand is
    smooth (p = 2 suffices for shapes >= 1/2; smaller shapes get a larger p).
    """
    if not (a > 0 and b > 0):
        raise InvalidArgumentError("beta kernel requires a > 0 and b > 0")

    fac = factor if factor is not None else (lambda t: np.ones_like(t))

    def kern(t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        inside = (t > 0.0) & (t < 1.0)
        ti = t[inside]
        out[inside] = np.exp((a - 1.0) * np.log(ti) + (b - 1.0) * np.log1p(-ti)) * fac(ti)
        if a >= 1.0:
            out[t == 0.0] = (1.0 if a == 1.0 else 0.0) * fac(np.zeros(1))[0]
        if b >= 1.0:
            out[t == 1.0] = (1.0 if b == 1.0 else 0.0) * fac(np.ones(1))[0]
        return out

    if a >= 1.0 and b >= 1.0:
        return adaptive_quad(kern, 0.0, 1.0, spec)

    d = _ENDPOINT_SPLIT
    mid = adaptive_quad(kern, d, 1.0 - d, spec)

    def substituted_piece(shape: float, near_one: bool) -> QuadResult:
        # t = u^p (or 1 - t = u^p near 1) maps the singular end to a
        # u^(shape p - 1) factor; pick p so that exponent is at least 1. The
        # kernel is evaluated in the distance to the singular endpoint to
        # avoid cancellation.
        p = max(2, math.ceil(2.0 / shape))

        def g(u: np.ndarray) -> np.ndarray:
            s = u**p  # distance to the singular endpoint
            out = np.zeros_like(u)
            pos = s > 0.0
            sp = s[pos]
            if near_one:
                logkern = (b - 1.0) * np.log(sp) + (a - 1.0) * np.log1p(-sp)
                fvals = fac(1.0 - sp)
            else:
                logkern = (a - 1.0) * np.log(sp) + (b - 1.0) * np.log1p(-sp)
                fvals = fac(sp)
            out[pos] = p * u[pos] ** (p - 1) * np.exp(logkern) * fvals
            return out

        return adaptive_quad(g, 0.0, d ** (1.0 / p), spec)

    lo_part = substituted_piece(a, near_one=False)
    hi_part = substituted_piece(b, near_one=True)
    return QuadResult(
        mid.value + lo_part.value + hi_part.value,
        mid.error + lo_part.error + hi_part.error,
    )


# ---------------------------------------------------------------------------
# Multivariate normal density and CDF


def _cholesky_or_raise(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise CovarianceError("covariance matrix is not positive definite") from exc


def mvn_logpdf(x, spec: MvnSpec) -> float:
    """Exact log density of N(mean, cov) at x via Cholesky factorization."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (spec.dim,):
        raise InvalidArgumentError("x has wrong dimension")
    if np.any(np.isnan(x)):
        raise InvalidArgumentError("x contains NaN")
    chol = _cholesky_or_raise(spec.cov_array())
    z = np.linalg.solve(chol, x - spec.mean_array())
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return float(-0.5 * (spec.dim * math.log(2.0 * math.pi) + logdet + z @ z))


def _bvn_upper(h: float, k: float, rho: float, spec: QuadSpec) -> float:
    """P(X <= h, Y <= k) for standard bivariate normal with correlation rho.

    Uses the reduction of the bivariate CDF to a single smooth integral over
    the correlation angle, evaluated with the adaptive Gauss-Kronrod rule;
    deterministic and accurate well below 1e-10 for |rho| <= 1.
    """
    if rho == 0.0:
        return norm_cdf(h) * norm_cdf(k)
    rho = min(1.0, max(-1.0, rho))
    if rho == 1.0:
        return norm_cdf(min(h, k))
    if rho == -1.0:
        return max(0.0, norm_cdf(h) - norm_cdf(-k))
    if math.isinf(h) or math.isinf(k):
        if h == -math.inf or k == -math.inf:
            return 0.0
        if h == math.inf:
            return norm_cdf(k)
        if k == math.inf:
            return norm_cdf(h)
    asr = math.asin(rho)
    hk = h * k
    hs = 0.5 * (h * h + k * k)

    def integrand(theta: np.ndarray) -> np.ndarray:
        sn = np.sin(theta)
        cs2 = 1.0 - sn * sn
        return np.exp((sn * hk - hs) / cs2)

    piece = adaptive_quad(integrand, min(0.0, asr), max(0.0, asr), spec)
    signed = piece.value if asr > 0 else -piece.value
    val = norm_cdf(h) * norm_cdf(k) + signed / (2.0 * math.pi)
    return min(1.0, max(0.0, val))


_PRIMES = np.array([2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37], dtype=float)


def _qmc_upper(
    b: np.ndarray,
    corr: np.ndarray,
    tol: float,
    seed: int,
    n_shifts: int,
    max_points: int,
) -> tuple[float, float]:
    """Genz separation-of-variables estimate of P(Z <= b), Z ~ N(0, corr).

    Richtmyer lattice points with randomized shifts; variables are reordered
    so the tightest standardized limits integrate first.
    """
    d = b.size
    order = np.argsort(b, kind="stable")
    b = b[order]
    corr = corr[np.ix_(order, order)]
    chol = _cholesky_or_raise(corr)

    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    max_shifts = 4 * n_shifts
    shifts = gen.random((max_shifts, d - 1))
    lattice = np.sqrt(_PRIMES[: d - 1])
    e1 = sp.ndtr(b[0] / chol[0, 0])

    def accumulate(shift_rows: np.ndarray, start: int, stop: int) -> np.ndarray:
        p = np.arange(start + 1, stop + 1, dtype=float)
        base = np.outer(p, lattice)  # (stop - start, d-1)
        out = np.empty(shift_rows.shape[0])
        for s in range(shift_rows.shape[0]):
            u = np.mod(base + shift_rows[s], 1.0)
            # Antithetic fold improves lattice uniformity near the edges.
            u = np.abs(2.0 * u - 1.0)
            w = np.full(p.size, e1)
            y = np.empty((p.size, d - 1))
            e_prev = np.full(p.size, e1)
            for k in range(1, d):
                z = np.clip(u[:, k - 1] * e_prev, 1e-316, 1.0 - 1e-16)
                y[:, k - 1] = sp.ndtri(z)
                t = y[:, :k] @ chol[k, :k]
                e_k = sp.ndtr((b[k] - t) / chol[k, k])
                w *= e_k
                e_prev = e_k
            out[s] = w.sum()
        return out

    active = n_shifts
    sums = np.zeros(max_shifts)
    count = 0
    n_new = 2000
    while True:
        sums[:active] += accumulate(shifts[:active], count, count + n_new)
        count += n_new
        means = sums[:active] / count
        est = float(means.mean())
        se = float(means.std(ddof=1) / math.sqrt(active)) if active > 1 else 0.0
        if se <= tol:
            return min(1.0, max(0.0, est)), se
        if count >= max_points:
            # Per-shift budget reached: add further randomized shifts before
            # giving up, then report the best estimate with a warning.
            if active < max_shifts:
                new = min(n_shifts, max_shifts - active)
                sums[active : active + new] = accumulate(
                    shifts[active : active + new], 0, count
                )
                active += new
                continue
            warnings.warn(
                f"mvn_cdf: point budget exhausted, best estimate {est!r} "
                f"with standard error {se!r}",
                AccuracyWarning,
                stacklevel=3,
            )
            return min(1.0, max(0.0, est)), se
        n_new = min(count, max_points - count)


def mvn_cdf(
    upper,
    spec: MvnSpec,
    tol: float = 1e-6,
    seed: int = 0,
    n_shifts: int = 8,
    max_points: int = 50_000,
) -> MvnCdfResult:
    """P(X <= upper componentwise) for X ~ N(mean, cov), with error estimate.

    d = 1 and d = 2 use deterministic fast paths (univariate CDF and the
    bivariate angle quadrature); higher dimensions use randomized quasi-Monte
    Carlo with ``n_shifts`` shifted Richtmyer lattices of up to ``max_points``
    points each. The reported error is an estimated standard error (0 for the
    deterministic paths). Identical inputs and seed give identical output.
    """
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if upper.shape != (spec.dim,):
        raise InvalidArgumentError("upper has wrong dimension")
    if np.any(np.isnan(upper)):
        raise InvalidArgumentError("upper contains NaN")
    if n_shifts < 2:
        raise InvalidArgumentError("need at least two randomized shifts for an error estimate")
    d = spec.dim
    if d > 8:
        raise InvalidArgumentError("mvn_cdf supports dimension <= 8")
    cov = spec.cov_array()
    sd = np.sqrt(np.diag(cov))
    b = (upper - spec.mean_array()) / sd

    if np.any(b == -np.inf):
        return MvnCdfResult(0.0, 0.0)
    if d == 1:
        return MvnCdfResult(norm_cdf(b[0]), 0.0)

    corr = cov / np.outer(sd, sd)
    np.fill_diagonal(corr, 1.0)

    if d == 2:
        qspec = QuadSpec(abs_tol=1e-13, rel_tol=1e-12, max_subdivisions=200)
        return MvnCdfResult(_bvn_upper(b[0], b[1], corr[0, 1], qspec), 1e-12)

    finite = np.isfinite(b)
    if not np.all(finite):
        # +inf components integrate out exactly: marginalize them away.
        sub = MvnSpec(np.zeros(int(finite.sum())), corr[np.ix_(finite, finite)])
        return mvn_cdf(b[finite], sub, tol=tol, seed=seed, n_shifts=n_shifts, max_points=max_points)

    # Independence fast path: the product is exact.
    if np.allclose(corr, np.eye(d), atol=1e-14):
        return MvnCdfResult(float(np.prod(sp.ndtr(b))), 0.0)

    est, se = _qmc_upper(b, corr, tol, seed, n_shifts, max_points)
    return MvnCdfResult(est, se)
