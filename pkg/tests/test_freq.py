"""Logistic IRLS, Yates-corrected log odds ratios, Wald rate-difference."""

import math

import numpy as np
import pytest

from brar.binomial import BinomialData
from brar.errors import InvalidArgumentError
from brar.freq import (
    logistic_fit,
    rate_diff_wald,
    sequential_yates_estimate,
    yates_log_or,
)


class TestLogisticFit:
    def test_balanced_null_table(self):
        fit = logistic_fit(BinomialData([5, 5], [10, 10]))
        assert fit.converged
        assert fit.coef[1] == pytest.approx(0.0, abs=1e-10)
        assert fit.cov[1][1] == pytest.approx(0.8, abs=1e-8)

    def test_closed_form_log_or(self):
        fit = logistic_fit(BinomialData([10, 15], [20, 20]))
        assert fit.converged
        assert fit.coef[1] == pytest.approx(math.log(3.0), abs=1e-8)

    def test_separation_flagged(self):
        fit = logistic_fit(BinomialData([0, 1], [1, 1]))
        assert not fit.converged

    def test_empty_arm_flagged(self):
        fit = logistic_fit(BinomialData([0, 2], [0, 5]))
        assert not fit.converged

    def test_matches_closed_form_all_positive_cells(self):
        rng = np.random.default_rng(4)
        for _ in range(40):
            n = rng.integers(5, 60, 2)
            y = [int(rng.integers(1, v)) for v in n]
            if y[0] == n[0] or y[1] == n[1]:
                continue
            fit = logistic_fit(BinomialData(y, list(n)))
            assert fit.converged
            expected = math.log(y[1] * (n[0] - y[0]) / ((n[1] - y[1]) * y[0]))
            assert fit.coef[1] == pytest.approx(expected, abs=1e-8)

    def test_covariance_is_inverse_information(self):
        data = BinomialData([7, 12, 9], [20, 22, 18])
        fit = logistic_fit(data)
        assert fit.converged
        x = np.array([[1, 0, 0], [1, 1, 0], [1, 0, 1]], dtype=float)
        eta = x @ fit.coef_array()
        p = 1 / (1 + np.exp(-eta))
        w = np.asarray(data.n) * p * (1 - p)
        info = x.T @ (w[:, None] * x)
        assert fit.cov_array() == pytest.approx(np.linalg.inv(info), rel=1e-6)

    def test_multiarm_coefficients(self):
        data = BinomialData([10, 9, 14, 13], [20, 20, 22, 21])
        fit = logistic_fit(data)
        assert fit.converged
        # per-arm log odds relative to control, closed form
        odds = [y / (n - y) for y, n in zip(data.y, data.n)]
        for arm in range(1, 4):
            assert fit.coef[arm] == pytest.approx(math.log(odds[arm] / odds[0]), abs=1e-8)


class TestYatesLogOr:
    def test_ecmo_after_two_patients(self):
        est = yates_log_or(BinomialData([0, 1], [1, 1]))
        assert est.theta_hat == pytest.approx(math.log(9), abs=1e-12)
        assert est.se == pytest.approx(math.sqrt(16 / 3), abs=1e-12)

    def test_symmetric_table_zero(self):
        est = yates_log_or(BinomialData([3, 3], [6, 6]))
        assert est.theta_hat == 0.0

    def test_ecmo_final_table(self):
        est = yates_log_or(BinomialData([0, 11], [1, 11]))
        assert est.theta_hat == pytest.approx(math.log(69), abs=1e-12)

    def test_antisymmetric_under_arm_swap(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            n = rng.integers(1, 30, 2)
            y = [int(rng.integers(0, v + 1)) for v in n]
            a = yates_log_or(BinomialData(y, list(n)))
            b = yates_log_or(BinomialData(y[::-1], list(n[::-1])))
            assert a.theta_hat == pytest.approx(-b.theta_hat, abs=1e-12)
            assert a.se == pytest.approx(b.se, abs=1e-12)

    def test_requires_two_arms(self):
        with pytest.raises(InvalidArgumentError):
            yates_log_or(BinomialData([1, 1, 1], [2, 2, 2]))


class TestSequentialYates:
    def test_flips_while_control_unobserved(self):
        flipped = sequential_yates_estimate(BinomialData([0, 1], [0, 1]))
        plain = yates_log_or(BinomialData([0, 1], [0, 1]))
        assert flipped.theta_hat == pytest.approx(-plain.theta_hat, abs=1e-14)
        assert flipped.se == plain.se

    def test_agrees_once_control_observed(self):
        data = BinomialData([0, 1], [1, 1])
        assert sequential_yates_estimate(data) == yates_log_or(data)


class TestRateDiffWald:
    def test_equal_rates(self):
        res = rate_diff_wald(5, 10, 5, 10)
        assert res.estimate == 0.0
        assert not res.reject

    def test_arithmetic(self):
        res = rate_diff_wald(15, 20, 10, 20)
        assert res.estimate == pytest.approx(0.25, abs=1e-15)
        assert res.se == pytest.approx(math.sqrt(0.75 * 0.25 / 20 + 0.5 * 0.5 / 20), abs=1e-9)
        assert res.se == pytest.approx(0.147902, abs=5e-7)

    def test_degenerate_zero_rates(self):
        res = rate_diff_wald(0, 10, 0, 10)
        assert res.degenerate
        assert not res.reject
        assert res.ci_lo == res.ci_hi == 0.0

    def test_ci_covers_estimate_and_reject_consistency(self):
        rng = np.random.default_rng(6)
        z = 1.959964
        for _ in range(200):
            n_t, n_c = rng.integers(2, 50, 2)
            y_t = int(rng.integers(0, n_t + 1))
            y_c = int(rng.integers(0, n_c + 1))
            res = rate_diff_wald(y_t, int(n_t), y_c, int(n_c))
            assert res.ci_lo <= res.estimate <= res.ci_hi
            if res.reject:
                assert res.estimate / res.se > z - 1e-9

    def test_needs_observations(self):
        with pytest.raises(InvalidArgumentError):
            rate_diff_wald(0, 0, 1, 2)
