"""Allocation policy layer: transforms, urn scheme, burn-in, fallbacks."""

import numpy as np
import pytest

from brar.errors import InvalidArgumentError
from brar.hypotheses import AllocationVector
from brar.policies import (
    PolicySpec,
    PowerSpec,
    RpwUrn,
    TrialState,
    cap_and_renormalize,
    next_allocation,
    power_transform,
    ramp_exponent,
    rpw_update,
    rpw_urn_from_counts,
)


class TestPowerTransform:
    def test_identity_at_one(self):
        alloc = AllocationVector([0.7, 0.2, 0.1])
        out = power_transform(alloc, 1.0)
        assert out.as_array() == pytest.approx(alloc.as_array(), abs=1e-15)

    def test_limit_to_uniform(self):
        out = power_transform(AllocationVector([0.8, 0.2]), 1e-9)
        assert out.as_array() == pytest.approx([0.5, 0.5], abs=1e-9)

    def test_square_root(self):
        out = power_transform(AllocationVector([0.8, 0.2]), 0.5)
        expected = np.sqrt(0.8) / (np.sqrt(0.8) + np.sqrt(0.2))
        assert out.probs[0] == pytest.approx(expected, abs=1e-12)
        assert out.probs[0] == pytest.approx(0.6667, abs=1e-4)

    def test_argmax_preserved_and_max_reduced(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            m = int(rng.integers(2, 6))
            p = rng.dirichlet(np.ones(m))
            c = rng.uniform(0.05, 0.95)
            out = power_transform(AllocationVector(p), c).as_array()
            assert np.argmax(out) == np.argmax(p)
            if not np.allclose(p, 1 / m):
                assert out.max() <= p.max() + 1e-12

    def test_zero_entries_stay_zero(self):
        out = power_transform(AllocationVector([0.0, 0.3, 0.7]), 0.5)
        assert out.probs[0] == 0.0

    def test_invalid_exponent(self):
        with pytest.raises(InvalidArgumentError):
            power_transform(AllocationVector([0.5, 0.5]), 0.0)


class TestCapAndRenormalize:
    def test_interior_unchanged(self):
        out = cap_and_renormalize(AllocationVector([0.5, 0.5]), 0.1, 0.9)
        assert out.probs == (0.5, 0.5)

    def test_documented_trace_three_arms(self):
        out = cap_and_renormalize(AllocationVector([0.95, 0.03, 0.02]), 0.1, 0.9)
        assert out.as_array() == pytest.approx([0.8, 0.1, 0.1], abs=1e-12)

    def test_documented_trace_four_arms(self):
        out = cap_and_renormalize(AllocationVector([0.97, 0.01, 0.01, 0.01]), 0.1, 0.9)
        assert out.as_array() == pytest.approx([0.7, 0.1, 0.1, 0.1], abs=1e-12)

    def test_second_pass_when_rescale_dips_below(self):
        # rescaling pushes a mid entry below the floor; it must be re-pinned
        out = cap_and_renormalize(AllocationVector([0.85, 0.105, 0.045]), 0.1, 0.9)
        arr = out.as_array()
        assert np.all(arr >= 0.1 - 1e-12) and np.all(arr <= 0.9 + 1e-12)
        assert arr.sum() == pytest.approx(1.0, abs=1e-12)

    def test_fuzz_bounds_and_simplex(self):
        rng = np.random.default_rng(2024)
        for _ in range(10_000)    :
            m = int(rng.integers(2, 6))
            p = rng.dirichlet(rng.uniform(0.2, 3.0) * np.ones(m))
            lo = float(rng.uniform(0.0, 1.0 / m * 0.9))
            hi = float(rng.uniform(1.0 / m * 1.1, 1.0))
            out = cap_and_renormalize(AllocationVector(p), lo, hi).as_array()
            assert np.all(out >= lo - 1e-9), (p, lo, hi, out)
            assert np.all(out <= hi + 1e-9), (p, lo, hi, out)
            assert out.sum() == pytest.approx(1.0, abs=1e-9)

    def test_infeasible_bounds(self):
        with pytest.raises(InvalidArgumentError):
            cap_and_renormalize(AllocationVector([0.5, 0.3, 0.2]), 0.4, 0.9)


class TestRamp:
    def test_reaches_half_at_n(self):
        assert ramp_exponent(200, 200) == 0.5
        assert ramp_exponent(100, 200) == 0.25

    def test_power_spec_validation(self):
        with pytest.raises(InvalidArgumentError):
            PowerSpec(constant=0.5, ramp=True)
        with pytest.raises(InvalidArgumentError):
            PowerSpec()


class TestRpw:
    def test_success_adds_to_same_arm(self):
        urn = rpw_update(RpwUrn((1.0, 1.0)), 1, 1)
        assert urn.balls == (1.0, 2.0)

    def test_control_failure_feeds_treatment(self):
        urn = rpw_update(RpwUrn((1.0, 2.0)), 0, 0)
        assert urn.balls == (1.0, 3.0)

    def test_three_arm_failure_split(self):
        urn = rpw_update(RpwUrn((1.0, 1.0, 1.0)), 0, 0)
        assert urn.balls == (1.0, 1.5, 1.5)

    def test_total_grows_by_one(self):
        rng = np.random.default_rng(3)
        urn = RpwUrn.initial(3)
        for _ in range(50):
            total = urn.total
            urn = rpw_update(urn, int(rng.integers(0, 3)), int(rng.integers(0, 2)))
            assert urn.total == pytest.approx(total + 1.0, abs=1e-12)

    def test_counts_reconstruction_matches_sequential(self):
        rng = np.random.default_rng(8)
        m = 3
        urn = RpwUrn.initial(m)
        y = [0] * m
        n = [0] * m
        for _ in range(40):
            arm = int(rng.integers(0, m))
            outcome = int(rng.integers(0, 2))
            urn = rpw_update(urn, arm, outcome)
            n[arm] += 1
            y[arm] += outcome
        rebuilt = rpw_urn_from_counts(y, n)
        assert rebuilt.balls == pytest.approx(urn.balls, abs=1e-12)


class TestNextAllocation:
    def test_equal_policy(self):
        state = TrialState(3, ((0, 1), (2, 0)))
        decision = next_allocation(state, PolicySpec(method="equal"))
        assert decision.allocation.as_array() == pytest.approx([1 / 3] * 3, abs=1e-15)
        assert not decision.fallback

    def test_empty_state_binomial_symmetric(self):
        state = TrialState(2)
        decision = next_allocation(state, PolicySpec(method="point_null_binomial", p_null=0.5))
        assert decision.allocation.as_array() == pytest.approx([0.5, 0.5], abs=1e-10)

    def test_worked_example_counts(self):
        events = []
        y = (10, 9, 14, 13)
        n = (20, 20, 22, 21)
        for arm in range(4):
            events += [(arm, 1)] * y[arm] + [(arm, 0)] * (n[arm] - y[arm])
        state = TrialState(4, tuple(events))
        decision = next_allocation(state, PolicySpec(method="point_null_binomial", p_null=0.5))
        assert decision.allocation.as_array() == pytest.approx(
            [0.236, 0.231, 0.270, 0.263], abs=1e-3
        )

    def test_burn_in_forces_equal(self):
        state = TrialState(2, ((1, 1),) * 10)
        spec = PolicySpec(method="point_null_binomial", p_null=0.0, burn_in=50)
        decision = next_allocation(state, spec)
        assert decision.allocation.probs == (0.5, 0.5)
        # past the burn-in the evidence takes over
        state_big = TrialState(2, ((1, 1),) * 50)
        decision2 = next_allocation(state_big, spec)
        assert decision2.allocation.probs[1] > 0.5

    def test_normal_fallback_on_sparse_data(self):
        state = TrialState(2, ((1, 1),))
        spec = PolicySpec(method="point_null_normal", p_null=0.5)
        decision = next_allocation(state, spec)
        assert decision.fallback
        assert decision.allocation.probs == (0.5, 0.5)

    def test_yates_estimator_never_falls_back(self):
        state = TrialState(2, ((1, 1),))
        spec = PolicySpec(method="point_null_normal", p_null=0.5, estimator="yates")
        decision = next_allocation(state, spec)
        assert not decision.fallback
        assert decision.allocation.probs[1] != 0.5

    def test_rpw_allocation(self):
        state = TrialState(2, ((1, 1), (0, 0)))
        decision = next_allocation(state, PolicySpec(method="rpw"))
        assert decision.allocation.as_array() == pytest.approx([0.25, 0.75], abs=1e-12)

    def test_fixed_baseline(self):
        spec = PolicySpec(method="fixed", baseline=(0.4, 0.3, 0.3))
        decision = next_allocation(TrialState(3), spec)
        assert decision.allocation.probs == (0.4, 0.3, 0.3)

    def test_modifications_order_power_then_cap(self):
        events = tuple([(1, 1)] * 12 + [(0, 0)] * 8)
        state = TrialState(2, events)
        base = next_allocation(state, PolicySpec(method="point_null_binomial", p_null=0.0))
        spec = PolicySpec(
            method="point_null_binomial",
            p_null=0.0,
            power=PowerSpec(constant=0.5),
            cap=(0.1, 0.9),
        )
        decision = next_allocation(state, spec)
        expected = cap_and_renormalize(power_transform(base.allocation, 0.5), 0.1, 0.9)
        assert decision.allocation.as_array() == pytest.approx(expected.as_array(), abs=1e-12)

    def test_replay_determinism(self):
        rng = np.random.default_rng(10)
        events = tuple((int(rng.integers(0, 2)), int(rng.integers(0, 2))) for _ in range(30))
        state = TrialState(2, events)
        spec = PolicySpec(method="point_null_binomial", p_null=0.25, cap=(0.1, 0.9))
        a = next_allocation(state, spec).allocation.probs
        b = next_allocation(TrialState(2, events), spec).allocation.probs
        assert a == b


class TestPolicySpecJson:
    def test_round_trip(self):
        spec = PolicySpec(
            method="point_null_binomial",
            p_null=0.75,
            burn_in=50,
            cap=(0.1, 0.9),
            power=PowerSpec(ramp=True),
            n_max=200,
        )
        again = PolicySpec.from_json(spec.to_json())
        assert again == spec

    def test_documented_schema_parses(self):
        obj = {
            "method": "point_null_binomial",
            "p_null": 0.75,
            "burn_in": 50,
            "cap": [0.1, 0.9],
            "power": {"ramp": True},
            "n_max": 200,
        }
        spec = PolicySpec.from_json(obj)
        assert spec.p_null == 0.75
        assert spec.cap == (0.1, 0.9)
        assert spec.power.ramp

    def test_unknown_method_rejected(self):
        with pytest.raises(InvalidArgumentError):
            PolicySpec(method="bandit")
