"""Exact binomial vs normal-approximation RAR with three treatments.

Binary outcomes arrive one per group per step; treatment 1 has the highest
true success probability. The exact engine consumes raw counts; the normal
engine consumes log odds ratios from a logistic fit (falling back to equal
allocation while the fit is degenerate). The two paths broadly track each
other, diverging most when the evidence is strong, and both concentrate on
treatment 1.
"""

import numpy as np

from brar.binomial import BetaPriorSet, BinomialData, brar_binomial
from brar.freq import logistic_fit
from brar.normal import MultiEffectEstimate, default_mvn_prior, multi_group_allocation

rng = np.random.default_rng(7)
truth = np.array([0.15, 0.4, 0.2, 0.2])  # control, t1, t2, t3
steps = 80
p_null = 0.5

y = np.zeros(4, dtype=int)
n = np.zeros(4, dtype=int)
exact_trace = []
normal_trace = []
for step in range(steps):
    n += 1
    y += rng.random(4) < truth

    exact = brar_binomial(BinomialData(y, n), BetaPriorSet.uniform(4), p_null)
    exact_trace.append(exact.allocation.probs[1])

    fit = logistic_fit(BinomialData(y, n))
    if fit.converged:
        cov = fit.cov_array()
        est = MultiEffectEstimate(fit.coef_array()[1:], cov[1:, 1:])
        _, alloc = multi_group_allocation(est, default_mvn_prior(3), p_null, seed=123)
        normal_trace.append(alloc.probs[1])
    else:
        normal_trace.append(0.25)

print("step  exact_t1  normal_t1  |diff|")
for step in range(0, steps, 8):
    d = abs(exact_trace[step] - normal_trace[step])
    print(f"{step:>4}  {exact_trace[step]:.3f}     {normal_trace[step]:.3f}      {d:.3f}")
print(f"final exact {exact_trace[-1]:.3f}, normal {normal_trace[-1]:.3f}")
assert exact_trace[-1] > 0.4 and normal_trace[-1] > 0.4
