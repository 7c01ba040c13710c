"""How the null-hypothesis prior weight tempers two-group adaptation.

One observation per group arrives at each step from normal outcomes with a
true mean difference of 0.25 and unit standard deviation. At each step the
effect estimate (mean difference with its standard error) feeds the normal
evidence engine, and we track the treatment randomization probability for a
grid of null prior weights. p_null = 0 is Thompson sampling (most erratic),
p_null = 1 is static equal randomization, values in between interpolate.
"""

import numpy as np

from brar.normal import EffectEstimate, NormalPrior, two_group_allocation

rng = np.random.default_rng(2)
true_effect = 0.25
steps = 120
p_null_grid = [0.0, 0.25, 0.5, 0.75, 1.0]
prior = NormalPrior(mu=0.0, tau=1.0)

control = []
treatment = []
traces = {p: [0.5] for p in p_null_grid}
for step in range(1, steps + 1):
    control.append(rng.normal(0.0, 1.0))
    treatment.append(rng.normal(true_effect, 1.0))
    diff = float(np.mean(treatment) - np.mean(control))
    se = float(np.sqrt(np.var(treatment, ddof=1) / step + np.var(control, ddof=1) / step)) if step > 1 else np.sqrt(2.0)
    est = EffectEstimate(diff, se)
    for p in p_null_grid:
        traces[p].append(two_group_allocation(est, prior, p).probs[1])

for p in p_null_grid:
    tr = traces[p]
    marks = "".join("#" if v > 0.75 else "+" if v > 0.55 else "-" if v < 0.45 else "." for v in tr[1::6])
    print(f"p_null={p:>4}: final pi={tr[-1]:.3f}  path {marks}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for p in p_null_grid:
        ax.plot(range(steps + 1), traces[p], label=f"p_null = {p:g}")
    ax.axhline(0.5, color="gray", lw=0.5)
    ax.set_xlabel("observations per group")
    ax.set_ylabel("treatment randomization probability")
    ax.set_ylim(0, 1)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig("two_group_shrinkage.png", dpi=120)
    print("wrote two_group_shrinkage.png")
except ImportError:
    pass
