"""Exact point null RAR on a four-arm snapshot of counts.

A control and three treatments have accrued some outcomes; we compute the
full evidence stack (prior weights, Bayes factors, posterior hypothesis
probabilities) and the randomization probabilities for the next patient,
first as the plain-text report and then as machine-readable JSON.
"""

import json

from brar.binomial import BetaPriorSet, BinomialData, brar_binomial, format_binomial_report

# observed successes and trials in control and 3 treatment groups
data = BinomialData(y=[10, 9, 14, 13], n=[20, 20, 22, 21])

# uniform priors for all probabilities, equipoise weight on the null
result = brar_binomial(
    data,
    BetaPriorSet(a0=1, b0=1, a=[1, 1, 1, 1], b=[1, 1, 1, 1]),
    p_null=0.5,
)

print(format_binomial_report(result))
print()
print(json.dumps(result.to_json(), indent=2))

# The same computation is exposed on the command line:
#   brar brar-binomial input.json          # report
#   brar brar-binomial input.json --json   # machine output
