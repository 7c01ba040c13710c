"""Point null Bayesian response-adaptive randomization.

A spike-and-slab hypothesis layer turns posterior hypothesis probabilities
into arm-allocation probabilities that interpolate between equal
randomization and Thompson sampling. Two evidence engines are provided: a
closed-form path for (approximately) normal effect estimates and an exact
beta-binomial path for binary outcomes. On top sit comparator allocation
policies (burn-in, capping, power transforms, randomized play-the-winner),
a frequentist estimation layer, a simulation harness, and an event-sourced
sequential trial service with CLI and HTTP front ends.
"""

from .binomial import BetaPriorSet, BinomialData, brar_binomial, logml_directional, logml_null, q_max_prob
from .errors import (
    AccuracyWarning,
    BrarError,
    CovarianceError,
    DegeneratePriorError,
    InvalidArgumentError,
    TrialConflictError,
    TrialNotFoundError,
)
from .freq import GlmFit, WaldResult, logistic_fit, rate_diff_wald, yates_log_or
from .hypotheses import (
    AllocationVector,
    EvidenceSummary,
    HypothesisId,
    PriorWeights,
    allocation_baseline_shrink,
    allocation_equal_shrink,
    default_prior_weights,
    dunnett_baseline,
    hypothesis_labels,
    posterior_from_logml,
)
from .normal import (
    EffectEstimate,
    MultiEffectEstimate,
    MvnPrior,
    NormalPrior,
    contrast_matrix,
    default_mvn_prior,
    multi_group_allocation,
    multi_group_logml,
    two_group_allocation,
    two_group_evidence,
    two_group_logml,
)
from .numerics import (
    MvnSpec,
    QuadSpec,
    adaptive_quad,
    inc_beta_reg,
    log_beta,
    logsumexp,
    mvn_cdf,
    mvn_logpdf,
    norm_cdf,
)
from .policies import (
    EvidenceEngines,
    PolicySpec,
    PowerSpec,
    RpwUrn,
    TrialState,
    cap_and_renormalize,
    next_allocation,
    power_transform,
    ramp_exponent,
    rpw_update,
)

__version__ = "0.1.0"
