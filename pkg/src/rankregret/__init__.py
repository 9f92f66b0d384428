"""Strongly proper composite losses and surrogate regret bounds for bipartite ranking."""

from .bounds import (
    bartlett_sqrt_bound_check,
    check_main_bound,
    kotlowski_check,
    low_noise_bound_diagnostic,
    main_bound_rhs,
)
from .construct import (
    ConcaveRiskSpec,
    canonical_link,
    certify_all,
    certify_proper,
    certify_regular,
    certify_strictly_proper,
    certify_strongly_proper,
    from_concave_risk,
    strong_concavity_modulus,
)
from .distribution import (
    FiniteDistribution,
    bayes_ranking_risk,
    demo_distribution,
    induce_pairwise,
    load_distribution,
    noise_certificate,
    positive_rate,
    sample,
)
from .losses import (
    CompositeLoss,
    Link,
    ProperLoss,
    bayes_risk,
    catalog,
    conditional_regret,
    conditional_risk,
    evaluate_composite,
    get_loss,
    loss_gradient,
    truncate_scores,
)
from .regret import (
    balanced_surrogate_regret,
    pairwise_surrogate_regret,
    pairwise_zero_one_regret,
    plugin_bound,
    ranking_error,
    ranking_regret,
    surrogate_regret,
)
from .trainer import TrainConfig, fit_scores, gradient_check, plugin_from_scores

__version__ = "0.1.0"
