"""Discriminatory power, confidence intervals and PD curves for low-default portfolios."""

__version__ = "0.1.0"

from .distributions import (  # noqa: E402
    ConditionalSamples,
    DiscreteJoint,
    DistFn,
    KernelEstimate,
    binomial_grade_dist,
    empirical_cdf,
    generalized_inverse,
    kernel_estimate,
    mixture_cdf,
    modified_empirical_cdf,
    normal_dist,
)
from .power import (  # noqa: E402
    PowerEstimate,
    auc_empirical,
    auc_kernel,
    auc_normal,
    auc_star_discrete,
    auc_star_empirical,
    power_estimate,
)
from .rng import RngStream  # noqa: E402

__all__ = [
    "ConditionalSamples", "DiscreteJoint", "DistFn", "KernelEstimate", "PowerEstimate",
    "RngStream", "auc_empirical", "auc_kernel", "auc_normal", "auc_star_discrete",
    "auc_star_empirical", "binomial_grade_dist", "empirical_cdf", "generalized_inverse",
    "kernel_estimate", "mixture_cdf", "modified_empirical_cdf", "normal_dist", "power_estimate",
]
