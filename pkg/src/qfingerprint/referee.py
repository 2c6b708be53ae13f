"""Referee decision rule: Poisson tails and the click threshold on D1."""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .optics import expected_counts


class DegenerateConfigError(ValueError):
    """Equal and different inputs give indistinguishable D1 statistics."""


class Verdict(str, enum.Enum):
    EQUAL = "equal"
    DIFFERENT = "different"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DecisionRule:
    threshold: int
    err_equal: float
    err_diff: float
    lambda_equal: float = math.nan
    lambda_diff: float = math.nan

    @property
    def epsilon(self):
        return max(self.err_equal, self.err_diff)


def _check(k, lam):
    if np.any(np.asarray(k) < 0) or np.any(np.asarray(lam) < 0):
        raise ValueError("k and lambda must be non-negative")


def poisson_cdf(k, lam):
    """P(X <= k) for X ~ Poisson(lam).

    Evaluated as the regularised upper incomplete gamma function Q(k + 1, lam),
    which stays accurate where the term-by-term series under- or overflows.
    """
    _check(k, lam)
    return special.pdtr(k, lam)


def poisson_sf(k, lam):
    """P(X > k), computed directly rather than as ``1 - cdf``."""
    _check(k, lam)
    return special.pdtrc(k, lam)


def choose_threshold(lambda_equal, lambda_diff):
    """Integer threshold minimising the larger of the two error probabilities.

    ``err_equal = P(X > th | lambda_equal)`` and
    ``err_diff = P(X <= th | lambda_diff)``; ties go to the smaller threshold.
    """
    if lambda_equal < 0:
        raise ValueError("lambda_equal must be non-negative")
    if not lambda_diff > lambda_equal:
        raise DegenerateConfigError(
            f"lambda_diff={lambda_diff} does not exceed lambda_equal={lambda_equal}"
        )
    # err_diff ~ 1 above hi and err_equal ~ 1 below lo, so the optimum lies between
    hi = int(math.ceil(lambda_diff + 12.0 * math.sqrt(lambda_diff) + 20.0))
    lo = max(0, int(math.floor(lambda_equal - 12.0 * math.sqrt(lambda_equal) - 20.0)))
    th = np.arange(lo, hi + 1)
    err_eq = special.pdtrc(th, lambda_equal)
    err_diff = special.pdtr(th, lambda_diff)
    i = int(np.argmin(np.maximum(err_eq, err_diff)))
    return DecisionRule(int(th[i]), float(err_eq[i]), float(err_diff[i]), float(lambda_equal), float(lambda_diff))


def decide(counts_d1, rule):
    """Equal iff the D1 count does not exceed the threshold."""
    if counts_d1 < 0:
        raise ValueError("counts must be non-negative")
    return Verdict.EQUAL if counts_d1 <= rule.threshold else Verdict.DIFFERENT


def protocol_error_bound(params, m, delta):
    """Decision rule for equal inputs against worst-case inputs at distance delta."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    lam_eq = expected_counts(params, m, 0.0).lambda_d1
    lam_diff = expected_counts(params, m, delta).lambda_d1
    return choose_threshold(lam_eq, lam_diff)
