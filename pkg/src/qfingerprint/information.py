"""Transmitted-information accounting.

``Q(mu, m) = mu log2 m + (mu + 1) log2(mu + 1) - mu log2 mu`` bounds the
information carried by ``m`` coherent modes with total mean photon number
``mu``: the number of photons times the bits needed to name their mode, plus
the entropy of a thermal photon-number distribution with mean ``mu``.  It is
``O(mu log n)`` at fixed code rate.

The classical comparison points are the lower bound for simultaneous
message passing, ``(1 - 2 sqrt(eps)) sqrt(n / (2 ln 2)) - 1``, and the
``32 sqrt(n)`` cost of the best known classical protocol.
"""

import math
import warnings
from dataclasses import dataclass

from scipy.special import xlogy

from .toeplitz import codeword_length


class DomainWarning(UserWarning):
    pass


@dataclass(frozen=True)
class InfoReport:
    n: int
    m: int
    mu: float
    q_bits: float
    q_bits_low: float
    q_bits_high: float
    c_limit_bits: float
    c_best_known_bits: float

    @property
    def gamma(self):
        return self.c_limit_bits / self.q_bits if self.q_bits > 0 else math.inf


def quantum_info_bound(mu, m):
    if mu < 0:
        raise ValueError("mu must be non-negative")
    if m < 1:
        raise ValueError("m must be at least 1")
    return float(mu * math.log2(m) + (xlogy(mu + 1, mu + 1) - xlogy(mu, mu)) / math.log(2))


def classical_limit(n, epsilon):
    """Lower bound on classical bits for error ``epsilon``, clamped at zero."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if epsilon >= 0.25:
        warnings.warn(f"epsilon={epsilon} >= 0.25 leaves no classical bound", DomainWarning, stacklevel=2)
        return 0.0
    return max(0.0, (1.0 - 2.0 * math.sqrt(epsilon)) * math.sqrt(n / (2.0 * math.log(2))) - 1.0)


def best_known_classical(n):
    if n < 1:
        raise ValueError("n must be at least 1")
    return 32.0 * math.sqrt(n)


def advantage_report(n, mu, mu_rel_uncertainty=0.0, rate=0.24, epsilon=2.6e-5):
    """Q, both classical costs and their ratio for one input size.

    The Q band evaluates the bound at ``mu * (1 -/+ mu_rel_uncertainty)``.
    """
    if not 0.0 <= mu_rel_uncertainty <= 1.0:
        raise ValueError("mu_rel_uncertainty must lie in [0, 1]")
    m = codeword_length(n, rate)
    return InfoReport(
        n=int(n),
        m=m,
        mu=float(mu),
        q_bits=quantum_info_bound(mu, m),
        q_bits_low=quantum_info_bound(mu * (1.0 - mu_rel_uncertainty), m),
        q_bits_high=quantum_info_bound(mu * (1.0 + mu_rel_uncertainty), m),
        c_limit_bits=classical_limit(n, epsilon),
        c_best_known_bits=best_known_classical(n),
    )
