"""Quantum information transmitted against the classical lower bound.

Prints the bits carried by the coherent-state fingerprint, the smallest
message a classical simultaneous-message protocol can get away with, and
their ratio. Above a ratio of one the quantum scheme sends less information
than any classical scheme could.

Run with ``python3 demos/information_advantage.py``.
"""

from qfingerprint import advantage_report
from qfingerprint import config as cfgmod

N_VALUES = (2_000_000, 40_000_000, 142_000_000, 1_000_000_000, 2_000_000_000)


def main():
    base = cfgmod.load("paper_20km")
    print(f"{'n':>13} {'quantum':>10} {'classical':>10} {'best known':>11} {'ratio':>6}")
    for n in N_VALUES:
        r = advantage_report(n, base.params.mu_total, base.mu_rel_uncertainty, base.rate, base.epsilon_target)
        print(f"{n:>13} {r.q_bits:>10.0f} {r.c_limit_bits:>10.0f} {r.c_best_known_bits:>11.0f} {r.gamma:>6.3f}")
    r = advantage_report(2_000_000_000, base.params.mu_total, base.mu_rel_uncertainty, base.rate, base.epsilon_target)
    print(f"quantum bits at 2e9 span {r.q_bits_low:.0f} to {r.q_bits_high:.0f} over the mean photon number error")


if __name__ == "__main__":
    main()
