"""Dark-detector counts against input length for the three fibre spans.

For each input length and fibre length this runs the equal and the worst-case
experiments and prints the mean count beside the decision threshold. Equal
inputs stay below the threshold and distant inputs land well above it.

Run with ``python3 demos/dark_counts_vs_length.py [repetitions]``.
"""

import sys

from qfingerprint import config as cfgmod
from qfingerprint import sweep

N_VALUES = (2_000_000, 40_000_000, 142_000_000, 1_000_000_000, 2_000_000_000)
SPANS_KM = (0, 10, 20)


def main(repetitions=1000):
    base = cfgmod.load("paper_20km", [f"repetitions = {repetitions}"])
    rows = sweep(base, N_VALUES, SPANS_KM, ["equal", "worst_case"])
    print(f"{'n':>13} {'km':>3} {'threshold':>9} {'equal':>9} {'far':>9} {'errors':>7}")
    for eq, far in zip(rows[::2], rows[1::2]):
        errors = (eq.summary.error_rate + far.summary.error_rate) * repetitions
        print(f"{eq.n:>13} {eq.fibre_km:>3} {eq.summary.threshold:>9} "
              f"{eq.summary.mean_d1:>9.2f} {far.summary.mean_d1:>9.2f} {errors:>7.0f}")  # fmt: skip


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 1000)
