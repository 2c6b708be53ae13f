"""Walk through one round of the fingerprinting protocol on a small input.

Alice and Bob each hold a 4000-bit string. Both encode it with the same
random Toeplitz code and imprint the codeword on a train of weak coherent
pulses. The referee interferes the two trains and counts clicks on the
detector that should stay dark when the inputs agree.

Run with ``python3 demos/protocol_walkthrough.py``.
"""

from qfingerprint import (
    BitString,
    ExperimentConfig,
    encode,
    estimate_min_distance,
    expected_counts,
    paper_params,
    protocol_error_bound,
    random_bits,
    run_trial,
)

N_BITS = 4000
SEED = 2014


def main():
    config = ExperimentConfig(n=N_BITS, params=paper_params(3.92), master_seed=SEED, case_kind="equal")
    code = config.code()
    print(f"input length        {code.n} bits")
    print(f"codeword length     {code.m} bits (rate {config.rate})")
    weight = estimate_min_distance(code, mode="sampled", trials=2000) * code.m
    print(f"sampled min weight  {weight:.0f} of {code.m}")

    alice = random_bits(1, N_BITS)
    bob = alice ^ BitString.from_bits([0] * 100 + [1] + [0] * (N_BITS - 101))
    distance = (encode(code, alice) ^ encode(code, bob)).popcount() / code.m
    print(f"one flipped bit moves {distance:.3f} of the codeword")

    # the referee only needs the two means and a threshold between them
    eq = expected_counts(config.params, code.m, 0.0)
    far = expected_counts(config.params, code.m, config.delta)
    rule = protocol_error_bound(config.params, code.m, config.delta)
    print(f"mean clicks if equal      {eq.lambda_d1:.4f}")
    print(f"mean clicks if delta-far  {far.lambda_d1:.4f}")
    print(f"threshold {rule.threshold}, worst error {rule.epsilon:.3g}")

    for case in ("equal", "worst_case"):
        outcome = run_trial(config.replace(case_kind=case), 0)
        print(f"{case:<11} counts {outcome.counts_d1:>3}  verdict {outcome.verdict.value}")


if __name__ == "__main__":
    main()
