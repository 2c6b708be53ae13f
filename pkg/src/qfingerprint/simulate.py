"""End-to-end protocol runs: inputs, codewords, sampled clicks and verdicts.

Seeds
-----
All randomness for trial ``t`` of an experiment with master seed ``s`` comes
from :func:`~qfingerprint.rng.derive_seed` applied to ``(s, t, k)`` with a
fixed stream index ``k`` per purpose:

====  =========================================
k     purpose
====  =========================================
0     uniform driving the D1 count
1     uniform driving the D0 count
2     worst-case flip pattern (per-pulse mode)
3, 4  random inputs of the two parties
5     per-slot click generator (per-pulse mode)
====  =========================================

The shared code uses ``derive_seed(s)``.  Aggregate counts are obtained by
inverting the Poisson CDF at those uniforms, so a trial produces the same
counts whether it runs alone or inside a vectorised batch, on any platform
and in any worker process.
"""

import enum
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .bits import BitString, flip_fraction, from_file, random_bits, round_half_up
from .information import advantage_report
from .optics import PAPER_LOSSES_DB, SystemParams, expected_counts, slot_click_probs
from .referee import Verdict, decide, protocol_error_bound
from .rng import derive_seed, derive_seeds, to_unit
from .toeplitz import DEFAULT_MEMORY_BUDGET, codeword_length, codeword_weight, encode, new_code

log = logging.getLogger(__name__)

#: Largest codeword length accepted in per-pulse sampling mode.
PER_PULSE_MAX_M = 1 << 24
_PULSE_CHUNK = 1 << 20

_U_D1, _U_D0, _FLIPS, _INPUT_A, _INPUT_B, _SLOTS = range(6)


class CaseKind(str, enum.Enum):
    EQUAL = "equal"
    WORST_CASE = "worst_case"
    RANDOM_PAIR = "random_pair"
    FILE_PAIR = "file_pair"

    def __str__(self):
        return self.value


class SamplingMode(str, enum.Enum):
    AGGREGATE = "aggregate"
    PER_PULSE = "per_pulse"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to run a protocol experiment reproducibly.

    ``file_a`` and ``file_b`` are only read for :attr:`CaseKind.FILE_PAIR`;
    files shorter than ``n`` bits are zero-padded and longer ones truncated.
    """

    n: int = 2_000_000_000
    rate: float = 0.24
    delta: float = 0.22
    params: SystemParams = field(default_factory=SystemParams)
    case_kind: CaseKind = CaseKind.WORST_CASE
    repetitions: int = 10
    master_seed: int = 0
    sampling_mode: SamplingMode = SamplingMode.AGGREGATE
    epsilon_target: float = 2.6e-5
    mu_rel_uncertainty: float = 0.0
    file_a: str | None = None
    file_b: str | None = None
    scratch_dir: str | None = None
    memory_budget: int = DEFAULT_MEMORY_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "case_kind", CaseKind(self.case_kind))
        object.__setattr__(self, "sampling_mode", SamplingMode(self.sampling_mode))
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not 0.0 < self.rate <= 1.0:
            raise ValueError("rate must lie in (0, 1]")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if not 0 <= self.master_seed < 1 << 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if not 0.0 <= self.epsilon_target:
            raise ValueError("epsilon_target must be non-negative")
        if not 0.0 <= self.mu_rel_uncertainty <= 1.0:
            raise ValueError("mu_rel_uncertainty must lie in [0, 1]")
        if self.sampling_mode is SamplingMode.PER_PULSE and self.m > PER_PULSE_MAX_M:
            raise ValueError(f"per-pulse sampling needs m <= {PER_PULSE_MAX_M}, got m = {self.m}")
        if self.case_kind is CaseKind.FILE_PAIR and not (self.file_a and self.file_b):
            raise ValueError("file_pair case needs file_a and file_b")

    @property
    def m(self):
        return codeword_length(self.n, self.rate)

    def replace(self, **changes):
        return replace(self, **changes)

    def code(self):
        return new_code(self.n, self.rate, self.delta, seed=derive_seed(self.master_seed))


@dataclass(frozen=True)
class TrialOutcome:
    counts_d1: int
    counts_d0: int
    verdict: Verdict
    truth: Verdict
    rule: object
    distance: float = 0.0

    @property
    def correct(self):
        return self.verdict is self.truth


@dataclass(frozen=True)
class RunSummary:
    mean_d1: float
    std_d1: float
    error_rate: float
    threshold: int
    info: object
    rule: object = None
    mean_d0: float = 0.0
    mean_distance: float = 0.0
    outcomes: tuple = ()


# sampling ---------------------------------------------------------------


def _poisson_at(u, lam):
    """Poisson variates by CDF inversion at the uniforms ``u``."""
    u, lam = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(lam, dtype=float))
    out = np.zeros(u.shape, dtype=np.int64)
    live = lam > 0
    if live.any():
        out[live] = stats.poisson.ppf(u[live], lam[live]).astype(np.int64)
    return out


def _slot_counts(params, m, mask, rng):
    """Click totals at (D1, D0) from one Bernoulli draw per detector per slot.

    ``mask`` marks the slots whose codeword bits differ; ``None`` means none do.
    """
    (p1_eq, p1_diff), (p0_eq, p0_diff) = slot_click_probs(params, m)
    c1 = c0 = 0
    for start in range(0, m, _PULSE_CHUNK):
        stop = min(m, start + _PULSE_CHUNK)
        if mask is None:
            diff = np.zeros(stop - start, dtype=bool)
        else:
            diff = mask.bit_range(start, stop).astype(bool)
        u = rng.random((2, stop - start))
        c1 += int(np.count_nonzero(u[0] < np.where(diff, p1_diff, p1_eq)))
        c0 += int(np.count_nonzero(u[1] < np.where(diff, p0_diff, p0_eq)))
    return c1, c0


def _philox(seed):
    return np.random.Generator(np.random.Philox(key=seed))


def sample_counts(params, m, d, seed, mode=SamplingMode.AGGREGATE):
    """One stochastic realisation of the D1 and D0 click totals.

    Aggregate mode draws each total from its Poisson law.  Per-pulse mode
    marks ``round(d * m)`` differing slots and samples every slot of both
    detectors; it exists to cross-check the aggregate model at small ``m``.
    """
    mode = SamplingMode(mode)
    means = expected_counts(params, m, d)
    if mode is SamplingMode.AGGREGATE:
        u1 = to_unit(derive_seed(seed, _U_D1))
        u0 = to_unit(derive_seed(seed, _U_D0))
        return int(_poisson_at(u1, means.lambda_d1)), int(_poisson_at(u0, means.lambda_d0))
    if m > PER_PULSE_MAX_M:
        raise ValueError(f"per-pulse sampling needs m <= {PER_PULSE_MAX_M}, got m = {m}")
    mask = flip_fraction(BitString.zeros(m), d, derive_seed(seed, _FLIPS)) if d > 0 else None
    return _slot_counts(params, m, mask, _philox(derive_seed(seed, _SLOTS)))


# inputs -----------------------------------------------------------------


def load_padded(path, n):
    """First ``n`` bits of a file, zero-padded if the file is shorter."""
    bits = from_file(path, n)
    if len(bits) < n:
        bits = BitString.concat([bits, BitString.zeros(n - len(bits))])
    return bits


def _encode_kwargs(config):
    return {"memory_budget": config.memory_budget, "scratch_dir": config.scratch_dir}


def _difference(config, code, x_diff, need_mask):
    """Codeword distance (and difference pattern) for an input XOR.

    By linearity ``E(a) ^ E(b) = E(a ^ b)``, so one encode suffices and equal
    inputs skip encoding altogether.
    """
    if not x_diff.any():
        return 0.0, None
    if need_mask:
        mask = encode(code, x_diff, **_encode_kwargs(config))
        return mask.popcount() / code.m, mask
    return codeword_weight(code, x_diff, **_encode_kwargs(config)) / code.m, None


def _file_difference(config, need_mask=False):
    a = load_padded(config.file_a, config.n)
    b = load_padded(config.file_b, config.n)
    x = a ^ b
    del a, b
    truth = Verdict.DIFFERENT if x.any() else Verdict.EQUAL
    d, mask = _difference(config, config.code(), x, need_mask)
    return truth, d, mask


def _random_pair_difference(config, trial_index, code, need_mask=False):
    s = config.master_seed
    x = random_bits(derive_seed(s, trial_index, _INPUT_A), config.n)
    x = x ^ random_bits(derive_seed(s, trial_index, _INPUT_B), config.n)
    truth = Verdict.DIFFERENT if x.any() else Verdict.EQUAL
    d, mask = _difference(config, code, x, need_mask)
    return truth, d, mask


def _worst_case_distance(config):
    m = config.m
    return round_half_up(config.delta * m) / m


# trials -----------------------------------------------------------------


def _rule(config):
    return protocol_error_bound(config.params, config.m, config.delta)


def _trial(config, trial_index, rule, code=None, file_case=None):
    kind = config.case_kind
    per_pulse = config.sampling_mode is SamplingMode.PER_PULSE
    m = config.m
    mask = None
    if kind is CaseKind.EQUAL:
        truth, d = Verdict.EQUAL, 0.0
    elif kind is CaseKind.WORST_CASE:
        truth = Verdict.DIFFERENT
        if per_pulse:
            mask = flip_fraction(BitString.zeros(m), config.delta, derive_seed(config.master_seed, trial_index, _FLIPS))
            d = mask.popcount() / m
        else:
            d = _worst_case_distance(config)
    elif kind is CaseKind.RANDOM_PAIR:
        truth, d, mask = _random_pair_difference(config, trial_index, code or config.code(), per_pulse)
    else:
        truth, d, mask = file_case or _file_difference(config, per_pulse)

    if per_pulse:
        rng = _philox(derive_seed(config.master_seed, trial_index, _SLOTS))
        c1, c0 = _slot_counts(config.params, m, mask, rng)
    else:
        means = expected_counts(config.params, m, d)
        u1 = to_unit(derive_seed(config.master_seed, trial_index, _U_D1))
        u0 = to_unit(derive_seed(config.master_seed, trial_index, _U_D0))
        c1, c0 = int(_poisson_at(u1, means.lambda_d1)), int(_poisson_at(u0, means.lambda_d0))
    return TrialOutcome(c1, c0, decide(c1, rule), truth, rule, d)


def run_trial(config, trial_index):
    """One protocol execution; trial ``t`` is identical wherever it runs."""
    if not 0 <= trial_index < 1 << 64:
        raise ValueError("trial_index must be a 64-bit unsigned integer")
    return _trial(config, trial_index, _rule(config))


def _summarise(config, rule, outcomes):
    d1 = np.array([o.counts_d1 for o in outcomes], dtype=float)
    d0 = np.array([o.counts_d0 for o in outcomes], dtype=float)
    errors = sum(not o.correct for o in outcomes)
    info = advantage_report(
        config.n, config.params.mu_total, config.mu_rel_uncertainty, config.rate, config.epsilon_target
    )
    return RunSummary(
        mean_d1=float(d1.mean()),
        std_d1=float(d1.std(ddof=1)) if len(d1) > 1 else 0.0,
        error_rate=errors / len(outcomes),
        threshold=rule.threshold,
        info=info,
        rule=rule,
        mean_d0=float(d0.mean()),
        mean_distance=float(np.mean([o.distance for o in outcomes])),
        outcomes=tuple(outcomes),
    )


def _aggregate_batch(config, rule, truth, d):
    idx = np.arange(config.repetitions, dtype=np.uint64)
    means = expected_counts(config.params, config.m, d)
    c1 = _poisson_at(to_unit(derive_seeds(config.master_seed, idx, _U_D1)), means.lambda_d1)
    c0 = _poisson_at(to_unit(derive_seeds(config.master_seed, idx, _U_D0)), means.lambda_d0)
    return [TrialOutcome(int(a), int(b), decide(int(a), rule), truth, rule, d) for a, b in zip(c1, c0)]


def run_experiment(config):
    """Run ``config.repetitions`` trials and summarise them.

    The result is a pure function of ``config``.  Trial ``t`` of the batch
    equals ``run_trial(config, t)``.
    """
    rule = _rule(config)
    kind = config.case_kind
    if config.sampling_mode is SamplingMode.AGGREGATE and kind is not CaseKind.RANDOM_PAIR:
        if kind is CaseKind.EQUAL:
            truth, d = Verdict.EQUAL, 0.0
        elif kind is CaseKind.WORST_CASE:
            truth, d = Verdict.DIFFERENT, _worst_case_distance(config)
        else:
            truth, d, _ = _file_difference(config)
        outcomes = _aggregate_batch(config, rule, truth, d)
    else:
        code = config.code() if kind is CaseKind.RANDOM_PAIR else None
        file_case = _file_difference(config, True) if kind is CaseKind.FILE_PAIR else None
        outcomes = [_trial(config, t, rule, code, file_case) for t in range(config.repetitions)]
    return _summarise(config, rule, outcomes)


def compare_files(path_a, path_b, config, n=None):
    """Fingerprint two files against each other in a single protocol run.

    ``n`` defaults to the bit length of the longer file; the shorter one is
    zero-padded.  Returns ``(verdict, summary, info)``.
    """
    if n is None:
        n = 8 * max(os.path.getsize(path_a), os.path.getsize(path_b))
        if n == 0:
            raise ValueError("both files are empty")
    cfg = config.replace(
        n=n,
        case_kind=CaseKind.FILE_PAIR,
        file_a=os.fspath(path_a),
        file_b=os.fspath(path_b),
        repetitions=1,
    )
    summary = run_experiment(cfg)
    return summary.outcomes[0].verdict, summary, summary.info


# sweeps -----------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    n: int
    fibre_km: float
    arm_loss_db: float
    case: CaseKind
    summary: RunSummary | None
    error: str = ""


def fibre_loss_db(km):
    """Total fibre loss for one of the measured spool lengths."""
    try:
        return PAPER_LOSSES_DB[km]
    except KeyError:
        raise ValueError(f"no measured loss for {km} km; known lengths {sorted(PAPER_LOSSES_DB)}") from None


def _sweep_cell(job):
    config, n, km, case = job
    half = fibre_loss_db(km) / 2.0
    try:
        params = config.params.replace(arm_loss_db_a=half, arm_loss_db_b=half)
        cell = config.replace(n=n, params=params, case_kind=case)
        summary = run_experiment(cell)
    except Exception as exc:  # recorded per row, the sweep carries on
        log.warning("sweep cell n=%d km=%s case=%s failed: %s", n, km, case, exc)
        return SweepRow(n, km, half, case, None, f"{type(exc).__name__}: {exc}")
    log.info("sweep cell n=%d km=%s case=%s done", n, km, case)
    return SweepRow(n, km, half, case, summary)


def sweep(base_config, n_values, distance_cases, cases=None, workers=1):
    """Cross-product of input sizes, fibre lengths and input cases.

    ``distance_cases`` are fibre lengths in km whose measured loss is split
    evenly over the two arms.  Every cell reuses the base master seed, so a
    single-cell sweep reproduces :func:`run_experiment` and neighbouring cells
    share random numbers.  Rows come back in ``n``, km, case order whatever
    the number of workers.
    """
    n_values = list(n_values)
    distance_cases = list(distance_cases)
    cases = [CaseKind(c) for c in (cases or [base_config.case_kind])]
    if not n_values or not distance_cases or not cases:
        raise ValueError("sweep grid must be nonempty")
    for km in distance_cases:
        fibre_loss_db(km)
    jobs = [(base_config, int(n), km, c) for n in n_values for km in distance_cases for c in cases]
    if workers <= 1:
        return [_sweep_cell(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_cell, jobs))


__all__ = [
    "PER_PULSE_MAX_M",
    "CaseKind",
    "SamplingMode",
    "ExperimentConfig",
    "TrialOutcome",
    "RunSummary",
    "SweepRow",
    "sample_counts",
    "run_trial",
    "run_experiment",
    "compare_files",
    "sweep",
    "fibre_loss_db",
    "load_padded",
]
