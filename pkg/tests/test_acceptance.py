"""Acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured values and
wall time; the lines are repeated in the terminal summary.  Criterion 9 re-runs
the work of criteria 6 to 8 and compares the CSV bytes, so running it alone
does that work twice.
"""

import csv
import io
import math
import os
import statistics
import time

import mpmath as mp
import numpy as np
import pytest

from qfingerprint import config as cfgmod
from qfingerprint.bits import BitString, random_bits
from qfingerprint.cli import SIMULATE_HEADER, SWEEP_HEADER, fmt, sweep_rows
from qfingerprint.information import advantage_report, best_known_classical, classical_limit
from qfingerprint.optics import SystemParams, expected_counts
from qfingerprint.referee import protocol_error_bound
from qfingerprint.simulate import ExperimentConfig, compare_files, run_experiment, sweep
from qfingerprint.toeplitz import encode, new_code

N_GRID = [2_000_000, 40_000_000, 142_000_000, 1_000_000_000, 2_000_000_000]
PAPER_KM = [0, 10, 20]
SEED = 20140501

RESULTS = {}
_CSV = {}


def report(number, ok, detail, seconds):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {detail} [{seconds:.3g} s]"
    RESULTS[number] = line
    print("\n" + line)
    return ok


def median_seconds(fn, repeats=2001):
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times)


# 1 -----------------------------------------------------------------------


def test_criterion_1_classical_limit():
    anchors = {2_000_000_000: 37_594, 1_000_000_000: 26_583}
    ok, parts = True, []
    for n, anchor in anchors.items():
        got = classical_limit(n, 2.6e-5)
        with mp.workdps(50):
            ref = (1 - 2 * mp.sqrt(mp.mpf("2.6e-5"))) * mp.sqrt(mp.mpf(n) / (2 * mp.log(2))) - 1
        ok &= abs(got - anchor) <= 1 and abs(got - float(ref)) < 1e-9 * float(ref)
        parts.append(f"C({n:.0e})={got:.3f} (hp {mp.nstr(ref, 12)})")
    dt = median_seconds(lambda: classical_limit(2_000_000_000, 2.6e-5))
    ok &= dt < 1e-3
    assert report(1, ok, ", ".join(parts), dt)


# 2 -----------------------------------------------------------------------


def test_criterion_2_best_known():
    worst = 0.0
    for n in N_GRID:
        with mp.workdps(50):
            ref = float(32 * mp.sqrt(n))
        worst = max(worst, abs(best_known_classical(n) - ref) / ref)
    dt = median_seconds(lambda: best_known_classical(2_000_000_000))
    ok = worst <= 2**-52 and dt < 1e-3
    assert report(2, ok, f"max relative error {worst:.2e} over the five sizes", dt)


# 3 -----------------------------------------------------------------------


def test_criterion_3_gamma():
    t = time.perf_counter()
    cfg = cfgmod.load("paper_20km")
    gam = {n: advantage_report(n, cfg.params.mu_total, 0.0, cfg.rate, cfg.epsilon_target).gamma for n in N_GRID}
    calibrated = advantage_report(2_000_000_000, 620.0, 0.0, cfg.rate, cfg.epsilon_target).gamma
    dt = time.perf_counter() - t
    ok = (
        1.6 <= gam[2_000_000_000] <= 1.95
        and all(gam[n] < 1 for n in N_GRID[:3])
        and abs(calibrated - 1.84) <= 0.02
        and dt < 1
    )
    detail = "gamma " + ", ".join(f"{n:.3g}:{g:.3f}" for n, g in gam.items()) + f"; mu=620 -> {calibrated:.3f}"
    assert report(3, ok, detail, dt)


# 4 -----------------------------------------------------------------------


def test_criterion_4_error_probability():
    t = time.perf_counter()
    eps = {}
    for name in cfgmod.BUILTIN_CONFIGS:
        cfg = cfgmod.load(name)
        assert cfg.n == 2_000_000_000
        eps[name] = protocol_error_bound(cfg.params, cfg.m, cfg.delta).epsilon
    dt = time.perf_counter() - t
    ok = all(e <= 2.6e-5 for e in eps.values()) and dt < 1
    assert report(4, ok, ", ".join(f"{k}: eps={v:.2e}" for k, v in eps.items()), dt)


# 5 -----------------------------------------------------------------------


def naive_matvec(code, x):
    col, row = code.first_col.to_bits(), code.first_row.to_bits()
    T = np.empty((code.m, code.n), dtype=np.int64)
    for i in range(code.m):
        for j in range(code.n):
            T[i, j] = col[i - j] if i >= j else row[j - i]
    return (T @ x.to_bits().astype(np.int64)) % 2


def test_criterion_5_ecc_oracle():
    rng = np.random.default_rng(5)
    t = time.perf_counter()
    mismatches = 0
    for k in range(1000):
        n = int(rng.integers(1, 65))
        rate = float(rng.choice([0.24, 0.5, 0.75, 1.0]))
        code = new_code(n, rate, 0.22, seed=int(rng.integers(0, 2**63)))
        x = random_bits(int(rng.integers(0, 2**63)), n)
        block = [None, 8, 64][k % 3]
        mismatches += not np.array_equal(encode(code, x, block_bits=block).to_bits(), naive_matvec(code, x))
    broken = 0
    for _ in range(1000):
        n = int(rng.integers(1, 1025))
        code = new_code(n, 0.24, 0.22, seed=int(rng.integers(0, 2**63)))
        x, y = random_bits(int(rng.integers(0, 2**63)), n), random_bits(int(rng.integers(0, 2**63)), n)
        broken += encode(code, x ^ y) != encode(code, x) ^ encode(code, y)
    dt = time.perf_counter() - t
    ok = mismatches == 0 and broken == 0 and dt < 10
    assert report(5, ok, f"{mismatches}/1000 oracle mismatches, {broken}/1000 linearity failures", dt)


# 6 -----------------------------------------------------------------------


def _csv(header, body):
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(body)
    return out.getvalue()


def small_config():
    """m = 10**4 with per-slot click probabilities around 1e-3."""
    params = SystemParams(mu_total=20.0, dark_rate_hz=2e4)
    return ExperimentConfig(n=2400, params=params, case_kind="worst_case", repetitions=100_000, master_seed=SEED)


def criterion_6(workers=1):
    cfg = small_config()
    assert cfg.m == 10_000
    agg = run_experiment(cfg)
    pulse = run_experiment(cfg.replace(sampling_mode="per_pulse"))
    compare = _csv(
        ("mode", "m", "mean_d1", "std_d1", "mean_d0"),
        [(mode, cfg.m, fmt(s.mean_d1), fmt(s.std_d1), fmt(s.mean_d0)) for mode, s in (("aggregate", agg), ("per_pulse", pulse))],
    )  # fmt: skip
    base = cfgmod.load("paper_20km").replace(repetitions=10_000, master_seed=SEED)
    rows = sweep(base, N_GRID, PAPER_KM, ["equal", "worst_case"], workers=workers)
    return agg, pulse, rows, compare + _csv(SWEEP_HEADER, sweep_rows(rows))


def test_criterion_6_detection_consistency():
    t = time.perf_counter()
    agg, pulse, rows, text = criterion_6()
    dt = time.perf_counter() - t
    _CSV[6] = text
    n = agg.outcomes and len(agg.outcomes)
    se = math.sqrt(agg.std_d1**2 / n + pulse.std_d1**2 / n)
    gap = abs(agg.mean_d1 - pulse.mean_d1)
    worst_z = 0.0
    for r in rows:
        d = 0.0 if r.case.value == "equal" else r.summary.mean_distance
        lam = expected_counts(base_params(r), r.summary.info.m, d).lambda_d1
        worst_z = max(worst_z, abs(r.summary.mean_d1 - lam) / math.sqrt(lam / 10_000))
    ok = gap < 3 * se and worst_z < 3 and dt < 120
    detail = (
        f"per-pulse vs aggregate mean gap {gap:.4f} = {gap / se:.2f} combined SE; "
        f"worst grid-cell deviation {worst_z:.2f} sigma over {len(rows)} cells"
    )
    assert report(6, ok, detail, dt)


def base_params(row):
    return cfgmod.load("paper_20km").params.replace(arm_loss_db_a=row.arm_loss_db, arm_loss_db_b=row.arm_loss_db)


# 7 -----------------------------------------------------------------------


def criterion_7(workers=1):
    base = cfgmod.load("paper_20km").replace(repetitions=100_000, master_seed=SEED)
    rows = sweep(base, N_GRID, PAPER_KM, ["equal", "worst_case"], workers=workers)
    body = [
        [*cells, fmt(r.summary.error_rate)]
        for r, cells in zip(rows, sweep_rows(rows))
    ]  # fmt: skip
    return rows, _csv(SWEEP_HEADER + ("error_rate",), body)


def test_criterion_7_fig3_structure():
    t = time.perf_counter()
    rows, text = criterion_7()
    dt = time.perf_counter() - t
    _CSV[7] = text
    bracket_fail = 0
    worst_ratio = 0.0
    for eq, wc in zip(rows[::2], rows[1::2]):
        assert (eq.n, eq.fibre_km) == (wc.n, wc.fibre_km)
        bracket_fail += not eq.summary.mean_d1 < eq.summary.threshold < wc.summary.mean_d1
        for r in (eq, wc):
            worst_ratio = max(worst_ratio, r.summary.error_rate / (3 * r.summary.rule.epsilon))
    ok = bracket_fail == 0 and worst_ratio <= 1 and dt < 300
    errors = sum(round(r.summary.error_rate * 100_000) for r in rows)
    detail = f"{15 - bracket_fail}/15 cells bracket the threshold; {errors} verdict errors in 3e6 trials"
    assert report(7, ok, detail, dt)


# 8 -----------------------------------------------------------------------


@pytest.fixture(scope="module")
def demo_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("demo")
    n = 256_000_000
    a, b, c = root / "a.bin", root / "b.bin", root / "a_copy.bin"
    t = time.perf_counter()
    random_bits(SEED + 1, n).write(a)
    random_bits(SEED + 2, n).write(b)
    c.write_bytes(a.read_bytes())
    return root, (a, b, c), time.perf_counter() - t


def criterion_8(files, scratch):
    a, b, c = files
    cfg = cfgmod.load("paper_20km").replace(master_seed=SEED, scratch_dir=str(scratch), memory_budget=3_200_000_000)
    out = {}
    for label, (x, y) in {"distinct": (a, b), "identical": (a, c)}.items():
        verdict, summary, info = compare_files(x, y, cfg)
        out[label] = (verdict, summary, info)
    body = []
    for label, (verdict, s, info) in out.items():
        o = s.outcomes[0]
        body.append([label, info.n, info.m, fmt(o.distance), o.counts_d1, o.counts_d0, s.threshold, o.verdict, o.truth])
    header = ("pair", "n", "m", "distance") + SIMULATE_HEADER[2:]
    return out, _csv(header, body)


def test_criterion_8_file_demo(demo_files):
    root, files, t_gen = demo_files
    assert all(os.path.getsize(p) == 32_000_000 for p in files)
    t = time.perf_counter()
    out, text = criterion_8(files, root)
    dt = time.perf_counter() - t + t_gen
    _CSV[8] = text
    (v_diff, s_diff, info), (v_same, s_same, _) = out["distinct"], out["identical"]
    ok = (
        str(v_diff) == "different"
        and str(v_same) == "equal"
        and info.n == 256_000_000
        and 0.45 < s_diff.outcomes[0].distance < 0.55
        and s_same.outcomes[0].distance == 0.0
        and dt < 600
    )
    detail = (
        f"distinct -> {v_diff} (d={s_diff.outcomes[0].distance:.6f}, D1={s_diff.outcomes[0].counts_d1}), "
        f"identical -> {v_same}; n={info.n}, m={info.m}, gamma={info.gamma:.3f}"
    )
    assert report(8, ok, detail, dt)


# 9 -----------------------------------------------------------------------


def test_criterion_9_determinism(demo_files):
    root, files, _ = demo_files
    t = time.perf_counter()
    first = dict(_CSV)
    if 6 not in first:
        first[6] = criterion_6()[3]
    if 7 not in first:
        first[7] = criterion_7()[1]
    if 8 not in first:
        first[8] = criterion_8(files, root)[1]
    again = {6: criterion_6(workers=4)[3], 7: criterion_7(workers=4)[1], 8: criterion_8(files, root)[1]}
    dt = time.perf_counter() - t
    same = [k for k in (6, 7, 8) if first[k].encode() == again[k].encode()]
    ok = len(same) == 3
    sizes = ", ".join(f"{k}: {len(first[k])} bytes" for k in (6, 7, 8))
    assert report(9, ok, f"byte-identical re-runs for criteria {same} (parallel sweeps, 4 workers; {sizes})", dt)
