import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfingerprint.optics import PAPER_LOSSES_DB, SystemParams, paper_params
from qfingerprint.referee import (
    DecisionRule,
    DegenerateConfigError,
    Verdict,
    choose_threshold,
    decide,
    poisson_cdf,
    poisson_sf,
    protocol_error_bound,
)

M_2G = 8_333_333_334


def series_cdf(k, lam):
    with mp.workdps(60):
        lam = mp.mpf(lam)
        return mp.fsum(mp.exp(-lam) * lam**j / mp.factorial(j) for j in range(k + 1))


def series_sf(k, lam):
    with mp.workdps(60):
        lam = mp.mpf(lam)
        top = int(k + lam + 40 * mp.sqrt(lam) + 400)
        return mp.fsum(mp.exp(-lam) * lam**j / mp.factorial(j) for j in range(k + 1, top))


def oracle_threshold(lam_eq, lam_diff, top=200):
    """Brute-force min-max over thresholds using the series oracles."""
    best = None
    for th in range(top + 1):
        worst = max(series_sf(th, lam_eq), series_cdf(th, lam_diff))
        if best is None or worst < best[1]:
            best = (th, worst)
    return best


# tails -------------------------------------------------------------------


def test_cdf_examples():
    assert poisson_cdf(0, 0.0) == 1.0
    assert poisson_cdf(0, 1.0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert poisson_cdf(5, 5.0) == pytest.approx(0.615961, abs=1e-6)


# values from an 80-digit direct summation
FROZEN = [
    (29, 8.28882858496, 0.9999999953788859485, 4.6211140515021266859e-9),
    (29, 71.5323132896, 9.7115602526813483812e-9, 0.99999999028843974732),
    (5, 50.0, 5.5677562606980888268e-16, 0.99999999999999944322),
    (100, 10.0, 1.0, 5.3394054607197105234e-64),
    (44, 111.024602671, 3.7292143768587242453e-13, 0.99999999999962707856),
]


@pytest.mark.parametrize("k, lam, cdf, sf", FROZEN)
def test_frozen_tails(k, lam, cdf, sf):
    assert poisson_cdf(k, lam) == pytest.approx(cdf, rel=1e-10)
    assert poisson_sf(k, lam) == pytest.approx(sf, rel=1e-10)


@given(st.integers(0, 300), st.floats(0.01, 400))
def test_tails_against_series(k, lam):
    cdf, sf = float(series_cdf(k, lam)), float(series_sf(k, lam))
    assert poisson_cdf(k, lam) == pytest.approx(cdf, rel=1e-9, abs=1e-300)
    assert poisson_sf(k, lam) == pytest.approx(sf, rel=1e-9, abs=1e-300)
    assert abs(poisson_cdf(k, lam) + poisson_sf(k, lam) - 1) < 1e-12


def test_negative_inputs():
    with pytest.raises(ValueError):
        poisson_cdf(-1, 1.0)
    with pytest.raises(ValueError):
        poisson_sf(1, -1.0)


# threshold ---------------------------------------------------------------


def test_threshold_examples():
    rule = choose_threshold(0.0, 10.0)
    assert rule.threshold == 0 and rule.err_equal == 0.0
    assert rule.err_diff == pytest.approx(math.exp(-10))
    rule = choose_threshold(8.3, 71.0)
    th, worst = oracle_threshold(8.3, 71.0)
    assert rule.threshold == th
    assert 27 <= rule.threshold <= 31
    assert rule.epsilon == pytest.approx(float(worst), rel=1e-9)
    assert rule.epsilon < 1e-5
    with pytest.raises(DegenerateConfigError):
        choose_threshold(5.0, 5.0)


@pytest.mark.parametrize("lam_eq, lam_diff", [(0.5, 3.0), (2.0, 20.0), (11.7, 111.0), (30.0, 45.0), (1.0, 1.5)])
def test_threshold_matches_brute_force(lam_eq, lam_diff):
    th, worst = oracle_threshold(lam_eq, lam_diff)
    rule = choose_threshold(lam_eq, lam_diff)
    assert rule.threshold == th
    assert rule.epsilon == pytest.approx(float(worst), rel=1e-9)


@given(st.floats(0, 500), st.floats(0.01, 500))
def test_local_optimality_and_monotone_tails(lam_eq, gap):
    lam_diff = lam_eq + gap
    rule = choose_threshold(lam_eq, lam_diff)
    th = rule.threshold
    worst = lambda t: max(poisson_sf(t, lam_eq), poisson_cdf(t, lam_diff))  # noqa: E731
    assert worst(th) <= worst(th + 1)
    if th > 0:
        assert worst(th) < worst(th - 1)
    ts = np.arange(max(0, th - 20), th + 20)
    assert np.all(np.diff(poisson_sf(ts, lam_eq)) <= 0)
    assert np.all(np.diff(poisson_cdf(ts, lam_diff)) >= 0)
    assert rule.epsilon == max(rule.err_equal, rule.err_diff)


def test_decide_boundaries():
    rule = DecisionRule(7, 0.0, 0.0)
    assert decide(0, DecisionRule(0, 0.0, 0.0)) is Verdict.EQUAL
    assert decide(7, rule) is Verdict.EQUAL
    assert decide(8, rule) is Verdict.DIFFERENT


# protocol bound ----------------------------------------------------------


def test_ideal_protocol():
    p = SystemParams(
        mu_total=20.0, visibility=1.0, dark_rate_hz=0.0, det_efficiency=1.0,
        bs_transmittance_a=1.0, bs_transmittance_b=1.0,
    )  # fmt: skip
    rule = protocol_error_bound(p, 1000, 0.22)
    assert rule.threshold == 0 and rule.err_equal == 0.0
    assert rule.err_diff == pytest.approx(math.exp(-rule.lambda_diff))
    assert rule.lambda_diff == pytest.approx(0.22 * 40)


@pytest.mark.parametrize("km", [0, 10, 20])
def test_paper_error_within_reported(km):
    assert protocol_error_bound(paper_params(PAPER_LOSSES_DB[km]), M_2G, 0.22).epsilon <= 2.6e-5


def test_no_signal_is_degenerate():
    with pytest.raises(DegenerateConfigError):
        protocol_error_bound(SystemParams(mu_total=0.0), M_2G, 0.22)


def test_error_falls_with_mu():
    eps = [protocol_error_bound(paper_params(3.92, mu_total=mu), M_2G, 0.22).epsilon for mu in (50, 100, 200, 400, 650)]
    assert all(a >= b for a, b in zip(eps, eps[1:]))
