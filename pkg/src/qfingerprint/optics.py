"""Detector statistics at the referee's beam splitter.

Each party's pulse train carries a total mean photon number ``mu_total``
spread evenly over ``m`` pulses.  Before detection the light from party X is
attenuated by its fibre arm, the referee's optics and the detector efficiency::

    mu_det_X = mu_total * 10**(-arm_loss_db_X / 10) * bs_transmittance_X * det_efficiency

Two coherent pulses with mean photon numbers ``a`` and ``b`` meeting on a
balanced beam splitter give, at the D1 (dark) port, a mean photon number of
``(a + b)/2 - v sqrt(a b) cos(dphi)`` with ``dphi`` equal to 0 when the
codeword bits agree and pi when they differ; D0 receives the rest.  Dark
counts add ``dark_rate_hz * window_s`` expected clicks per detector per pulse
slot.

Counts are Poisson with the means computed here.  A pulse slot with mean
``lam`` clicks with probability ``1 - exp(-lam)``, which is what the per-pulse
sampler uses; at the per-pulse means of interest (below 1e-7) the two agree
to far better than the statistical resolution of any run.
"""

import math
from dataclasses import dataclass, fields, replace

import numpy as np


@dataclass(frozen=True)
class SystemParams:
    mu_total: float = 650.0
    rep_rate_hz: float = 25e6
    dark_rate_hz: float = 0.11
    window_s: float = 2.5e-9
    det_efficiency: float = 0.456
    visibility: float = 0.96
    arm_loss_db_a: float = 0.0
    arm_loss_db_b: float = 0.0
    bs_transmittance_a: float = 0.8016
    bs_transmittance_b: float = 0.785

    def __post_init__(self):
        for name in ("mu_total", "rep_rate_hz", "dark_rate_hz", "window_s", "arm_loss_db_a", "arm_loss_db_b"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        for name in ("det_efficiency", "visibility", "bs_transmittance_a", "bs_transmittance_b"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.window_s * self.rep_rate_hz > 1.0:
            raise ValueError("detection window longer than the pulse period")

    def replace(self, **changes):
        return replace(self, **changes)

    @property
    def dark_prob(self):
        """Expected dark clicks per detector per pulse slot."""
        return self.dark_rate_hz * self.window_s

    def detected_mu(self):
        """Detected mean photon numbers ``(mu_a, mu_b)`` summed over the sequence."""
        common = self.mu_total * self.det_efficiency
        mu_a = common * db_to_transmittance(self.arm_loss_db_a) * self.bs_transmittance_a
        mu_b = common * db_to_transmittance(self.arm_loss_db_b) * self.bs_transmittance_b
        return mu_a, mu_b

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class DetectionMeans:
    lambda_d1: float
    lambda_d0: float
    dark_component: float
    signal_component: float

    @property
    def signal_d0(self):
        return self.lambda_d0 - self.dark_component


def db_to_transmittance(loss_db):
    if loss_db < 0:
        raise ValueError(f"loss must be non-negative, got {loss_db} dB")
    return 10.0 ** (-loss_db / 10.0)


def per_pulse_lambda_d1(mu_a, mu_b, visibility, phase_equal):
    """Mean photon number at D1 for one pair of interfering pulses."""
    if mu_a < 0 or mu_b < 0:
        raise ValueError("mean photon numbers must be non-negative")
    if not 0.0 <= visibility <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    half = 0.5 * (mu_a + mu_b)
    cross = visibility * math.sqrt(mu_a * mu_b)
    return max(0.0, half - cross) if phase_equal else half + cross


def per_pulse_lambda_d0(mu_a, mu_b, visibility, phase_equal):
    """Mean photon number at D0; the complement of :func:`per_pulse_lambda_d1`."""
    return per_pulse_lambda_d1(mu_a, mu_b, visibility, not phase_equal)


def port_means(params):
    """Sequence-total signal means at (D1, D0) for matching and differing bits.

    Returns ``((d1_equal, d1_diff), (d0_equal, d0_diff))`` as if every pulse
    pair matched (or differed); the per-pulse values are these divided by m.
    """
    mu_a, mu_b = params.detected_mu()
    v = params.visibility
    d1 = (per_pulse_lambda_d1(mu_a, mu_b, v, True), per_pulse_lambda_d1(mu_a, mu_b, v, False))
    d0 = (per_pulse_lambda_d0(mu_a, mu_b, v, True), per_pulse_lambda_d0(mu_a, mu_b, v, False))
    return d1, d0


def expected_counts(params, m, distance_fraction):
    """Expected click totals at D1 and D0 for codewords at relative distance d."""
    d = distance_fraction
    if not 0.0 <= d <= 1.0:
        raise ValueError(f"distance fraction must lie in [0, 1], got {d}")
    if m < 1:
        raise ValueError("m must be at least 1")
    (d1_eq, d1_diff), (d0_eq, d0_diff) = port_means(params)
    dark = m * params.dark_prob
    signal = (1.0 - d) * d1_eq + d * d1_diff
    signal_d0 = (1.0 - d) * d0_eq + d * d0_diff
    return DetectionMeans(dark + signal, dark + signal_d0, dark, signal)


def slot_click_probs(params, m):
    """Per-slot click probabilities ``((d1_eq, d1_diff), (d0_eq, d0_diff))``."""
    (d1_eq, d1_diff), (d0_eq, d0_diff) = port_means(params)
    p = params.dark_prob
    probs = [-np.expm1(-(lam / m + p)) for lam in (d1_eq, d1_diff, d0_eq, d0_diff)]
    return (probs[0], probs[1]), (probs[2], probs[3])


def paper_params(total_loss_db=0.0, **overrides):
    """Parameters of the fibre experiment, with the total loss split evenly between arms."""
    half = total_loss_db / 2.0
    return SystemParams(arm_loss_db_a=half, arm_loss_db_b=half).replace(**overrides)


#: Total fibre loss (dB) for the 0, 10 and 20 km spools.
PAPER_LOSSES_DB = {0: 0.0, 10: 1.86, 20: 3.92}
