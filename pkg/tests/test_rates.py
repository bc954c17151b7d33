import math

import numpy as np
import pytest

from dcids.channel import ChannelParams
from dcids.dc import build_delay_scheme, default_scheme
from dcids.rates import RateEstimate, estimate_once_rate_dc, estimate_once_rate_iud, \
    estimate_once_rate_marker, estimate_sir, find_rate_limit, marker_frame, \
    mutual_info_from_llrs
from dcids.trellis import L_CLIP


def test_mi_trivial_values():
    bits = np.random.default_rng(0).integers(0, 2, 1000)
    assert mutual_info_from_llrs(np.zeros(1000), bits) == 0.0
    assert abs(mutual_info_from_llrs(np.where(bits == 0, L_CLIP, -L_CLIP), bits) - 1.0) < 1e-10
    assert mutual_info_from_llrs(np.zeros(0), np.zeros(0)) == 0.0
    with pytest.raises(ValueError):
        mutual_info_from_llrs(np.zeros(3), np.zeros(4))


def test_mi_bsc_capacity():
    q = 0.11
    rng = np.random.default_rng(1)
    bits = rng.integers(0, 2, 1_000_000)
    flips = rng.random(bits.size) < q
    y = bits ^ flips
    llr = np.where(y == 0, 1.0, -1.0) * math.log((1 - q) / q)
    hb = -q * math.log2(q) - (1 - q) * math.log2(1 - q)
    assert abs(mutual_info_from_llrs(llr, bits) - (1 - hb)) < 0.005


def test_sir_noiseless_is_one():
    est = estimate_sir(ChannelParams(0.0, 0.0), 500, 3, 0)
    assert isinstance(est, RateEstimate)
    assert est.value == 1.0 and abs(est.raw - 1.0) < 1e-12 and est.stderr < 1e-12


def test_sir_substitution_only_is_bsc_capacity():
    q = 0.11
    est = estimate_sir(ChannelParams(0.0, q), 4000, 10, 1)
    hb = -q * math.log2(q) - (1 - q) * math.log2(1 - q)
    assert abs(est.value - (1 - hb)) < 4 * est.stderr + 0.01


@pytest.mark.parametrize("t_max", [0, 3, 7])
def test_once_rates_noiseless(t_max):
    est = estimate_once_rate_dc(ChannelParams(0.0, 0.0), default_scheme(t_max), 64, 2, 0)
    assert abs(est.value - 1.0) < 1e-9
    assert np.allclose(est.per_delay, 1.0)
    assert abs(estimate_once_rate_iud(ChannelParams(0.0, 0.0), 256, 2, 0).value - 1.0) < 1e-9


def test_iud_is_single_subblock_dc():
    p = ChannelParams(0.05, 0.01)
    a = estimate_once_rate_iud(p, 1000, 3, 7)
    b = estimate_once_rate_dc(p, build_delay_scheme((0,)), 1000, 3, 7)
    assert a.raw == b.raw and a.stderr == b.stderr


def test_per_delay_breakdown_combines():
    p = ChannelParams(0.06, 0.0)
    scheme = build_delay_scheme((0, 0, 2))
    est = estimate_once_rate_dc(p, scheme, 300, 4, 2)
    assert np.isnan(est.per_delay[1])
    assert abs(est.raw - (2 * est.per_delay[0] + est.per_delay[2]) / 3) < 1e-12


def test_pilots_help_later_subchannels():
    est = estimate_once_rate_dc(ChannelParams(0.08, 0.0), default_scheme(3), 500, 6, 3)
    assert est.per_delay[0] > est.per_delay[3]


@pytest.mark.parametrize("d", [10, 20])
def test_marker_rate_noiseless(d):
    est = estimate_once_rate_marker(ChannelParams(0.0, 0.0), d, 1100, 2, 0)
    assert abs(est.value - d / (d + 2)) < 1e-9


def test_marker_frame_layout():
    payload = np.arange(25) % 2
    frame, is_marker = marker_frame(payload, 10)
    assert frame.shape[0] == 29 and is_marker.sum() == 4
    assert frame[10:12].tolist() == [0, 1] and frame[22:24].tolist() == [0, 1]
    assert np.array_equal(frame[~is_marker], payload)
    with pytest.raises(ValueError):
        estimate_once_rate_marker(ChannelParams(0.0), 0, 100, 1, 0)


def test_rate_ordering_small_pid():
    """Marker < i.u.d.-free DC at moderate p_id; SIR upper bounds the once-rate."""
    p = ChannelParams(0.03, 0.0)
    dc = estimate_once_rate_dc(p, default_scheme(15), 125, 4, 4)
    mk = estimate_once_rate_marker(p, 10, 2000, 4, 4)
    iud = estimate_once_rate_iud(p, 2000, 4, 4)
    sir = estimate_sir(p, 2000, 4, 4)
    assert mk.value < dc.value
    assert iud.value <= dc.value + 2 * (iud.stderr + dc.stderr)
    assert sir.value >= dc.value - 2 * math.hypot(sir.stderr, dc.stderr)


def test_more_pilots_never_hurt():
    p = ChannelParams(0.07, 0.0)
    ests = [estimate_once_rate_dc(p, default_scheme(t), 2048 // (t + 1), 4, 5) for t in (0, 1, 3, 7)]
    for a, b in zip(ests, ests[1:]):
        assert a.value <= b.value + 2 * (a.stderr + b.stderr)


def test_sir_decreases_in_pid():
    vals = [estimate_sir(ChannelParams(p, 0.0), 2000, 4, 6) for p in (0.02, 0.05, 0.08, 0.11)]
    for a, b in zip(vals, vals[1:]):
        assert b.value <= a.value + 2 * (a.stderr + b.stderr)


def test_rate_limit_target_one_is_zero():
    est = lambda params, trials, seed: estimate_sir(params, 300, trials, seed)  # noqa: E731
    lim = find_rate_limit(est, 1.0, 0.0, tolerance=0.01, trials=2, max_trials=4)
    assert lim.p_id < 0.01


def test_rate_limit_synthetic_estimator():
    calls = []

    def est(params, trials, seed):
        calls.append(trials)
        return RateEstimate(1 - 5 * params.p_id, 1 - 5 * params.p_id, 0.0, trials, 1)

    lim = find_rate_limit(est, 0.5, 0.0, tolerance=1e-4)
    assert abs(lim.p_id - 0.1) < 1e-4 and lim.boundary is None
    assert lim.lo <= 0.1 <= lim.hi


def test_rate_limit_boundaries():
    flat = lambda value: (lambda params, trials, seed: RateEstimate(value, value, 0.0, trials, 1))  # noqa: E731,E501
    assert find_rate_limit(flat(0.2), 0.5, 0.0).boundary == "low"
    assert find_rate_limit(flat(0.9), 0.5, 0.0).boundary == "high"


def test_rate_limit_doubles_trials_near_target():
    seen = []

    def est(params, trials, seed):
        seen.append(trials)
        v = 1 - 5 * params.p_id
        return RateEstimate(v, v, 0.05, trials, 1)

    find_rate_limit(est, 0.5, 0.0, tolerance=0.01, trials=5, max_trials=40)
    assert max(seen) == 40
