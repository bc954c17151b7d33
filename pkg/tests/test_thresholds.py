import math

import numpy as np
import pytest

from dcids.channel import ChannelParams
from dcids.dc import build_delay_scheme, default_scheme
from dcids.ldpc import get_preset, regular
from dcids.thresholds import EPS_DE, de_converges, de_iterate, error_probability, \
    find_bp_threshold, sample_dcsc_llrs
from dcids.trellis import L_CLIP

BSC_36 = regular(3, 6)


def _bsc_population(q, n, seed=0):
    rng = np.random.default_rng(seed)
    mag = math.log((1 - q) / q)
    return np.where(rng.random(n) < q, -mag, mag)


def test_noiseless_population():
    pop = sample_dcsc_llrs(ChannelParams(0.0, 0.0), default_scheme(3), 100, 1000, 0)
    assert len(pop) == 1000 and (pop.samples == L_CLIP).all()


def test_bsc_population_two_values():
    q = 0.1
    pop = sample_dcsc_llrs(ChannelParams(0.0, q), default_scheme(1), 2000, 20000, 1)
    mag = math.log((1 - q) / q)
    assert np.allclose(np.abs(pop.samples), mag)
    neg = np.mean(pop.samples < 0)
    assert abs(neg - q) < 4 * math.sqrt(q * (1 - q) / 20000)


def test_pooled_fractions_follow_delay_sets():
    scheme = build_delay_scheme((0, 0, 0, 1))
    pop = sample_dcsc_llrs(ChannelParams(0.05, 0.0), scheme, 300, 6000, 2)
    frac0 = np.mean(pop.delays == 0)
    assert abs(frac0 - 0.75) < 4 * math.sqrt(0.75 * 0.25 / 6000)


def test_complemented_data_same_distribution():
    # sign normalization makes the population independent of the transmitted data
    pop = sample_dcsc_llrs(ChannelParams(0.06, 0.01), default_scheme(3), 500, 8000, 3)
    other = sample_dcsc_llrs(ChannelParams(0.06, 0.01), default_scheme(3), 500, 8000, 4)
    qs = [0.05, 0.25, 0.5, 0.75]
    assert np.allclose(np.quantile(pop.samples, qs), np.quantile(other.samples, qs), atol=0.5)
    assert abs(error_probability(pop.samples) - error_probability(other.samples)) < 0.01


def test_error_probability_ties():
    assert error_probability([1.0, -1.0, 0.0, 0.0]) == 0.5


def test_de_trivial_channels():
    assert de_iterate(np.full(1000, L_CLIP), BSC_36).tolist() == [0.0]
    traj = de_iterate(np.zeros(2000), BSC_36, max_iters=20)
    assert np.allclose(traj, 0.5)


@pytest.mark.parametrize("q, ok", [(0.07, True), (0.10, False)])
def test_regular_36_bsc_bracket(q, ok):
    traj = de_iterate(_bsc_population(q, 20000), BSC_36, max_iters=500, seed=1)
    assert (traj[-1] < EPS_DE) == ok


def test_population_matches_scalar_de_trajectory():
    from oracles import QuantizedDE
    q = 0.06
    traj = de_iterate(_bsc_population(q, 200_000), BSC_36, max_iters=3, seed=2, eps=0)
    qde = QuantizedDE({3: 1.0}, {6: 1.0})
    qde.run(qde.bsc_channel(q), max_iters=3, eps=0)
    assert np.allclose(traj, qde.trajectory, atol=0.004)


def test_threshold_bracket_and_trivial_success():
    res = find_bp_threshold(get_preset("bi-awgn"), default_scheme(3), 0.0, lo=0.0, hi=0.12,
                            resolution=0.01, n_pop=5000, n=4000, max_iters=300)
    assert not res.below_resolution and not res.above_range
    assert res.lo < res.hi and res.hi - res.lo <= 0.01 + 1e-12
    assert 0.04 < res.p_star < 0.1
    assert res.probes[0][0] == 0.01 and res.probes[0][1]


def test_below_resolution_is_reported():
    # substitution-heavy channel is far beyond any rate-1/2 threshold
    res = find_bp_threshold(get_preset("bi-awgn"), default_scheme(1), 0.2, resolution=1e-3,
                            n_pop=2000, n=2000, max_iters=100)
    assert res.below_resolution and res.p_star == 0.0


def test_above_range_is_reported():
    res = find_bp_threshold(regular(3, 6), default_scheme(1), 0.0, lo=0.0, hi=0.005,
                            resolution=1e-3, n_pop=2000, n=2000, max_iters=200)
    assert res.above_range and res.p_star == 0.005


@pytest.mark.slow
def test_substitution_lowers_threshold():
    """t_max = 7: p_s = 0.04 succeeds near 0.030 and fails by 0.040; p_s = 0 succeeds at 0.040."""
    dd = get_preset("bi-awgn")
    scheme = default_scheme(7)
    run = lambda p_id, p_s: de_converges(ChannelParams(p_id, p_s), dd, scheme, 10_000,  # noqa: E731
                                         10_000, 0, 500)[0]
    assert run(0.030, 0.04)
    assert not run(0.040, 0.04)
    assert run(0.040, 0.0)
