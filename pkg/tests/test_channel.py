import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcids.channel import ChannelParams, enumerate_likelihood, event_probs, transmit


def test_noiseless_identity():
    assert transmit([0, 1, 1, 0], ChannelParams(0.0, 0.0), seed=1).tolist() == [0, 1, 1, 0]


def test_full_substitution_complements():
    assert transmit([0, 1, 1, 0], ChannelParams(0.0, 1.0), seed=1).tolist() == [1, 0, 0, 1]


def test_empty_input():
    assert transmit([], ChannelParams(0.3, 0.1), seed=0).size == 0


def test_deterministic_given_seed():
    x = np.random.default_rng(0).integers(0, 2, 500)
    p = ChannelParams(0.2, 0.05)
    assert np.array_equal(transmit(x, p, 11), transmit(x, p, 11))
    assert not np.array_equal(transmit(x, p, 11), transmit(x, p, 12))


def test_mean_output_length():
    n, seeds = 10_000, 1000
    x = np.zeros(n, dtype=np.int8)
    p = ChannelParams(0.1, 0.0)
    lengths = np.array([transmit(x, p, s).size for s in range(seeds)])
    se = lengths.std(ddof=1) / math.sqrt(seeds)
    assert abs(lengths.mean() - n) < 3 * se


@given(st.integers(0, 200), st.floats(0, 0.5), st.integers(0, 2**31))
@settings(max_examples=50, deadline=None)
def test_no_indel_keeps_length(n, p_s, seed):
    x = np.zeros(n, dtype=np.int8)
    assert transmit(x, ChannelParams(0.0, p_s), seed).size == n


@given(st.floats(0.0, 1.0), st.integers(1, 4), st.integers(0, 2**31))
@settings(max_examples=50, deadline=None)
def test_drift_stays_bounded(p_id, d_max, seed):
    x = np.ones(300, dtype=np.int8)
    y, drift = transmit(x, ChannelParams(p_id, 0.0, d_max), seed, return_drift=True)
    assert np.abs(drift).max() <= d_max
    assert drift[0] == 0 and drift[-1] == y.size - x.size


def test_event_frequencies_away_from_boundary():
    p_id, n = 0.1, 200_000
    x = np.zeros(n, dtype=np.int8)
    # the boundary is never reached when d_max exceeds n
    _, drift = transmit(x, ChannelParams(p_id, 0.0, d_max=n + 1), 5, return_drift=True)
    steps = np.diff(drift)
    for value, prob in ((-1, p_id / 2), (1, p_id / 2), (0, 1 - p_id)):
        freq = np.mean(steps == value)
        assert abs(freq - prob) < 3 * math.sqrt(prob * (1 - prob) / n)


def test_boundary_renormalization():
    p_del, p_ins, p_tr = event_probs(0.2, 3, 3)
    assert p_ins == 0.0
    assert p_del == pytest.approx(0.1 / 0.9)
    assert p_tr == pytest.approx(0.8 / 0.9)
    assert event_probs(0.2, -3, 3)[0] == 0.0


@pytest.mark.parametrize("y, expected", [((0,), 0.72), ((), 0.1), ((1, 1), 0.025)])
def test_single_bit_enumeration(y, expected):
    assert enumerate_likelihood((0,), y, ChannelParams(0.2, 0.1)) == pytest.approx(expected, abs=1e-15)


def test_enumeration_refuses_long_inputs():
    with pytest.raises(ValueError):
        enumerate_likelihood(np.zeros(11), [], ChannelParams(0.1))


@pytest.mark.parametrize("n", range(0, 7))
@pytest.mark.parametrize("d_max", [1, 2])
def test_likelihood_mass_sums_to_one(n, d_max):
    rng = np.random.default_rng(100 * n + d_max)
    x = rng.integers(0, 2, n)
    p = ChannelParams(float(rng.uniform(0.05, 0.9)), float(rng.uniform(0, 0.4)), d_max)
    total = 0.0
    for length in range(max(0, n - d_max), n + d_max + 1):
        for y in itertools.product((0, 1), repeat=length):
            total += enumerate_likelihood(x, y, p)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(1.5)
    with pytest.raises(ValueError):
        ChannelParams(0.1, -0.1)
    with pytest.raises(ValueError):
        ChannelParams(0.1, 0.0, 0)
