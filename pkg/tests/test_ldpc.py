from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcids.ldpc import BpDecoder, DegreeDist, ParityCheck, bp_decode, coset_syndrome, \
    degree_counts, design_rate, get_preset, read_alist, read_degree_dist, regular, sample_code, \
    write_alist, write_degree_dist
from dcids.trellis import L_CLIP
from oracles import coset_map, naive_syndrome


def test_design_rates():
    assert design_rate(regular(3, 6)) == Fraction(1, 2)
    for name in ("bi-awgn", "id", "ids"):
        assert abs(float(design_rate(get_preset(name))) - 0.5) < 1e-3, name


def test_degree_dist_validation():
    with pytest.raises(ValueError):
        DegreeDist({3: 0.5}, {6: 1.0})
    with pytest.raises(ValueError):
        DegreeDist({1: 1.0}, {6: 1.0})
    with pytest.raises(ValueError):
        DegreeDist({3: 1.2, 4: -0.2}, {6: 1.0})
    with pytest.raises(ValueError):
        get_preset("nope")


def test_regular_sample():
    h = sample_code(regular(3, 6), 1000, 0)
    assert (h.n, h.m) == (1000, 500)
    assert (h.var_degrees() == 3).all() and (h.chk_degrees() == 6).all()
    assert h.rate == Fraction(1, 2)


def test_sampled_profile_matches_ensemble():
    dd = get_preset("bi-awgn")
    h = sample_code(dd, 50_000, 1)
    vd = h.var_degrees()
    for deg, frac in dd.lam.items():
        realized = (vd == deg).sum() * deg / h.n_edges
        assert abs(realized - frac) < 0.01
    cd = h.chk_degrees()
    for deg, frac in dd.rho.items():
        assert abs((cd == deg).sum() * deg / h.n_edges - frac) < 0.01


@pytest.mark.parametrize("name", ["bi-awgn", "id", "ids"])
def test_socket_counts_agree(name):
    v, c = degree_counts(get_preset(name), 10_000)
    assert v.sum() == c.sum() and len(v) == 10_000


def test_sampling_is_deterministic():
    a = sample_code(get_preset("id"), 2000, 5)
    b = sample_code(get_preset("id"), 2000, 5)
    c = sample_code(get_preset("id"), 2000, 6)
    assert np.array_equal(a.edge_var, b.edge_var) and np.array_equal(a.edge_chk, b.edge_chk)
    assert not np.array_equal(a.edge_var, c.edge_var)


def test_no_parallel_edges():
    h = sample_code(regular(3, 6), 60, 3)
    dense = h.to_dense()
    assert dense.sum() == h.n_edges


def test_duplicate_edges_rejected():
    with pytest.raises(ValueError):
        ParityCheck(3, 1, [0, 0], [0, 0])


def test_syndrome_trivial_and_naive():
    h = sample_code(regular(3, 6), 24, 2)
    assert not coset_syndrome(h, np.zeros(24)).any()
    dense = h.to_dense()
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.integers(0, 2, 24)
        assert np.array_equal(coset_syndrome(h, x), naive_syndrome(dense, x))
    with pytest.raises(ValueError):
        coset_syndrome(h, np.zeros(23))


def test_codeword_has_zero_syndrome():
    # systematic (7,4) Hamming code: H = [P^T | I], G = [I | P]
    p = np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]])
    h = ParityCheck.from_dense(np.hstack([p.T, np.eye(3, dtype=int)]))
    for cw in np.hstack([np.eye(4, dtype=int), p]):
        assert not coset_syndrome(h, cw).any()


def test_noiseless_decoding():
    h = sample_code(get_preset("ids"), 500, 0)
    x = np.random.default_rng(1).integers(0, 2, 500)
    r = bp_decode(np.where(x == 0, L_CLIP, -L_CLIP), h, coset_syndrome(h, x), 50)
    assert r.converged and r.iterations <= 1 and np.array_equal(r.hard, x)


def test_zero_llrs_do_not_converge():
    h = sample_code(regular(3, 6), 200, 0)
    x = np.random.default_rng(2).integers(0, 2, 200)
    r = bp_decode(np.zeros(200), h, coset_syndrome(h, x), 7)
    assert not r.converged and r.iterations == 7


def test_extrinsic_identity():
    h = sample_code(regular(3, 6), 300, 4)
    rng = np.random.default_rng(3)
    x = rng.integers(0, 2, 300)
    llr = (1 - 2 * x) * 2.0 + rng.normal(0, 1.5, 300)
    r = bp_decode(llr, h, coset_syndrome(h, x), 30)
    assert np.allclose(r.posterior, llr + r.extrinsic)
    assert np.abs(r.extrinsic).max() <= L_CLIP


def test_matches_exhaustive_map_on_small_codes():
    rng = np.random.default_rng(11)
    agree = 0
    trials = 200
    for k in range(trials):
        h = sample_code(regular(3, 6), 12, (k, 0))
        x = rng.integers(0, 2, 12)
        syn = coset_syndrome(h, x)
        sigma = 0.6
        y = (1 - 2 * x) + rng.normal(0, sigma, 12)
        llr = 2 * y / sigma ** 2
        r = bp_decode(llr, h, syn, 50)
        agree += np.array_equal(r.hard, coset_map(h.to_dense(), syn, llr))
    assert agree / trials >= 0.95


def test_converged_output_satisfies_checks():
    h = sample_code(get_preset("id"), 400, 8)
    rng = np.random.default_rng(8)
    for _ in range(10):
        x = rng.integers(0, 2, 400)
        llr = (1 - 2 * x) * 1.5 + rng.normal(0, 1.3, 400)
        syn = coset_syndrome(h, x)
        r = bp_decode(llr, h, syn, 40)
        if r.converged:
            assert np.array_equal(coset_syndrome(h, r.hard), syn)


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_coset_translation_equivariance(seed):
    rng = np.random.default_rng(seed)
    h = sample_code(regular(3, 6), 48, seed)
    x = rng.integers(0, 2, 48)
    shift = rng.integers(0, 2, 48)
    llr = (1 - 2 * x) * 1.2 + rng.normal(0, 1.2, 48)
    a = bp_decode(llr, h, coset_syndrome(h, x), 20)
    b = bp_decode(llr * (1 - 2 * shift), h, coset_syndrome(h, x ^ shift), 20)
    assert np.array_equal(a.hard ^ shift, b.hard)
    assert a.iterations == b.iterations and a.converged == b.converged
    assert np.allclose(a.extrinsic * (1 - 2 * shift), b.extrinsic)


def test_persistent_decoder_continues():
    h = sample_code(regular(3, 6), 200, 9)
    rng = np.random.default_rng(9)
    x = rng.integers(0, 2, 200)
    llr = (1 - 2 * x) * 1.0 + rng.normal(0, 1.1, 200)
    syn = coset_syndrome(h, x)
    one_shot = bp_decode(llr, h, syn, 6)
    dec = BpDecoder(h, syn)
    for _ in range(3):
        r = dec.run(llr, 2)
        if r.converged:
            break
    if not one_shot.converged and not r.converged:
        assert np.allclose(r.extrinsic, one_shot.extrinsic)
    dec.reset()
    assert not dec.c2v.any()


def test_alist_round_trip(tmp_path):
    h = sample_code(get_preset("bi-awgn"), 400, 2)
    path = tmp_path / "code.alist"
    write_alist(h, path)
    g = read_alist(path)
    assert np.array_equal(g.to_dense(), h.to_dense())


def test_alist_unpadded(tmp_path):
    path = tmp_path / "h.alist"
    # 3 variables, 2 checks, lists without zero padding
    path.write_text("3 2\n2 2\n1 2 1\n2 2\n1\n1 2\n2\n1 2\n2 3\n")
    h = read_alist(path)
    assert h.to_dense().tolist() == [[1, 1, 0], [0, 1, 1]]


def test_degree_file_round_trip(tmp_path):
    path = tmp_path / "dd.txt"
    write_degree_dist(get_preset("ids"), path)
    assert read_degree_dist(path) == get_preset("ids")
    path.write_text("# comment\nlambda 3 1.0\nrho = 6 1.0\n")
    assert read_degree_dist(path) == regular(3, 6)
    path.write_text("lambda 3\n")
    with pytest.raises(ValueError):
        read_degree_dist(path)
