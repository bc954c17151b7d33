"""Forward-backward (BCJR) inference on the drift lattice of the IDS channel.

Priors are passed as per-bit log-ratios ``log P(x=0) / P(x=1)``: ``0`` is an
i.u.d. bit, ``+inf`` / ``-inf`` a known 0 / 1 (a pilot), anything else a soft
prior.  Lattice states are ``(t, d)``: ``t`` input bits consumed and drift
``d``, so ``t + d`` output bits have been explained.  Columns are rescaled to
unit mass and the log scale factors are accumulated, which keeps sequences of
length 1e5 and beyond free of under/overflow.
"""
import math

import numba
import numpy as np

from .channel import as_bits, event_probs

L_CLIP = 40.0


class DesynchronizedFrame(RuntimeError):
    """The received frame cannot be explained within the drift bound."""


def iud_prior(n):
    return np.zeros(n)


def known_prior(bits):
    bits = as_bits(bits)
    return np.where(bits == 0, np.inf, -np.inf)


def soft_prior(p0):
    """Prior log-ratios from probabilities that each bit is 0."""
    p0 = np.asarray(p0, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(p0) - np.log1p(-p0)


@numba.njit(cache=True, nogil=True)
def _prior_probs(prior):
    n = prior.shape[0]
    p0 = np.empty(n)
    p1 = np.empty(n)
    for t in range(n):
        p0[t] = 1.0 / (1.0 + math.exp(-prior[t]))
        p1[t] = 1.0 / (1.0 + math.exp(prior[t]))
    return p0, p1


@numba.njit(cache=True, nogil=True)
def _forward(y, p0, p1, p_id, p_s, d_max, alpha):
    """Fill the rescaled forward lattice; return the accumulated log scale."""
    n = p0.shape[0]
    n_out = y.shape[0]
    width = 2 * d_max + 1
    alpha[:, :] = 0.0
    alpha[0, d_max] = 1.0
    log_scale = 0.0
    for t in range(n):
        for k in range(width):
            a = alpha[t, k]
            if a == 0.0:
                continue
            d = k - d_max
            j = t + d
            p_del, p_ins, p_tr = event_probs(p_id, d, d_max)
            if p_del > 0.0:
                alpha[t + 1, k - 1] += a * p_del
            if p_tr > 0.0 and j < n_out:
                if y[j] == 0:
                    e = p0[t] * (1.0 - p_s) + p1[t] * p_s
                else:
                    e = p0[t] * p_s + p1[t] * (1.0 - p_s)
                alpha[t + 1, k] += a * p_tr * e
            if p_ins > 0.0 and j + 1 < n_out:
                alpha[t + 1, k + 1] += a * p_ins * 0.25
        s = 0.0
        for k in range(width):
            s += alpha[t + 1, k]
        if s == 0.0:
            return -np.inf
        for k in range(width):
            alpha[t + 1, k] /= s
        log_scale += math.log(s)
    return log_scale


@numba.njit(cache=True, nogil=True)
def _backward(y, p0, p1, p_id, p_s, d_max, beta):
    n = p0.shape[0]
    n_out = y.shape[0]
    width = 2 * d_max + 1
    beta[:, :] = 0.0
    beta[n, n_out - n + d_max] = 1.0
    for t in range(n - 1, -1, -1):
        s = 0.0
        for k in range(width):
            d = k - d_max
            j = t + d
            if j < 0 or j > n_out:
                continue
            p_del, p_ins, p_tr = event_probs(p_id, d, d_max)
            v = 0.0
            if p_del > 0.0:
                v += p_del * beta[t + 1, k - 1]
            if p_tr > 0.0 and j < n_out:
                if y[j] == 0:
                    e = p0[t] * (1.0 - p_s) + p1[t] * p_s
                else:
                    e = p0[t] * p_s + p1[t] * (1.0 - p_s)
                v += p_tr * e * beta[t + 1, k]
            if p_ins > 0.0 and j + 1 < n_out:
                v += p_ins * 0.25 * beta[t + 1, k + 1]
            beta[t, k] = v
            s += v
        if s == 0.0:
            return False
        for k in range(width):
            beta[t, k] /= s
    return True


@numba.njit(cache=True, nogil=True)
def _posteriors(y, prior, p_id, p_s, d_max, alpha, beta, l_clip, out):
    n = prior.shape[0]
    n_out = y.shape[0]
    width = 2 * d_max + 1
    for t in range(n):
        lam = prior[t]
        if lam == np.inf:
            out[t] = l_clip
            continue
        if lam == -np.inf:
            out[t] = -l_clip
            continue
        a0 = 0.0
        a1 = 0.0
        c = 0.0
        for k in range(width):
            a = alpha[t, k]
            if a == 0.0:
                continue
            d = k - d_max
            j = t + d
            p_del, p_ins, p_tr = event_probs(p_id, d, d_max)
            if p_del > 0.0:
                c += a * p_del * beta[t + 1, k - 1]
            if p_ins > 0.0 and j + 1 < n_out:
                c += a * p_ins * 0.25 * beta[t + 1, k + 1]
            if p_tr > 0.0 and j < n_out:
                b = a * p_tr * beta[t + 1, k]
                if y[j] == 0:
                    a0 += b * (1.0 - p_s)
                    a1 += b * p_s
                else:
                    a0 += b * p_s
                    a1 += b * (1.0 - p_s)
        # lam + (L0 - L1) keeps complement symmetry bit-exact
        v = lam + (math.log(a0 + c) - math.log(a1 + c))
        if v > l_clip:
            v = l_clip
        elif v < -l_clip:
            v = -l_clip
        out[t] = v


def _check_prior(prior, n):
    if prior is None:
        return np.zeros(n)
    prior = np.ascontiguousarray(prior, dtype=np.float64)
    if prior.shape != (n,):
        raise ValueError(f"prior length {prior.shape} does not match frame length {n}")
    if np.isnan(prior).any():
        raise ValueError("prior contains NaN")
    return prior


def _feasible(n, n_out, d_max):
    return abs(n_out - n) <= d_max


def marginal_log_likelihood(y, n, priors, params):
    """``log P(y)`` with input bit ``t`` drawn from its prior (natural log).

    Returns ``-inf`` when ``y`` cannot be produced within the drift bound.
    """
    y = as_bits(y)
    prior = _check_prior(priors, n)
    d_max = int(params.d_max)
    if not _feasible(n, y.shape[0], d_max):
        return -np.inf
    p0, p1 = _prior_probs(prior)
    alpha = np.empty((n + 1, 2 * d_max + 1))
    log_scale = _forward(y, p0, p1, float(params.p_id), float(params.p_s), d_max, alpha)
    if log_scale == -np.inf:
        return -np.inf
    end = alpha[n, y.shape[0] - n + d_max]
    if end == 0.0:
        return -np.inf
    return log_scale + math.log(end)


def sequence_log_likelihood(x, y, params):
    """``log P(y | x)`` (natural log); ``-inf`` if the drift gap exceeds ``d_max``."""
    x = as_bits(x)
    return marginal_log_likelihood(y, x.shape[0], known_prior(x), params)


def detect(y, n, priors, params, l_clip=L_CLIP):
    """Per-bit a posteriori log-ratios ``log P(x_t=0 | y) / P(x_t=1 | y)``.

    Values are clipped to ``[-l_clip, l_clip]``; known bits come back as
    ``±l_clip``.  Raises :class:`DesynchronizedFrame` when ``y`` has zero
    likelihood (drift gap beyond ``d_max`` or contradicted pilots).
    """
    y = as_bits(y)
    prior = _check_prior(priors, n)
    d_max = int(params.d_max)
    if not _feasible(n, y.shape[0], d_max):
        raise DesynchronizedFrame(
            f"received length {y.shape[0]} is more than {d_max} away from {n}")
    p_id, p_s = float(params.p_id), float(params.p_s)
    p0, p1 = _prior_probs(prior)
    alpha = np.empty((n + 1, 2 * d_max + 1))
    beta = np.empty_like(alpha)
    log_scale = _forward(y, p0, p1, p_id, p_s, d_max, alpha)
    if log_scale == -np.inf or alpha[n, y.shape[0] - n + d_max] == 0.0:
        raise DesynchronizedFrame("received frame has zero likelihood")
    if not _backward(y, p0, p1, p_id, p_s, d_max, beta):
        raise DesynchronizedFrame("received frame has zero likelihood")
    out = np.empty(n)
    _posteriors(y, prior, p_id, p_s, d_max, alpha, beta, float(l_clip), out)
    return out
