"""Insertion/deletion/substitution (IDS) channel with a bounded drift process.

Each input bit is deleted with probability ``p_id/2``, replaced by two uniform
random bits with probability ``p_id/2``, or transmitted (and flipped with
probability ``p_s``) otherwise.  The drift (received minus transmitted bits)
is kept inside ``[-d_max, d_max]``: at a boundary the event that would leave
the range is disallowed and the remaining event masses are rescaled.  The
detector in :mod:`dcids.trellis` uses exactly the same convention.
"""
from dataclasses import dataclass
import itertools

import numba
import numpy as np

from ._rng import make_rng

MAX_ENUM_LEN = 10

# Wide enough that the reflecting boundary is essentially never reached for
# frames of ~1e4 bits at p_id <= 0.1 (drift std ~ 32).
DEFAULT_D_MAX = 64

DELETION, TRANSMISSION, INSERTION = 0, 1, 2


@dataclass(frozen=True)
class ChannelParams:
    p_id: float
    p_s: float = 0.0
    d_max: int = DEFAULT_D_MAX

    def __post_init__(self):
        if not 0.0 <= self.p_id <= 1.0:
            raise ValueError(f"p_id must lie in [0, 1], got {self.p_id}")
        if not 0.0 <= self.p_s <= 1.0:
            raise ValueError(f"p_s must lie in [0, 1], got {self.p_s}")
        if int(self.d_max) != self.d_max or self.d_max < 1:
            raise ValueError(f"d_max must be a positive integer, got {self.d_max}")


def as_bits(x):
    """Return ``x`` as a 1-D int8 array of 0/1 values."""
    a = np.asarray(x, dtype=np.int8).reshape(-1)
    if a.size and (a.min() < 0 or a.max() > 1):
        raise ValueError("bit sequences may only contain 0 and 1")
    return a


@numba.njit(cache=True, nogil=True)
def event_probs(p_id, drift, d_max):
    """(deletion, insertion, transmission) probabilities at a given drift."""
    p_del = 0.5 * p_id
    p_ins = 0.5 * p_id
    p_tr = 1.0 - p_id
    if drift <= -d_max:
        norm = 1.0 - p_del
        return 0.0, p_ins / norm, p_tr / norm
    if drift >= d_max:
        norm = 1.0 - p_ins
        return p_del / norm, 0.0, p_tr / norm
    return p_del, p_ins, p_tr


@numba.njit(cache=True, nogil=True)
def _transmit_kernel(x, p_id, p_s, d_max, u_event, u_flip, ins_bits, y, drift):
    d = 0
    j = 0
    drift[0] = 0
    for t in range(x.shape[0]):
        p_del, p_ins, _ = event_probs(p_id, d, d_max)
        u = u_event[t]
        if u < p_del:
            d -= 1
        elif u < p_del + p_ins:
            y[j] = ins_bits[t, 0]
            y[j + 1] = ins_bits[t, 1]
            j += 2
            d += 1
        else:
            bit = x[t]
            if u_flip[t] < p_s:
                bit = 1 - bit
            y[j] = bit
            j += 1
        drift[t + 1] = d
    return j


def transmit(x, params, seed, return_drift=False):
    """Pass ``x`` through the IDS channel; deterministic for a given ``seed``.

    With ``return_drift=True`` the drift trajectory (length ``len(x) + 1``,
    starting at 0) is returned as a second value.
    """
    x = as_bits(x)
    n = x.shape[0]
    rng = make_rng(seed)
    u_event = rng.random(n)
    u_flip = rng.random(n)
    ins_bits = rng.integers(0, 2, size=(n, 2), dtype=np.int8)
    y = np.empty(2 * n, dtype=np.int8)
    drift = np.empty(n + 1, dtype=np.int64)
    length = _transmit_kernel(x, float(params.p_id), float(params.p_s), int(params.d_max),
                              u_event, u_flip, ins_bits, y, drift)
    y = y[:length].copy()
    if return_drift:
        return y, drift
    return y


def enumerate_likelihood(x, y, params):
    """Exact ``P(y | x)`` by summing over every per-bit event sequence.

    Exponential in ``len(x)``; intended as a reference for the trellis.
    """
    x = as_bits(x)
    y = as_bits(y)
    n = x.shape[0]
    if n > MAX_ENUM_LEN:
        raise ValueError(f"enumeration refused for input length {n} > {MAX_ENUM_LEN}")
    p_id, p_s, d_max = float(params.p_id), float(params.p_s), int(params.d_max)
    n_out = y.shape[0]
    total = 0.0
    for events in itertools.product((DELETION, TRANSMISSION, INSERTION), repeat=n):
        prob = 1.0
        d = 0
        j = 0
        for xt, ev in zip(x, events):
            p_del, p_ins, p_tr = event_probs(p_id, d, d_max)
            if ev == DELETION:
                prob *= p_del
                d -= 1
            elif ev == INSERTION:
                if j + 2 > n_out:
                    prob = 0.0
                    break
                # two uniform bits: the observed pair has mass 1/4
                prob *= p_ins * 0.25
                d += 1
                j += 2
            else:
                if j + 1 > n_out:
                    prob = 0.0
                    break
                prob *= p_tr * ((1.0 - p_s) if y[j] == xt else p_s)
                j += 1
            if prob == 0.0:
                break
        if j == n_out:
            total += prob
    return total
