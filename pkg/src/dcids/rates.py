"""Monte Carlo achievable-rate estimates: SIR and BCJR-once rates.

All rates are in bits per channel input bit.  The once-rates use the fact
that the detector output is a true a posteriori log-ratio, so
``I(C; O) = 1 - E[log2(1 + exp(-L))]`` with ``L`` the sign-corrected LLR.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from ._rng import make_rng
from .channel import DEFAULT_D_MAX, ChannelParams, transmit
from .dc import build_delay_scheme
from .trellis import DesynchronizedFrame, detect, known_prior, marginal_log_likelihood, \
    sequence_log_likelihood

MARKER = np.array([0, 1], dtype=np.int8)


@dataclass
class RateEstimate:
    value: float
    raw: float
    stderr: float
    trials: int
    n: int
    per_delay: np.ndarray = field(default=None, repr=False)


def _summarize(samples, n, per_delay=None):
    samples = np.asarray(samples, dtype=float)
    raw = float(samples.mean())
    stderr = float(samples.std(ddof=1) / math.sqrt(samples.size)) if samples.size > 1 else 0.0
    return RateEstimate(min(max(raw, 0.0), 1.0), raw, stderr, int(samples.size), int(n), per_delay)


def mutual_info_from_llrs(llrs, bits):
    """Average ``I(C; O)`` in bits from exact posterior LLRs and the true bits."""
    llrs = np.asarray(llrs, dtype=float)
    bits = np.asarray(bits)
    if llrs.shape != bits.shape:
        raise ValueError("llrs and bits must have the same shape")
    if llrs.size == 0:
        return 0.0
    signed = np.where(bits == 0, llrs, -llrs)
    return float(np.mean(1.0 - np.logaddexp(0.0, -signed) / math.log(2.0)))


def estimate_sir(params, n, trials, seed):
    """``(1/n) [log2 P(y|x) - log2 P(y)]`` averaged over i.u.d. inputs."""
    vals = []
    for trial in range(trials):
        x = make_rng(seed, trial, 0).integers(0, 2, n, dtype=np.int8)
        y = transmit(x, params, (seed, trial, 1))
        cond = sequence_log_likelihood(x, y, params)
        marg = marginal_log_likelihood(y, n, None, params)
        vals.append((cond - marg) / (n * math.log(2.0)))
    return _summarize(vals, n)


def subchannel_trial(params, scheme, n_sub, delay, seed):
    """One frame of the ``delay``-th delay subchannel.

    Subblocks with a larger delay act as known pilots, all other bits are
    i.u.d.  Returns ``(llrs, bits)`` restricted to the subblocks whose delay
    equals ``delay``.
    """
    m = scheme.m
    n = n_sub * m
    sub_delay = np.asarray(scheme.delays)[np.arange(n) % m]
    x = make_rng(seed, 0).integers(0, 2, n, dtype=np.int8)
    prior = np.zeros(n)
    pilots = sub_delay > delay
    prior[pilots] = known_prior(x[pilots])
    y = transmit(x, params, (seed, 1))
    try:
        llr = detect(y, n, prior, params)
    except DesynchronizedFrame:
        llr = np.zeros(n)
    target = sub_delay == delay
    return llr[target], x[target]


def estimate_once_rate_dc(params, scheme, n_sub, trials, seed):
    """BCJR-once rate of the DC scheme channel, ``(1/m) sum_i |D_i| R_i``.

    ``per_delay`` on the result holds the per-subchannel rates ``R_i``
    (``nan`` for delays that carry no subblock).
    """
    m, t_max = scheme.m, scheme.t_max
    sizes = np.array([len(scheme.delay_set(i)) for i in range(t_max + 1)])
    per = np.full((trials, t_max + 1), np.nan)
    for trial in range(trials):
        for i in range(t_max + 1):
            if sizes[i]:
                llr, bits = subchannel_trial(params, scheme, n_sub, i, (seed, trial, i))
                per[trial, i] = mutual_info_from_llrs(llr, bits)
    totals = np.nansum(per * sizes, axis=1) / m
    per_delay = np.full(t_max + 1, np.nan)
    if trials:
        per_delay[sizes > 0] = per[:, sizes > 0].mean(axis=0)
    return _summarize(totals, n_sub * m, per_delay)


def estimate_once_rate_iud(params, n, trials, seed):
    """Once-rate with i.u.d. inputs and no pilots (single-subblock scheme)."""
    return estimate_once_rate_dc(params, build_delay_scheme((0,)), n, trials, seed)


def marker_frame(payload, d):
    """Insert the two-bit marker after every ``d`` payload bits.

    Returns the frame and a boolean mask of marker positions.
    """
    payload = np.asarray(payload, dtype=np.int8)
    n_full = payload.shape[0] // d
    tail = payload[n_full * d:]
    blocks = payload[:n_full * d].reshape(n_full, d)
    body = np.hstack([blocks, np.tile(MARKER, (n_full, 1))]).reshape(-1)
    frame = np.concatenate([body, tail])
    is_marker = np.concatenate([np.tile(np.r_[np.zeros(d, bool), np.ones(2, bool)], n_full),
                                np.zeros(tail.shape[0], bool)])
    return frame, is_marker


def estimate_once_rate_marker(params, d, n, trials, seed):
    """Once-rate of i.u.d. data with a known two-bit marker every ``d`` bits.

    ``n`` is the frame length; the rate includes the ``d / (d + 2)`` loss.
    """
    if d < 1:
        raise ValueError("marker period must be >= 1")
    n_payload = (n // (d + 2)) * d
    vals = []
    for trial in range(trials):
        payload = make_rng(seed, trial, 0).integers(0, 2, n_payload, dtype=np.int8)
        frame, is_marker = marker_frame(payload, d)
        prior = np.zeros(frame.shape[0])
        prior[is_marker] = known_prior(frame[is_marker])
        y = transmit(frame, params, (seed, trial, 1))
        try:
            llr = detect(y, frame.shape[0], prior, params)
        except DesynchronizedFrame:
            llr = np.zeros(frame.shape[0])
        vals.append(d / (d + 2) * mutual_info_from_llrs(llr[~is_marker], payload))
    return _summarize(vals, n)


@dataclass
class RateLimit:
    p_id: float
    lo: float
    hi: float
    boundary: str = None
    probes: list = field(default_factory=list, repr=False)


def find_rate_limit(estimator, target_rate, p_s, tolerance=1e-3, trials=10, max_trials=80,
                    seed=0, lo=0.0, hi=0.5, d_max=DEFAULT_D_MAX):
    """Largest ``p_id`` whose estimated rate still reaches ``target_rate``.

    ``estimator(params, trials, seed)`` returns a :class:`RateEstimate` and
    must decrease in ``p_id``.  Probes whose estimate is within two standard
    errors of the target are re-run with doubled trials (up to
    ``max_trials``).  Every probe reuses ``seed`` so the curve is smooth in
    ``p_id``.  If the target is missed at ``lo`` or met at ``hi`` the
    corresponding end is returned with ``boundary`` set.
    """
    probes = []

    def reaches(p):
        t = trials
        est = estimator(ChannelParams(p, p_s, d_max), t, seed)
        while abs(est.raw - target_rate) < 2 * est.stderr and t < max_trials:
            t = min(2 * t, max_trials)
            est = estimator(ChannelParams(p, p_s, d_max), t, seed)
        probes.append((p, est))
        return est.raw >= target_rate - 1e-12

    if not reaches(lo):
        return RateLimit(lo, lo, lo, "low", probes)
    if reaches(hi):
        return RateLimit(hi, hi, hi, "high", probes)
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if reaches(mid):
            lo = mid
        else:
            hi = mid
    return RateLimit(0.5 * (lo + hi), lo, hi, None, probes)
