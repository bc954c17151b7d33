"""Population-dynamics density evolution over the DC scheme channel.

Channel LLRs are sampled from the delay subchannels (previous codewords
assumed decoded, so larger-delay subblocks are perfect pilots) and
sign-normalized by the true bit, which is the all-zero-codeword view of a
coset code.  The BP threshold is located by bisection over ``p_id``.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from ._rng import make_rng
from .channel import DEFAULT_D_MAX, ChannelParams
from .rates import subchannel_trial
from .trellis import L_CLIP

EPS_DE = 1e-4
_TANH_CAP = 1.0 - 1e-15


@dataclass
class LlrPopulation:
    samples: np.ndarray
    origin: str = "channel"
    delays: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return self.samples.shape[0]


def sample_dcsc_llrs(params, scheme, n_sub, n_pop, seed):
    """``n_pop`` sign-normalized channel LLRs pooled over the delay subchannels.

    Each trial contributes ``n_sub * |D_i|`` samples from subchannel ``i``,
    so delays are represented in proportion ``|D_i| / m``.
    """
    chunks, tags = [], []
    collected = 0
    trial = 0
    while collected < n_pop:
        for i in range(scheme.t_max + 1):
            if not scheme.delay_set(i):
                continue
            llr, bits = subchannel_trial(params, scheme, n_sub, i, (seed, trial, i))
            chunks.append(np.where(bits == 0, llr, -llr))
            tags.append(np.full(llr.shape[0], i))
            collected += llr.shape[0]
        trial += 1
    samples = np.concatenate(chunks)
    delays = np.concatenate(tags)
    if samples.shape[0] > n_pop:
        keep = np.sort(make_rng(seed, trial, 1 << 20).choice(samples.shape[0], n_pop, replace=False))
        samples, delays = samples[keep], delays[keep]
    return LlrPopulation(samples, "channel", delays)


def error_probability(messages):
    """Fraction of sign-normalized messages that decide wrongly (ties count half)."""
    messages = np.asarray(messages)
    return float(np.mean(messages < 0) + 0.5 * np.mean(messages == 0))


def _check_update(v2c, degrees, rng):
    out = np.empty(v2c.shape[0])
    th = np.tanh(0.5 * v2c)
    for d in np.unique(degrees):
        idx = np.nonzero(degrees == d)[0]
        picks = rng.integers(0, v2c.shape[0], size=(idx.shape[0], d - 1))
        prod = np.clip(th[picks].prod(axis=1), -_TANH_CAP, _TANH_CAP)
        out[idx] = 2.0 * np.arctanh(prod)
    return out


def _variable_update(channel, c2v, degrees, rng):
    out = channel[rng.integers(0, channel.shape[0], size=c2v.shape[0])]
    for d in np.unique(degrees):
        idx = np.nonzero(degrees == d)[0]
        picks = rng.integers(0, c2v.shape[0], size=(idx.shape[0], d - 1))
        out[idx] += c2v[picks].sum(axis=1)
    return np.clip(out, -L_CLIP, L_CLIP)


def de_iterate(channel, dd, max_iters=500, n_pop=None, seed=0, eps=EPS_DE, patience=50):
    """Run sampled density evolution; return the error-probability trajectory.

    Entry 0 is the channel error probability; each further entry follows one
    check + variable update.  Stops when the error probability drops below
    ``eps``, after ``max_iters`` iterations, or when no new minimum has been
    reached for ``patience`` iterations (a stuck fixed point).
    """
    samples = np.asarray(channel.samples if isinstance(channel, LlrPopulation) else channel,
                         dtype=float)
    samples = np.clip(samples, -L_CLIP, L_CLIP)
    n_pop = int(n_pop or samples.shape[0])
    rng = make_rng(seed, 7)
    v2c = samples[rng.integers(0, samples.shape[0], size=n_pop)]
    traj = [error_probability(v2c)]
    if traj[0] < eps:
        return np.array(traj)
    vdeg = np.array(sorted(dd.lam))
    vp = np.array([dd.lam[k] for k in vdeg])
    cdeg = np.array(sorted(dd.rho))
    cp = np.array([dd.rho[k] for k in cdeg])
    best, since_best = traj[0], 0
    for _ in range(max_iters):
        c2v = _check_update(v2c, rng.choice(cdeg, size=n_pop, p=cp / cp.sum()), rng)
        v2c = _variable_update(samples, c2v, rng.choice(vdeg, size=n_pop, p=vp / vp.sum()), rng)
        pe = error_probability(v2c)
        traj.append(pe)
        if pe < eps:
            break
        if pe < best:
            best, since_best = pe, 0
        else:
            since_best += 1
            if patience and since_best >= patience:
                break
    return np.array(traj)


@dataclass
class ThresholdResult:
    """``p_star`` is the bracket midpoint; ``lo`` succeeded and ``hi`` failed.

    ``below_resolution`` is set when even ``p_id = resolution`` fails and
    ``above_range`` when the top of the search range still succeeds.
    """
    p_star: float
    lo: float
    hi: float
    below_resolution: bool = False
    above_range: bool = False
    probes: list = field(default_factory=list, repr=False)


def de_converges(params, dd, scheme, n, n_pop, seed, max_iters=500, eps=EPS_DE):
    pop = sample_dcsc_llrs(params, scheme, n // scheme.m, n_pop, seed)
    traj = de_iterate(pop, dd, max_iters=max_iters, n_pop=n_pop, seed=seed, eps=eps)
    return bool(traj[-1] < eps), traj


def find_bp_threshold(dd, scheme, p_s, lo=0.0, hi=0.2, resolution=1e-3, seed=0, n_pop=100_000,
                      n=10_000, max_iters=500, eps=EPS_DE, d_max=DEFAULT_D_MAX):
    """Bisection for the largest ``p_id`` at which density evolution succeeds.

    ``n`` sets the frame length used to sample the channel (``n // m`` bits
    per subblock).  The same seed is used at every probe.
    """
    probes = []

    def ok(p):
        success, traj = de_converges(ChannelParams(p, p_s, d_max), dd, scheme, n, n_pop, seed,
                                     max_iters, eps)
        probes.append((p, success, traj[-1], len(traj) - 1))
        return success

    lo = max(lo, resolution)
    if not ok(lo):
        return ThresholdResult(0.0, 0.0, lo, below_resolution=True, probes=probes)
    if ok(hi):
        return ThresholdResult(hi, hi, hi, above_range=True, probes=probes)
    while hi - lo > resolution * (1 + 1e-9):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdResult(0.5 * (lo + hi), lo, hi, probes=probes)
