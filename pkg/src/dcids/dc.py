"""Delayed coding (DC): frame construction and chained detection/decoding.

Codeword ``t`` is interleaved, cut into ``m`` subblocks, and subblock ``i`` is
sent in frame ``t + T[i]``.  Frame bits are the round-robin merge of the ``m``
subblocks it carries; slots that would belong to codewords outside ``[0, L)``
hold known pseudo-random bits.  Codeword, subblock and frame indices are
0-based throughout.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._rng import make_rng
from .channel import as_bits
from .trellis import L_CLIP, DesynchronizedFrame, detect


@dataclass(frozen=True)
class DelayScheme:
    delays: tuple

    @property
    def m(self):
        return len(self.delays)

    @property
    def t_max(self):
        return max(self.delays)

    def delay_set(self, j):
        """Subblocks sent with delay exactly ``j``."""
        return frozenset(i for i, d in enumerate(self.delays) if d == j)

    def later_set(self, j):
        """Subblocks sent with delay larger than ``j``."""
        return frozenset(i for i, d in enumerate(self.delays) if d > j)


def build_delay_scheme(delays):
    delays = tuple(int(d) for d in delays)
    if not delays:
        raise ValueError("a delay scheme needs at least one subblock")
    if min(delays) < 0:
        raise ValueError("delays must be non-negative")
    scheme = DelayScheme(delays)
    seen = set()
    for j in range(scheme.t_max + 1):
        block = scheme.delay_set(j)
        assert not block & seen
        seen |= block
    assert seen == set(range(scheme.m)) and not scheme.later_set(scheme.t_max)
    return scheme


def default_scheme(t_max):
    """The scheme ``(0, 1, ..., t_max)``."""
    return build_delay_scheme(range(t_max + 1))


def dc_rate(rate, n_codewords, t_max):
    """Transmission rate ``R * L / (L + t_max)`` as an exact fraction."""
    if n_codewords < 1 or t_max < 0:
        raise ValueError("need L >= 1 and t_max >= 0")
    rate = Fraction(rate)
    if not 0 < rate <= 1:
        raise ValueError(f"code rate must be in (0, 1], got {rate}")
    return rate * Fraction(n_codewords, n_codewords + t_max)


@dataclass
class DcLayout:
    """Everything the receiver knows about a DC transmission except the data.

    ``codeword[s, k]`` is the codeword carried at bit ``k`` of frame ``s``
    (``-1`` for a known bit) and ``position[s, k]`` the bit index inside that
    codeword before interleaving.  ``known_bits`` holds the known-bit values
    (zero elsewhere).
    """
    scheme: DelayScheme
    n: int
    n_codewords: int
    perms: np.ndarray
    codeword: np.ndarray
    position: np.ndarray
    known_bits: np.ndarray

    @property
    def n_frames(self):
        return self.n_codewords + self.scheme.t_max

    @property
    def known(self):
        return self.codeword < 0


@dataclass
class DcFrameSet:
    frames: np.ndarray
    layout: DcLayout

    def __len__(self):
        return self.frames.shape[0]


def dc_layout(scheme, n, n_codewords, interleaver_seed, known_seed):
    m = scheme.m
    if n % m:
        raise ValueError(f"codeword length {n} is not divisible by m = {m}")
    n_sub = n // m
    n_frames = n_codewords + scheme.t_max
    perms = np.stack([make_rng(interleaver_seed, t).permutation(n)
                      for t in range(n_codewords)]) if n_codewords else np.empty((0, n), int)
    k = np.arange(n)
    sub = k % m
    slot = sub * n_sub + k // m
    delays = np.asarray(scheme.delays)[sub]
    s = np.arange(n_frames)[:, None]
    codeword = s - delays[None, :]
    codeword = np.where((codeword >= 0) & (codeword < n_codewords), codeword, -1)
    position = np.zeros((n_frames, n), dtype=np.int64)
    valid = codeword >= 0
    rows, cols = np.nonzero(valid)
    position[rows, cols] = perms[codeword[rows, cols], slot[cols]]
    known_rng = make_rng(known_seed)
    known_bits = known_rng.integers(0, 2, size=(n_frames, n), dtype=np.int8)
    known_bits[valid] = 0
    return DcLayout(scheme, n, n_codewords, perms, codeword, position, known_bits)


def dc_encode(codewords, scheme, interleaver_seed, known_seed):
    """Build the ``L + t_max`` DC frames for ``codewords`` (shape ``(L, n)``)."""
    codewords = np.asarray(codewords, dtype=np.int8)
    if codewords.ndim != 2:
        raise ValueError("codewords must be a 2-D array (L, n)")
    as_bits(codewords)
    n_codewords, n = codewords.shape
    layout = dc_layout(scheme, n, n_codewords, interleaver_seed, known_seed)
    frames = layout.known_bits.copy()
    valid = ~layout.known
    frames[valid] = codewords[layout.codeword[valid], layout.position[valid]]
    return DcFrameSet(frames, layout)


def gather_llrs(frame_llrs, layout, t):
    """Assemble the LLRs of codeword ``t`` from detections of frames ``t..t+t_max``.

    ``frame_llrs[i]`` is the detector output for frame ``t + i``; the result is
    in codeword (de-interleaved) order.
    """
    t_max = layout.scheme.t_max
    if len(frame_llrs) != t_max + 1:
        raise ValueError(f"expected {t_max + 1} frame detections, got {len(frame_llrs)}")
    out = np.empty(layout.n)
    filled = 0
    for i, llr in enumerate(frame_llrs):
        mask = layout.codeword[t + i] == t
        out[layout.position[t + i, mask]] = np.asarray(llr)[mask]
        filled += int(mask.sum())
    assert filled == layout.n
    return out


def frame_priors(layout, s, t, extrinsics):
    """Detector priors for frame ``s`` while estimating codeword ``t``.

    Known bits are pilots, codewords decoded before ``t`` contribute their
    extrinsic LLRs, everything else is i.u.d.
    """
    cw = layout.codeword[s]
    prior = np.zeros(layout.n)
    known = cw < 0
    prior[known] = np.where(layout.known_bits[s, known] == 0, np.inf, -np.inf)
    done = (cw >= 0) & (cw < t)
    prior[done] = extrinsics[cw[done], layout.position[s, done]]
    return prior


@dataclass
class ChainStats:
    detections: np.ndarray
    bp_iterations: np.ndarray
    converged: np.ndarray
    erased_frames: np.ndarray
    bit_errors: np.ndarray = field(default=None)

    @classmethod
    def empty(cls, n_codewords):
        z = np.zeros(n_codewords, dtype=np.int64)
        return cls(z.copy(), z.copy(), np.zeros(n_codewords, dtype=bool), z.copy(), None)


def _detect_or_erase(y, n, prior, params):
    try:
        return detect(y, n, prior, params), False
    except DesynchronizedFrame:
        return np.zeros(n), True


def chained_decode(received, layout, decoder, params, truth=None, workers=1):
    """Estimate codewords ``0..L-1`` in order with one detection pass per frame.

    ``decoder(t, llrs)`` must return an object with ``hard``, ``extrinsic``,
    ``iterations`` and ``converged`` attributes (see :func:`dcids.ldpc.bp_decode`).
    Its extrinsic LLRs become priors when later codewords are estimated.
    Returns the ``(L, n)`` hard decisions and a :class:`ChainStats`.
    """
    n, n_codewords, t_max = layout.n, layout.n_codewords, layout.scheme.t_max
    if len(received) != layout.n_frames:
        raise ValueError(f"expected {layout.n_frames} received frames, got {len(received)}")
    estimates = np.zeros((n_codewords, n), dtype=np.int8)
    extrinsics = np.zeros((n_codewords, n))
    stats = ChainStats.empty(n_codewords)
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for t in range(n_codewords):
            jobs = [(received[t + i], n, frame_priors(layout, t + i, t, extrinsics), params)
                    for i in range(t_max + 1)]
            if pool is None:
                results = [_detect_or_erase(*job) for job in jobs]
            else:
                results = list(pool.map(lambda job: _detect_or_erase(*job), jobs))
            llr = gather_llrs([r[0] for r in results], layout, t)
            res = decoder(t, llr)
            estimates[t] = res.hard
            extrinsics[t] = np.clip(res.extrinsic, -L_CLIP, L_CLIP)
            stats.detections[t] = len(jobs)
            stats.erased_frames[t] = sum(r[1] for r in results)
            stats.bp_iterations[t] = res.iterations
            stats.converged[t] = res.converged
    finally:
        if pool is not None:
            pool.shutdown()
    if truth is not None:
        stats.bit_errors = (estimates != np.asarray(truth, dtype=np.int8)).sum(axis=1)
    return estimates, stats
