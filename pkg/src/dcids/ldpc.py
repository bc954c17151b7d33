"""LDPC ensembles, finite-length sampling and coset sum-product decoding."""
from dataclasses import dataclass
from fractions import Fraction
import logging
import math

import numba
import numpy as np

from ._rng import make_rng
from .channel import as_bits
from .trellis import L_CLIP

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DegreeDist:
    """Edge-perspective degree distributions ``{degree: fraction}``."""
    lam: dict
    rho: dict

    def __post_init__(self):
        for name, d in (("lambda", self.lam), ("rho", self.rho)):
            if not d:
                raise ValueError(f"{name} is empty")
            if any(int(k) != k or k < 2 for k in d):
                raise ValueError(f"{name} degrees must be integers >= 2")
            if any(v < 0 for v in d.values()):
                raise ValueError(f"{name} has negative coefficients")
            if abs(sum(d.values()) - 1.0) > 1e-6:
                raise ValueError(f"{name} coefficients sum to {sum(d.values())}, not 1")

    def integral_lambda(self):
        return sum(Fraction(v) / k for k, v in self.lam.items())

    def integral_rho(self):
        return sum(Fraction(v) / k for k, v in self.rho.items())


def regular(dv, dc):
    return DegreeDist({dv: 1.0}, {dc: 1.0})


# Rate-1/2 ensembles: one optimized for the binary-input AWGN channel and two
# optimized for iterative detection over ID / IDS channels.
PRESETS = {
    "bi-awgn": DegreeDist(
        {2: 0.24426, 3: 0.25907, 4: 0.01054, 5: 0.05510, 8: 0.01455, 10: 0.01275, 12: 0.40373},
        {7: 0.25475, 8: 0.73438, 9: 0.01087},
    ),
    "id": DegreeDist(
        {2: 0.39884, 3: 0.45664, 12: 0.14452},
        {2: 0.10018, 4: 0.30375, 9: 0.22102, 12: 0.37505},
    ),
    "ids": DegreeDist(
        {2: 0.24136, 3: 0.49091, 5: 0.11696, 7: 0.07771, 9: 0.00506, 12: 0.06800},
        # the 0.45892 check fraction sits on degree 6: degree 7 would give rate 0.534
        {2: 0.08363, 6: 0.45892, 9: 0.13615, 11: 0.30544, 12: 0.01586},
    ),
    "regular-3-6": regular(3, 6),
}


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown degree-distribution preset {name!r}; "
                         f"choose from {sorted(PRESETS)}") from None


def design_rate(dd):
    """``1 - (sum rho_i / i) / (sum lambda_i / i)`` as an exact fraction."""
    il = dd.integral_lambda()
    if il == 0:
        raise ValueError("degenerate lambda")
    return 1 - dd.integral_rho() / il


def read_degree_dist(path):
    """Read ``lambda <degree> <fraction>`` / ``rho <degree> <fraction>`` lines."""
    lam, rho = {}, {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace("=", " ").split()
            if len(parts) != 3 or parts[0] not in ("lambda", "rho"):
                raise ValueError(f"{path}:{lineno}: expected 'lambda|rho degree fraction'")
            target = lam if parts[0] == "lambda" else rho
            target[int(parts[1])] = float(parts[2])
    return DegreeDist(lam, rho)


def write_degree_dist(dd, path):
    with open(path, "w") as fh:
        for k in sorted(dd.lam):
            fh.write(f"lambda {k} {dd.lam[k]!r}\n")
        for k in sorted(dd.rho):
            fh.write(f"rho {k} {dd.rho[k]!r}\n")


class ParityCheck:
    """Sparse binary parity-check matrix stored as an edge list.

    Edges are sorted by check node; ``chk_ptr`` delimits the edges of each
    check and ``var_edges[var_ptr[v]:var_ptr[v + 1]]`` lists the edges of
    variable ``v``.
    """

    def __init__(self, n, m, edge_var, edge_chk, syndrome=None):
        edge_var = np.asarray(edge_var, dtype=np.int64)
        edge_chk = np.asarray(edge_chk, dtype=np.int64)
        order = np.lexsort((edge_var, edge_chk))
        self.n, self.m = int(n), int(m)
        self.edge_var = edge_var[order]
        self.edge_chk = edge_chk[order]
        if self.edge_var.size and (self.edge_var.max() >= n or self.edge_chk.max() >= m
                                   or self.edge_var.min() < 0 or self.edge_chk.min() < 0):
            raise ValueError("edge endpoint out of range")
        key = self.edge_chk * self.n + self.edge_var
        if np.any(key[1:] == key[:-1]):
            raise ValueError("parity-check matrix has duplicate edges")
        self.chk_ptr = np.concatenate([[0], np.cumsum(np.bincount(self.edge_chk, minlength=m))])
        self.var_edges = np.argsort(self.edge_var, kind="stable")
        self.var_ptr = np.concatenate([[0], np.cumsum(np.bincount(self.edge_var, minlength=n))])
        self.syndrome = None if syndrome is None else as_bits(syndrome)
        if self.syndrome is not None and self.syndrome.shape[0] != m:
            raise ValueError("syndrome length must equal the number of checks")

    @classmethod
    def from_dense(cls, h):
        h = np.asarray(h)
        rows, cols = np.nonzero(h % 2)
        return cls(h.shape[1], h.shape[0], cols, rows)

    def to_dense(self):
        h = np.zeros((self.m, self.n), dtype=np.int8)
        h[self.edge_chk, self.edge_var] = 1
        return h

    @property
    def n_edges(self):
        return self.edge_var.shape[0]

    @property
    def rate(self):
        """Design rate ``1 - m/n`` of this instance."""
        return Fraction(self.n - self.m, self.n)

    def var_degrees(self):
        return np.diff(self.var_ptr)

    def chk_degrees(self):
        return np.diff(self.chk_ptr)

    def with_syndrome(self, syndrome):
        h = ParityCheck.__new__(ParityCheck)
        h.__dict__.update(self.__dict__)
        h.syndrome = as_bits(syndrome)
        if h.syndrome.shape[0] != self.m:
            raise ValueError("syndrome length must equal the number of checks")
        return h


def _round_counts(weights, total):
    """Largest-remainder rounding of ``total * weights`` to integers summing to ``total``."""
    raw = np.asarray(weights, dtype=float) * total
    counts = np.floor(raw).astype(np.int64)
    short = int(total - counts.sum())
    if short > 0:
        counts[np.argsort(-(raw - counts), kind="stable")[:short]] += 1
    return counts


def degree_counts(dd, n):
    """Node-perspective degree counts ``(var_degrees, chk_degrees)`` for ``n`` variables.

    Variable counts use largest-remainder rounding.  Check counts are rounded
    the same way, then any leftover socket difference is absorbed by moving
    single check nodes one degree up or down (logged).
    """
    vdeg = np.array(sorted(dd.lam))
    vw = np.array([dd.lam[d] / d for d in vdeg])
    vcount = _round_counts(vw / vw.sum(), n)
    n_edges = int((vdeg * vcount).sum())

    cdeg = np.array(sorted(dd.rho))
    cw = np.array([dd.rho[d] / d for d in cdeg])
    n_checks = int(round(n_edges * cw.sum()))
    ccount = _round_counts(cw / cw.sum(), n_checks)
    chk = np.repeat(cdeg, ccount)
    delta = n_edges - int(chk.sum())
    if delta:
        log.info("adjusting %d check-node degree(s) by %+d to match %d edges",
                 abs(delta), int(np.sign(delta)), n_edges)
        # touch the most common degree first so the profile moves least
        order = np.argsort(-np.array([ccount[list(cdeg).index(d)] for d in chk]), kind="stable")
        step = 1 if delta > 0 else -1
        for idx in order[:abs(delta)]:
            chk[idx] += step
        if chk.min() < 2:
            raise ValueError("cannot realize check degrees for this n; increase n")
    return np.repeat(vdeg, vcount), chk


def sample_code(dd, n, seed, max_fix_rounds=1000):
    """Random code from the ensemble by configuration-model socket matching.

    Parallel edges are removed by swapping check endpoints with random other
    edges, which keeps every node degree unchanged.
    """
    vdeg, cdeg = degree_counts(dd, n)
    m = cdeg.shape[0]
    rng = make_rng(seed)
    ev = np.repeat(np.arange(n), vdeg)
    ec = rng.permutation(np.repeat(np.arange(m), cdeg))
    n_edges = ev.shape[0]
    for _ in range(max_fix_rounds):
        key = ev * m + ec
        order = np.argsort(key, kind="stable")
        dup = order[1:][key[order[1:]] == key[order[:-1]]]
        if dup.size == 0:
            break
        present = set(key.tolist())
        for e in dup:
            f = int(rng.integers(n_edges))
            a_new = ev[e] * m + ec[f]
            b_new = ev[f] * m + ec[e]
            if ec[e] == ec[f] or a_new in present or b_new in present:
                continue
            present.discard(int(ev[f] * m + ec[f]))
            present.update((int(a_new), int(b_new)))
            ec[e], ec[f] = ec[f], ec[e]
    else:
        raise RuntimeError("could not remove parallel edges")
    return ParityCheck(n, m, ev, ec)


def coset_syndrome(h, x):
    """``H x`` over GF(2)."""
    x = as_bits(x)
    if x.shape[0] != h.n:
        raise ValueError(f"word length {x.shape[0]} does not match n = {h.n}")
    return (np.bincount(h.edge_chk, weights=x[h.edge_var], minlength=h.m).astype(np.int64) % 2
            ).astype(np.int8)


def read_alist(path):
    with open(path) as fh:
        tokens = fh.read().split()
    vals = [int(t) for t in tokens]
    n, m = vals[0], vals[1]
    pos = 4
    col_w = vals[pos:pos + n]
    pos += n
    row_w = vals[pos:pos + m]
    pos += m
    max_col = vals[2]
    padded = len(vals) - pos == n * max_col + m * vals[3]
    ev, ec = [], []
    for v in range(n):
        width = max_col if padded else col_w[v]
        for c in vals[pos:pos + width]:
            if c:
                ev.append(v)
                ec.append(c - 1)
        pos += width
    h = ParityCheck(n, m, ev, ec)
    if list(h.chk_degrees()) != row_w or list(h.var_degrees()) != col_w:
        raise ValueError(f"{path}: row/column weights inconsistent with the adjacency lists")
    return h


def write_alist(h, path):
    vd, cd = h.var_degrees(), h.chk_degrees()
    max_v, max_c = int(vd.max(initial=0)), int(cd.max(initial=0))
    lines = [f"{h.n} {h.m}", f"{max_v} {max_c}",
             " ".join(map(str, vd)), " ".join(map(str, cd))]
    for v in range(h.n):
        chks = sorted(int(h.edge_chk[e]) + 1 for e in h.var_edges[h.var_ptr[v]:h.var_ptr[v + 1]])
        lines.append(" ".join(map(str, chks + [0] * (max_v - len(chks)))))
    for c in range(h.m):
        vs = sorted(int(v) + 1 for v in h.edge_var[h.chk_ptr[c]:h.chk_ptr[c + 1]])
        lines.append(" ".join(map(str, vs + [0] * (max_c - len(vs)))))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass
class BpResult:
    """``posterior`` is ``channel + extrinsic`` (both clipped)."""
    hard: np.ndarray
    extrinsic: np.ndarray
    iterations: int
    converged: bool
    posterior: np.ndarray = None


# tanh(x/2) is rounded to 1.0 for |x| > ~37; cap the product just below so
# atanh stays finite.
_TANH_CAP = 1.0 - 1e-15


@numba.njit(cache=True, nogil=True)
def _bp_run(llr, edge_var, chk_ptr, var_edges, var_ptr, syndrome, c2v, max_iters, l_clip,
            total, hard):
    n = llr.shape[0]
    m = chk_ptr.shape[0] - 1
    n_edges = edge_var.shape[0]
    v2c = np.empty(n_edges)
    th = np.empty(n_edges)
    iters = 0
    converged = False
    while iters < max_iters:
        for v in range(n):
            s = llr[v]
            for q in range(var_ptr[v], var_ptr[v + 1]):
                s += c2v[var_edges[q]]
            total[v] = s
        for e in range(n_edges):
            x = total[edge_var[e]] - c2v[e]
            if x > l_clip:
                x = l_clip
            elif x < -l_clip:
                x = -l_clip
            v2c[e] = x
            th[e] = math.tanh(0.5 * x)
        for c in range(m):
            a, b = chk_ptr[c], chk_ptr[c + 1]
            sign = -1.0 if syndrome[c] else 1.0
            # excluded products via prefix/suffix passes (robust to zeros)
            prefix = 1.0
            for e in range(a, b):
                c2v[e] = prefix
                prefix *= th[e]
            suffix = 1.0
            for e in range(b - 1, a - 1, -1):
                p = c2v[e] * suffix * sign
                suffix *= th[e]
                if p > _TANH_CAP:
                    p = _TANH_CAP
                elif p < -_TANH_CAP:
                    p = -_TANH_CAP
                c2v[e] = 2.0 * math.atanh(p)
        iters += 1
        for v in range(n):
            s = llr[v]
            for q in range(var_ptr[v], var_ptr[v + 1]):
                s += c2v[var_edges[q]]
            total[v] = s
            hard[v] = 1 if s < 0.0 else 0
        ok = True
        for c in range(m):
            par = syndrome[c]
            for e in range(chk_ptr[c], chk_ptr[c + 1]):
                par ^= hard[edge_var[e]]
            if par:
                ok = False
                break
        if ok:
            converged = True
            break
    return iters, converged


class BpDecoder:
    """Flooding sum-product decoder whose check messages persist across calls.

    :func:`bp_decode` is the one-shot interface; the persistent form is used
    by the joint iterative detection/decoding baseline.
    """

    def __init__(self, h, syndrome=None):
        self.h = h
        syn = syndrome if syndrome is not None else h.syndrome
        self.syndrome = (np.zeros(h.m, dtype=np.int8) if syn is None else as_bits(syn)).astype(np.int8)
        if self.syndrome.shape[0] != h.m:
            raise ValueError("syndrome length must equal the number of checks")
        self.c2v = np.zeros(h.n_edges)

    def reset(self):
        self.c2v[:] = 0.0

    def extrinsic(self):
        out = np.bincount(self.h.edge_var, weights=self.c2v, minlength=self.h.n)
        return np.clip(out, -L_CLIP, L_CLIP)

    def run(self, llr, max_iters):
        h = self.h
        llr = np.ascontiguousarray(llr, dtype=np.float64)
        if llr.shape != (h.n,):
            raise ValueError(f"LLR length {llr.shape} does not match n = {h.n}")
        total = np.empty(h.n)
        hard = np.empty(h.n, dtype=np.int8)
        iters, converged = _bp_run(llr, h.edge_var, h.chk_ptr, h.var_edges, h.var_ptr,
                                   self.syndrome, self.c2v, int(max_iters), L_CLIP, total, hard)
        ext = np.clip(total - llr, -L_CLIP, L_CLIP)
        return BpResult(hard, ext, int(iters), bool(converged), llr + ext)


def bp_decode(llrs, h, syndrome=None, max_iters=100):
    """Sum-product decoding of the coset ``{x : H x = syndrome}``.

    Stops as soon as the hard decision satisfies every check (at least one
    iteration always runs so the extrinsic output is informative).
    """
    return BpDecoder(h, syndrome).run(llrs, max_iters)
