"""Experiment drivers, configuration and CSV reporting.

Every driver takes an :class:`ExperimentConfig` and returns a list of
:class:`ResultRow`; the CSV written from those rows is byte-identical for a
fixed configuration unless wall-clock timing is switched on.
"""
import csv
from dataclasses import dataclass, field, fields
from fractions import Fraction
import io
import json
import math
import os
import time

import numpy as np

from ._rng import make_rng
from .channel import DEFAULT_D_MAX, ChannelParams, transmit
from .dc import build_delay_scheme, chained_decode, dc_encode, dc_rate, default_scheme
from .ldpc import BpDecoder, bp_decode, coset_syndrome, get_preset, read_alist, \
    read_degree_dist, sample_code
from .rates import estimate_once_rate_dc, estimate_once_rate_iud, estimate_once_rate_marker, \
    estimate_sir, find_rate_limit, marker_frame
from .thresholds import find_bp_threshold
from .trellis import L_CLIP, DesynchronizedFrame, detect, known_prior

CSV_HEADER = ("experiment", "param_json", "metric", "value", "stderr", "trials", "seconds")
THREADS_ENV = "DCIDS_THREADS"

# experiment-kind tags mixed into seeds so kinds never share random streams
_STREAM = {"ber": 1, "iterative": 2, "marker": 3, "rates": 4, "sir": 5, "threshold": 6,
           "limits": 7}


class ConfigError(ValueError):
    pass


def _floats(v):
    return [float(s) for s in v] if isinstance(v, (list, tuple)) else [float(v)]


def _ints(v):
    return [int(s) for s in v] if isinstance(v, (list, tuple)) else [int(v)]


def _strs(v):
    return [str(s) for s in v] if isinstance(v, (list, tuple)) else [str(v)]


@dataclass
class ExperimentConfig:
    kind: str = "ber"
    p_id: list = field(default_factory=lambda: [0.06])
    p_s: list = field(default_factory=lambda: [0.0])
    d_max: int = DEFAULT_D_MAX
    t_max: list = field(default_factory=lambda: [15])
    delays: list = None
    code: list = field(default_factory=lambda: ["bi-awgn"])
    alist: str = None
    degree_file: str = None
    n: int = 10_000
    L: int = 50
    blocks: int = 1
    trials: int = 20
    max_iters: int = 200
    max_global_iters: int = 200
    marker_d: list = field(default_factory=lambda: [10])
    curves: list = field(default_factory=lambda: ["sir", "iud", "dc", "marker"])
    target_rate: float = 0.5
    tolerance: float = 1e-3
    n_pop: int = 100_000
    de_iters: int = 500
    resolution: float = 1e-3
    search_lo: float = 0.0
    search_hi: float = 0.2
    seed: int = 0
    output: str = None
    timing: bool = False
    workers: int = None

    def __post_init__(self):
        if self.workers is None:
            self.workers = int(os.environ.get(THREADS_ENV, "1") or 1)

    def scheme(self, t_max):
        if self.delays:
            return build_delay_scheme(self.delays)
        return default_scheme(t_max)

    def schemes(self):
        if self.delays:
            return [build_delay_scheme(self.delays)]
        return [default_scheme(t) for t in self.t_max]

    def validate(self):
        if self.kind not in _STREAM:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        try:
            for p in self.p_id + self.p_s:
                ChannelParams(p, 0.0, self.d_max)
            schemes = self.schemes()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        for name in ("n", "L", "blocks", "trials", "max_iters", "max_global_iters", "n_pop"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for path in (self.alist, self.degree_file):
            if path is not None and not os.path.exists(path):
                raise ConfigError(f"file not found: {path}")
        if not (self.alist or self.degree_file):
            for name in self.code:
                try:
                    get_preset(name)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
        if self.kind == "ber":
            for s in schemes:
                if self.n % s.m:
                    raise ConfigError(f"n = {self.n} is not divisible by m = {s.m}")
        if any(d < 1 for d in self.marker_d):
            raise ConfigError("marker_d entries must be >= 1")
        bad = set(self.curves) - {"sir", "iud", "dc", "marker"}
        if bad:
            raise ConfigError(f"unknown curves: {sorted(bad)}")
        if not 0 <= self.search_lo < self.search_hi <= 1:
            raise ConfigError("need 0 <= search_lo < search_hi <= 1")
        return self


_LIST_FIELDS = {"p_id": _floats, "p_s": _floats, "t_max": _ints, "delays": _ints,
                "code": _strs, "marker_d": _ints, "curves": _strs}
_BOOL_TRUE = {"1", "true", "yes", "on"}


def coerce(name, raw):
    """Convert a textual config value for field ``name``."""
    types = {f.name: f for f in fields(ExperimentConfig)}
    if name not in types:
        raise ConfigError(f"unknown config key {name!r}")
    if isinstance(raw, str):
        raw = raw.strip()
    if name in _LIST_FIELDS:
        items = raw.split(",") if isinstance(raw, str) else raw
        try:
            return _LIST_FIELDS[name]([s.strip() if isinstance(s, str) else s
                                       for s in items if str(s).strip()])
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}") from None
    default = types[name].default
    if name == "timing":
        return raw if isinstance(raw, bool) else str(raw).lower() in _BOOL_TRUE
    if name in ("alist", "degree_file", "output", "kind"):
        return str(raw)
    try:
        if isinstance(default, int) or name == "workers":
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def parse_config_text(text):
    """Parse flat ``key = value`` lines (``#`` starts a comment)."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key] = coerce(key, val)
    return values


def load_config(path=None, overrides=None, kind=None):
    values = {}
    if path is not None:
        try:
            with open(path) as fh:
                values.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = coerce(key, val)
    if kind is not None:
        values["kind"] = kind
    return ExperimentConfig(**values).validate()


@dataclass
class ResultRow:
    experiment: str
    params: dict
    metric: str
    value: float
    stderr: float = float("nan")
    trials: int = 0
    seconds: float = None

    def as_record(self):
        return (self.experiment, json.dumps(self.params, sort_keys=True), self.metric,
                _fmt(self.value), _fmt(self.stderr), str(int(self.trials)),
                "" if self.seconds is None else f"{self.seconds:.3f}")


def _fmt(x):
    if x is None:
        return ""
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_record())
    return buf.getvalue()


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


class _Timer:
    def __init__(self, enabled):
        self.enabled = enabled
        self.start = time.perf_counter()

    def lap(self):
        if not self.enabled:
            return None
        now = time.perf_counter()
        out, self.start = now - self.start, now
        return out


def load_code(cfg, name, n, seed):
    """Parity-check matrix from an alist file, a degree file or a preset."""
    if cfg.alist:
        return read_alist(cfg.alist)
    dd = read_degree_dist(cfg.degree_file) if cfg.degree_file else get_preset(name)
    return sample_code(dd, n, seed)


def _code_names(cfg):
    if cfg.alist:
        return [os.path.basename(cfg.alist)]
    if cfg.degree_file:
        return [os.path.basename(cfg.degree_file)]
    return cfg.code


def _mean_stderr(x):
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()) if x.size else float("nan"), float("nan")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def run_dc_block(h, scheme, params, n_codewords, max_iters, seed, workers=1):
    """Send ``n_codewords`` random coset words through the DC scheme and decode them.

    Returns ``(words, estimates, stats, n_transmitted_bits)``.
    """
    n = h.n
    words = make_rng(seed, 0).integers(0, 2, size=(n_codewords, n), dtype=np.int8)
    syndromes = [coset_syndrome(h, w) for w in words]
    frameset = dc_encode(words, scheme, (seed, 1), (seed, 2))
    received = [transmit(f, params, (seed, 3, s)) for s, f in enumerate(frameset.frames)]

    def decoder(t, llr):
        return bp_decode(llr, h, syndromes[t], max_iters)

    estimates, stats = chained_decode(received, frameset.layout, decoder, params,
                                      truth=words, workers=workers)
    return words, estimates, stats, frameset.frames.size


def run_ber_experiment(cfg):
    """BER/FER of LDPC coset codes under DC with chained detection and decoding.

    Bit errors are counted over all ``n`` code bits (the coset word is the data).
    """
    cfg.validate()
    rows = []
    timer = _Timer(cfg.timing)
    for ci, code_name in enumerate(_code_names(cfg)):
        h = load_code(cfg, code_name, cfg.n, (cfg.seed, _STREAM["ber"], ci))
        rate = h.rate
        for scheme in cfg.schemes():
            for p_s in cfg.p_s:
                for p_id in cfg.p_id:
                    params = ChannelParams(p_id, p_s, cfg.d_max)
                    errors = bits = frame_err = sent = 0
                    iters, dets, ber_blocks = [], [], []
                    for b in range(cfg.blocks):
                        seed = (cfg.seed, _STREAM["ber"], ci, b)
                        words, _, stats, n_sent = run_dc_block(
                            h, scheme, params, cfg.L, cfg.max_iters, seed, cfg.workers)
                        errors += int(stats.bit_errors.sum())
                        bits += words.size
                        frame_err += int((stats.bit_errors > 0).sum())
                        sent += n_sent
                        iters.extend(stats.bp_iterations.tolist())
                        dets.extend(stats.detections.tolist())
                        ber_blocks.append(stats.bit_errors.sum() / words.size)
                    point = {"code": code_name, "n": h.n, "L": cfg.L, "p_id": p_id, "p_s": p_s,
                             "delays": list(scheme.delays), "t_max": scheme.t_max,
                             "d_max": cfg.d_max, "blocks": cfg.blocks}
                    n_cw = cfg.blocks * cfg.L
                    realized = Fraction(int(rate * h.n) * n_cw, sent)
                    mean_it, se_it = _mean_stderr(iters)
                    mean_det, se_det = _mean_stderr(dets)
                    rows += [
                        ResultRow("ber", point, "ber", errors / bits,
                                  _mean_stderr(ber_blocks)[1], n_cw, timer.lap()),
                        ResultRow("ber", point, "fer", frame_err / n_cw, float("nan"), n_cw),
                        ResultRow("ber", point, "bit_errors", errors, float("nan"), n_cw),
                        ResultRow("ber", point, "decoded_bits", bits, float("nan"), n_cw),
                        ResultRow("ber", point, "bp_iterations", mean_it, se_it, n_cw),
                        ResultRow("ber", point, "detections_per_codeword", mean_det, se_det,
                                  n_cw),
                        ResultRow("ber", point, "dc_rate",
                                  float(dc_rate(rate, cfg.L, scheme.t_max)), 0.0, n_cw),
                        ResultRow("ber", point, "realized_rate", float(realized), 0.0, n_cw),
                    ]
    return rows


def iterative_decode(y, h, syndrome, params, max_global_iters):
    """Joint iterative detection and decoding of one codeword.

    Each global iteration runs one detection (with the decoder's extrinsic
    LLRs as priors) followed by one BP iteration.  Returns
    ``(hard, detections, converged)``.
    """
    dec = BpDecoder(h, syndrome)
    prior = np.zeros(h.n)
    res = None
    for g in range(1, max_global_iters + 1):
        try:
            app = detect(y, h.n, prior, params)
        except DesynchronizedFrame:
            app = prior.copy()
        res = dec.run(np.clip(app - prior, -L_CLIP, L_CLIP), 1)
        if res.converged:
            return res.hard, g, True
        prior = dec.extrinsic()
    return res.hard, max_global_iters, False


def run_iterative_baseline(cfg):
    """Single-codeword transmission with joint iterative detection and decoding."""
    cfg.validate()
    rows = []
    timer = _Timer(cfg.timing)
    for ci, code_name in enumerate(_code_names(cfg)):
        h = load_code(cfg, code_name, cfg.n, (cfg.seed, _STREAM["iterative"], ci))
        for p_s in cfg.p_s:
            for p_id in cfg.p_id:
                params = ChannelParams(p_id, p_s, cfg.d_max)
                dets, errs = [], []
                for trial in range(cfg.trials):
                    seed = (cfg.seed, _STREAM["iterative"], ci, trial)
                    x = make_rng(seed, 0).integers(0, 2, h.n, dtype=np.int8)
                    y = transmit(x, params, (seed, 1))
                    hard, g, _ = iterative_decode(y, h, coset_syndrome(h, x), params,
                                                  cfg.max_global_iters)
                    dets.append(g)
                    errs.append(int((hard != x).sum()))
                point = {"code": code_name, "n": h.n, "p_id": p_id, "p_s": p_s,
                         "d_max": cfg.d_max, "max_global_iters": cfg.max_global_iters}
                errs = np.array(errs)
                mean_det, se_det = _mean_stderr(dets)
                rows += [
                    ResultRow("iterative", point, "detections_per_codeword", mean_det, se_det,
                              cfg.trials, timer.lap()),
                    ResultRow("iterative", point, "ber", errs.sum() / (h.n * cfg.trials),
                              _mean_stderr(errs / h.n)[1], cfg.trials),
                    ResultRow("iterative", point, "fer", float(np.mean(errs > 0)), float("nan"),
                              cfg.trials),
                ]
    return rows


def marker_decode(y, h, syndrome, params, d, max_iters):
    """One detection with known markers every ``d`` bits, then one BP decode."""
    placeholder = np.zeros(h.n, dtype=np.int8)
    frame, is_marker = marker_frame(placeholder, d)
    prior = np.zeros(frame.shape[0])
    prior[is_marker] = known_prior(frame[is_marker])
    try:
        llr = detect(y, frame.shape[0], prior, params)[~is_marker]
    except DesynchronizedFrame:
        llr = np.zeros(h.n)
    return bp_decode(llr, h, syndrome, max_iters)


def run_noniterative_marker_baseline(cfg):
    """LDPC codewords with two-bit markers every ``d`` bits; detect once, decode once."""
    cfg.validate()
    rows = []
    timer = _Timer(cfg.timing)
    for ci, code_name in enumerate(_code_names(cfg)):
        h = load_code(cfg, code_name, cfg.n, (cfg.seed, _STREAM["marker"], ci))
        for d in cfg.marker_d:
            for p_s in cfg.p_s:
                for p_id in cfg.p_id:
                    params = ChannelParams(p_id, p_s, cfg.d_max)
                    errs = []
                    for trial in range(cfg.trials):
                        seed = (cfg.seed, _STREAM["marker"], ci, trial)
                        x = make_rng(seed, 0).integers(0, 2, h.n, dtype=np.int8)
                        frame, _ = marker_frame(x, d)
                        y = transmit(frame, params, (seed, 1))
                        res = marker_decode(y, h, coset_syndrome(h, x), params, d, cfg.max_iters)
                        errs.append(int((res.hard != x).sum()))
                    point = {"code": code_name, "n": h.n, "d": d, "p_id": p_id, "p_s": p_s,
                             "d_max": cfg.d_max}
                    errs = np.array(errs)
                    factor = Fraction(d, d + 2)
                    rows += [
                        ResultRow("marker", point, "ber", errs.sum() / (h.n * cfg.trials),
                                  _mean_stderr(errs / h.n)[1], cfg.trials, timer.lap()),
                        ResultRow("marker", point, "fer", float(np.mean(errs > 0)),
                                  float("nan"), cfg.trials),
                        ResultRow("marker", point, "rate_factor", float(factor), 0.0, cfg.trials),
                        ResultRow("marker", point, "effective_rate", float(h.rate * factor), 0.0,
                                  cfg.trials),
                        ResultRow("marker", point, "detections_per_codeword", 1.0, 0.0,
                                  cfg.trials),
                    ]
    return rows


def _curve_estimators(cfg, curves):
    """``(label, estimator(params, trials, seed))`` pairs for the requested curves."""
    out = []
    for curve in curves:
        if curve == "sir":
            out.append(("sir", lambda p, t, s: estimate_sir(p, cfg.n, t, s)))
        elif curve == "iud":
            out.append(("iud", lambda p, t, s: estimate_once_rate_iud(p, cfg.n, t, s)))
        elif curve == "dc":
            for scheme in cfg.schemes():
                n_sub = cfg.n // scheme.m
                out.append((f"dc_t{scheme.t_max}",
                            lambda p, t, s, sc=scheme, ns=n_sub:
                            estimate_once_rate_dc(p, sc, ns, t, s)))
        elif curve == "marker":
            for d in cfg.marker_d:
                out.append((f"marker_d{d}",
                            lambda p, t, s, d=d: estimate_once_rate_marker(p, d, cfg.n, t, s)))
    return out


def run_rate_sweep(cfg, curves=None):
    """Rate curves over the ``p_id`` x ``p_s`` grid (``metric = rate_<curve>``)."""
    cfg.validate()
    rows = []
    timer = _Timer(cfg.timing)
    kind = cfg.kind if cfg.kind in ("rates", "sir") else "rates"
    for ei, (label, est) in enumerate(_curve_estimators(cfg, curves or cfg.curves)):
        for p_s in cfg.p_s:
            for p_id in cfg.p_id:
                params = ChannelParams(p_id, p_s, cfg.d_max)
                r = est(params, cfg.trials, (cfg.seed, _STREAM[kind], ei))
                point = {"curve": label, "p_id": p_id, "p_s": p_s, "n": cfg.n,
                         "d_max": cfg.d_max}
                rows.append(ResultRow(kind, point, f"rate_{label}", r.value, r.stderr, r.trials,
                                      timer.lap()))
                if abs(r.raw - r.value) > 1e-9:
                    rows.append(ResultRow(kind, point, f"raw_rate_{label}", r.raw, r.stderr,
                                          r.trials))
    return rows


def run_sir_sweep(cfg):
    return run_rate_sweep(cfg, ["sir"])


def run_rate_limits(cfg):
    """``p_id`` at which each curve crosses ``target_rate``, for every ``p_s``."""
    cfg.validate()
    rows = []
    timer = _Timer(cfg.timing)
    for ei, (label, est) in enumerate(_curve_estimators(cfg, cfg.curves)):
        for p_s in cfg.p_s:
            lim = find_rate_limit(est, cfg.target_rate, p_s, tolerance=cfg.tolerance,
                                  trials=cfg.trials, max_trials=8 * cfg.trials,
                                  seed=(cfg.seed, _STREAM["limits"], ei),
                                  lo=cfg.search_lo, hi=cfg.search_hi, d_max=cfg.d_max)
            point = {"curve": label, "p_s": p_s, "target_rate": cfg.target_rate, "n": cfg.n,
                     "d_max": cfg.d_max, "boundary": lim.boundary}
            rows.append(ResultRow("limits", point, f"limit_{label}", lim.p_id,
                                  0.5 * (lim.hi - lim.lo), cfg.trials, timer.lap()))
    return rows


def run_threshold_search(cfg):
    """BP thresholds for every (code, scheme, p_s) combination.

    A ``below_resolution`` metric of 1 marks thresholds under ``resolution``.
    """
    cfg.validate()
    rows = []
    timer = _Timer(cfg.timing)
    for ci, code_name in enumerate(_code_names(cfg)):
        dd = read_degree_dist(cfg.degree_file) if cfg.degree_file else get_preset(code_name)
        for scheme in cfg.schemes():
            for p_s in cfg.p_s:
                res = find_bp_threshold(dd, scheme, p_s, lo=cfg.search_lo, hi=cfg.search_hi,
                                        resolution=cfg.resolution,
                                        seed=(cfg.seed, _STREAM["threshold"], ci),
                                        n_pop=cfg.n_pop, n=cfg.n, max_iters=cfg.de_iters,
                                        d_max=cfg.d_max)
                point = {"code": code_name, "delays": list(scheme.delays),
                         "t_max": scheme.t_max, "p_s": p_s, "n_pop": cfg.n_pop, "n": cfg.n,
                         "d_max": cfg.d_max}
                rows += [
                    ResultRow("threshold", point, "p_id_threshold", res.p_star,
                              0.5 * (res.hi - res.lo), len(res.probes), timer.lap()),
                    ResultRow("threshold", point, "below_resolution",
                              float(res.below_resolution), 0.0, len(res.probes)),
                ]
    return rows


RUNNERS = {
    "ber": run_ber_experiment,
    "iterative": run_iterative_baseline,
    "marker": run_noniterative_marker_baseline,
    "rates": run_rate_sweep,
    "sir": run_sir_sweep,
    "threshold": run_threshold_search,
    "limits": run_rate_limits,
}


def run(cfg):
    return RUNNERS[cfg.kind](cfg)
