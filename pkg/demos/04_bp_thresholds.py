"""Estimate BP thresholds with population density evolution.

Channel LLRs come from the delay subchannels (earlier codewords assumed
decoded).  A population of messages is pushed through check and variable
updates until its error probability vanishes or stalls.
"""
from dcids import default_scheme
from dcids.ldpc import get_preset
from dcids.thresholds import find_bp_threshold

dd = get_preset("bi-awgn")
for t_max in (1, 3, 7):
    res = find_bp_threshold(dd, default_scheme(t_max), p_s=0.0, hi=0.15, resolution=2e-3,
                            n_pop=5000, n=4000)
    print(f"T_max={t_max}: p_id* ~ {res.p_star:.3f} (success at {res.lo:.4f}, "
          f"failure at {res.hi:.4f}, {len(res.probes)} probes)")
