"""Delayed coding over insertion/deletion/substitution channels.

Modules:

- :mod:`dcids.channel` -- IDS channel simulator and brute-force likelihood
- :mod:`dcids.trellis` -- forward-backward detection on the drift lattice
- :mod:`dcids.dc` -- delayed-coding frames and chained detection/decoding
- :mod:`dcids.ldpc` -- LDPC ensembles, code sampling, coset BP decoding
- :mod:`dcids.rates` -- SIR and BCJR-once rate estimation
- :mod:`dcids.thresholds` -- density evolution and BP thresholds
- :mod:`dcids.harness` -- experiment drivers and CSV output
"""
from ._rng import make_rng
from .channel import DEFAULT_D_MAX, ChannelParams, enumerate_likelihood, transmit
from .dc import (DelayScheme, build_delay_scheme, chained_decode, dc_encode, dc_rate,
                 default_scheme, gather_llrs)
from .ldpc import (PRESETS, DegreeDist, ParityCheck, bp_decode, coset_syndrome, design_rate,
                   read_alist, sample_code, write_alist)
from .rates import (RateEstimate, estimate_once_rate_dc, estimate_once_rate_iud,
                    estimate_once_rate_marker, estimate_sir, find_rate_limit,
                    mutual_info_from_llrs)
from .thresholds import LlrPopulation, de_iterate, find_bp_threshold, sample_dcsc_llrs
from .trellis import (L_CLIP, DesynchronizedFrame, detect, iud_prior, known_prior,
                      marginal_log_likelihood, sequence_log_likelihood, soft_prior)

__version__ = "0.1.0"
