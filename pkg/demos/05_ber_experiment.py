"""Run a small bit-error-rate sweep through the experiment harness.

The harness takes one configuration object and returns rows that can be
written as CSV.  The same experiment runs from the shell with
``dcids ber --p-id 0.04,0.07 --t-max 7 --n 2000 --L 10``.
"""
import sys

from dcids.harness import ExperimentConfig, rows_to_csv, run

cfg = ExperimentConfig(kind="ber", p_id=[0.04, 0.07], t_max=[7], code=["bi-awgn"],
                       n=2000, L=10, max_iters=100).validate()
rows = run(cfg)
wanted = {"ber", "fer", "detections_per_codeword", "realized_rate"}
sys.stdout.write(rows_to_csv([r for r in rows if r.metric in wanted]))
