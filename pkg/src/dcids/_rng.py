import numpy as np


def _flatten(seed):
    if isinstance(seed, (tuple, list)):
        out = []
        for s in seed:
            out.extend(_flatten(s))
        return out
    return [int(seed)]


def make_rng(seed, *stream):
    """Philox generator keyed by ``seed`` and an optional stream path.

    ``seed`` may itself be a tuple of integers.  Distinct stream paths give
    independent generators for the same master seed.
    """
    entropy = _flatten(seed) + _flatten(list(stream))
    if min(entropy) < 0:
        raise ValueError("seeds must be non-negative integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
