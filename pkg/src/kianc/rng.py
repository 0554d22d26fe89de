"""Derivation of independent, reproducible random substreams.

A single root seed governs a whole experiment. Every consumer of randomness
(Monte Carlo sampling, excitation, measurement noise, source perturbation)
derives its own stream from the root seed plus a fixed label, so streams
never alias and parallel execution reproduces serial output exactly.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(root_seed, label, *keys):
    """Seeded generator for one named purpose.

    Parameters
    ----------
    root_seed : int
        root seed of the experiment
    label : str
        purpose tag, e.g. "excitation" or "mc"
    *keys : int
        extra integers identifying the job (frequency key, trial index, ...)

    Returns
    -------
    numpy.random.Generator
    """
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    entropy = [int(root_seed) & _MASK64, *words, *(int(k) & _MASK64 for k in keys)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def freq_key(frequency_hz):
    """Stable integer key for a frequency (millihertz resolution)."""
    return int(round(float(frequency_hz) * 1000.0))
