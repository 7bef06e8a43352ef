"""Heterodyne baseline: Gaussian measurement, nearest-symbol decision, P_e."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binomtest

from risqr.constellation import Constellation

# Trials drawn per independent RNG block; fixed so results do not depend on
# how blocks are scheduled.
BLOCK_TRIALS = 1 << 16


@dataclass(frozen=True)
class HeterodyneSample:
    outcome: complex
    true_index: int


@dataclass(frozen=True)
class PeEstimate:
    p_e: float
    trials: int
    errors: int
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, errors: int, trials: int, confidence: float = 0.95) -> "PeEstimate":
        if trials < 1:
            raise ValueError("need at least one trial")
        ci = binomtest(int(errors), int(trials)).proportion_ci(confidence_level=confidence,
                                                                method="wilson")
        p = errors / trials
        # Wilson bounds bracket p analytically; guard the last ulp.
        return cls(p_e=p, trials=int(trials), errors=int(errors),
                   ci_low=min(float(ci.low), p), ci_high=max(float(ci.high), p))


def heterodyne_sample(alpha, efficiency: float, noise):
    """``sqrt(eta) * alpha + noise``; ``noise`` is a CN(0, 1) draw (or array)."""
    return math.sqrt(efficiency) * np.asarray(alpha) + noise


def circular_noise(rng: np.random.Generator, size) -> np.ndarray:
    """CN(0, 1): independent real/imag parts, each with variance 1/2."""
    z = rng.standard_normal((2,) + tuple(np.atleast_1d(size)))
    return (z[0] + 1j * z[1]) * math.sqrt(0.5)


def min_distance_decide(outcome, constellation: Constellation, efficiency: float):
    """Index of the nearest scaled symbol; ties go to the lowest index.

    ``outcome`` may be a scalar or an array of outcomes.
    """
    ref = math.sqrt(efficiency) * constellation.symbols
    out = np.asarray(outcome, dtype=complex)
    d = np.abs(out[..., None] - ref) ** 2
    # argmin returns the first minimum, which is the lowest index.
    idx = np.argmin(d, axis=-1)
    return int(idx) if idx.ndim == 0 else idx


def count_errors(constellation: Constellation, efficiency: float, trials: int,
                 rng: np.random.Generator, noiseless: bool = False) -> int:
    truth = rng.integers(0, constellation.order, size=trials)
    noise = 0.0 if noiseless else circular_noise(rng, trials)
    outcome = heterodyne_sample(constellation.symbols[truth], efficiency, noise)
    step = max(1, (1 << 21) // constellation.order)
    errors = 0
    for i in range(0, trials, step):
        decided = min_distance_decide(outcome[i:i + step], constellation, efficiency)
        errors += int(np.count_nonzero(decided != truth[i:i + step]))
    return errors


def sql_error_probability(constellation: Constellation, efficiency: float, trials: int,
                          seed=0, noiseless: bool = False) -> PeEstimate:
    """Monte Carlo symbol error probability of the heterodyne receiver.

    Truth symbols are uniform. Trials are drawn in fixed-size blocks, block
    ``b`` using the stream ``SeedSequence(seed, spawn_key=(b,))``, so the
    estimate is a pure function of ``(constellation, efficiency, trials, seed)``.
    ``seed`` may also be a ``SeedSequence``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    errors = 0
    for b, start in enumerate(range(0, trials, BLOCK_TRIALS)):
        n = min(BLOCK_TRIALS, trials - start)
        errors += count_errors(constellation, efficiency, n, block_rng(seed, b), noiseless)
    return PeEstimate.from_counts(errors, trials)


def block_rng(seed, block: int) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + (block,))
    else:
        ss = np.random.SeedSequence(seed, spawn_key=(block,))
    return np.random.default_rng(ss)


def bpsk_error_probability(amplitude: float, efficiency: float) -> float:
    """Closed form for antipodal symbols: ``Q(a * sqrt(2 eta))``."""
    return 0.5 * math.erfc(amplitude * math.sqrt(efficiency))
