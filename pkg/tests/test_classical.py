import math

import numpy as np
import pytest

from risqr.classical import (PeEstimate, bpsk_error_probability, circular_noise,
                             heterodyne_sample, min_distance_decide, sql_error_probability)
from risqr.constellation import Constellation, psk_constellation, ris_constellation

BPSK = psk_constellation(2, 1.0)


def test_noiseless_sample():
    assert heterodyne_sample(2 - 1j, 0.25, 0.0) == pytest.approx(1 - 0.5j)


def test_pure_noise_moments():
    z = circular_noise(np.random.default_rng(1), 200_000)
    assert abs(z.mean()) < 0.01
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.01)
    assert np.var(z.real) == pytest.approx(0.5, abs=0.01)


def test_decide_exact_symbol():
    c = ris_constellation(16, 80, 1.0)
    assert min_distance_decide(math.sqrt(0.66) * c.symbols[3], c, 0.66) == 3


def test_decide_tie_goes_to_lowest_index():
    assert min_distance_decide(0.0, BPSK, 1.0) == 0


def test_decide_by_hand():
    # |z-1|^2 = 1.45, |z+1|^2 = 0.65
    assert min_distance_decide(-0.2 + 0.1j, BPSK, 1.0) == 1


def test_decide_vectorised():
    out = min_distance_decide(np.array([0.9, -0.9, 0.0]), BPSK, 1.0)
    assert list(out) == [0, 1, 0]


def test_noiseless_pe_zero():
    c = ris_constellation(64, 80, 1.0)
    assert sql_error_probability(c, 0.66, 5000, seed=3, noiseless=True).errors == 0


def test_degenerate_constellation():
    M = 8
    c = Constellation(order=M, symbols=np.ones(M))
    est = sql_error_probability(c, 0.5, 200_000, seed=4)
    sigma = math.sqrt((1 - 1 / M) / M / est.trials)
    assert abs(est.p_e - (1 - 1 / M)) < 4 * sigma


def test_bpsk_closed_form():
    assert bpsk_error_probability(1.0, 1.0) == pytest.approx(0.0786, abs=1e-4)
    est = sql_error_probability(BPSK, 0.5, 300_000, seed=9)
    p = bpsk_error_probability(1.0, 0.5)
    assert abs(est.p_e - p) < 3 * math.sqrt(p * (1 - p) / est.trials)


def test_deterministic_replay():
    c = ris_constellation(16, 80, 1.0)
    a = sql_error_probability(c, 0.66, 150_000, seed=12)
    b = sql_error_probability(c, 0.66, 150_000, seed=12)
    assert a == b
    assert sql_error_probability(c, 0.66, 150_000, seed=13) != a


def test_pe_invariant_under_constellation_rotation():
    c = psk_constellation(8, 2.0)
    rot = Constellation(order=8, symbols=c.symbols * np.exp(0.37j))
    a = sql_error_probability(c, 0.8, 200_000, seed=2)
    b = sql_error_probability(rot, 0.8, 200_000, seed=2)
    assert abs(a.p_e - b.p_e) < 4 * math.sqrt(a.p_e / a.trials)


def test_pe_decreases_with_efficiency():
    c = ris_constellation(16, 80, math.sqrt(0.6))
    effs = (0.2, 0.4, 0.66, 1.0)
    pes = [sql_error_probability(c, e, 100_000, seed=5).p_e for e in effs]
    assert all(x > y for x, y in zip(pes, pes[1:]))


def test_wilson_interval():
    est = PeEstimate.from_counts(30, 1000)
    assert est.ci_low < 0.03 < est.ci_high
    assert est.ci_low == pytest.approx(0.0211, abs=2e-4)
    assert est.ci_high == pytest.approx(0.0425, abs=2e-4)
    zero = PeEstimate.from_counts(0, 500)
    assert zero.ci_low == 0.0 and zero.ci_high > 0
