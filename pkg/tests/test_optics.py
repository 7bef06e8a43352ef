import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risqr.optics import (ChannelGeometry, deviation_metric, displaced_rate,
                          geometric_efficiency, geometric_mode_set, mismatch_energy, mode_set)


def test_geometric_efficiency_example():
    geom = ChannelGeometry(l_ris=0.1, a_tx=1e-2, a_rx=1e-2, z0=1e5, z1=1e5)
    # hand evaluation: 1e-4 * 1e-4 / (5.7720e-24 * 1e20)
    lam4 = 1.55e-6 ** 4
    assert lam4 == pytest.approx(5.77200625e-24)
    xi = geometric_efficiency(geom, 1.55e-6)
    assert xi == pytest.approx(1e-8 / (5.77200625e-24 * 1e20))
    assert xi == pytest.approx(1.73e-5, rel=2e-3)


def test_geometric_scaling_laws():
    base = ChannelGeometry(0.1, 1e-2, 1e-2, 1e5, 1e5)
    ref = geometric_efficiency(base, 1.55e-6)
    far = ChannelGeometry(0.1, 1e-2, 1e-2, 2e5, 1e5)
    assert geometric_efficiency(far, 1.55e-6) == pytest.approx(ref / 4)
    assert geometric_efficiency(base, 3.1e-6) == pytest.approx(ref / 16)
    big = ChannelGeometry(0.2, 1e-2, 1e-2, 1e5, 1e5)
    assert geometric_efficiency(big, 1.55e-6) == pytest.approx(ref * 16)


def test_geometric_efficiency_clamped():
    near = ChannelGeometry(1.0, 1.0, 1.0, 1.0, 1.0)
    assert geometric_efficiency(near, 1e-6) == 1.0
    assert geometric_efficiency(near, 1e-6, clamp=False) > 1


def test_geometry_validation():
    with pytest.raises(ValueError):
        ChannelGeometry(0.1, 0.0, 1e-2, 1e5, 1e5)


def test_mode_set_examples():
    (m,) = mode_set(1, 1.5)
    assert m.source_amplitude == pytest.approx(math.sqrt(1.5))
    assert m.efficiency == 0.66
    modes = mode_set(3, 1.5)
    assert [x.source_amplitude for x in modes] == pytest.approx([math.sqrt(0.5)] * 3)
    assert [x.efficiency for x in modes] == [0.66, 0.46, 0.46]


def test_mode_set_validation():
    with pytest.raises(ValueError):
        mode_set(0, 1.0)
    with pytest.raises(ValueError):
        mode_set(2, 1.0, efficiencies=[0.5])
    with pytest.raises(ValueError):
        mode_set(1, 1.0, efficiencies=[1.5])


def test_geometric_mode_set_multiplies_detection():
    geom = ChannelGeometry(0.1, 1e-2, 1e-2, 1e5, 1e5)
    modes = geometric_mode_set(2, 1.0, geom, [1.55e-6, 1.31e-6], [0.9, 0.8])
    assert modes[0].efficiency == pytest.approx(geometric_efficiency(geom, 1.55e-6) * 0.9)
    assert modes[1].wavelength == 1.31e-6


def test_displaced_rate_examples():
    a = 1.3 - 0.4j
    assert displaced_rate(a, a, 1.0, 0.66, 1e-3) == 0.0
    assert displaced_rate(a, 0, 0.9, 0.66, 1e-3) == pytest.approx(0.66 * abs(a) ** 2 / 1e-3)
    assert displaced_rate(2, 1, 0.9, 0.5, 2) == pytest.approx(0.35)


def test_deviation_examples():
    assert deviation_metric(1j, 1j, 1.0, 1, 1.0) == 0.0
    assert deviation_metric(2, 1, 0.9, 1, 2) == pytest.approx(0.7)
    assert deviation_metric(2, 1, 0.9, 2, 2) == pytest.approx(1.4)


@pytest.mark.parametrize("V, T", [(1.1, 1.0), (-0.1, 1.0), (0.9, 0.0)])
def test_rate_domain(V, T):
    with pytest.raises(ValueError):
        displaced_rate(1, 0, V, 0.5, T)


def _cplx():
    return st.complex_numbers(max_magnitude=50, allow_nan=False, allow_infinity=False)


@settings(max_examples=200)
@given(a=_cplx(), b=_cplx(), V=st.floats(0, 1))
def test_mismatch_matches_polar_form(a, b, V):
    # atan2 rather than cmath.phase, which overflows on subnormal imaginary parts
    dphi = math.atan2(a.imag, a.real) - math.atan2(b.imag, b.real)
    polar = abs(a) ** 2 + abs(b) ** 2 - 2 * V * abs(a) * abs(b) * math.cos(dphi)
    e = float(mismatch_energy(a, b, V))
    assert e >= 0
    assert e == pytest.approx(max(polar, 0.0), abs=1e-9 * (1 + abs(a) ** 2 + abs(b) ** 2))


@settings(max_examples=100)
@given(a=_cplx(), b=_cplx(), V=st.floats(0, 1), phi=st.floats(-7, 7))
def test_rate_phase_covariant(a, b, V, phi):
    rot = cmath.exp(1j * phi)
    r1 = displaced_rate(a, b, V, 0.5, 1.0)
    r2 = displaced_rate(a * rot, b * rot, V, 0.5, 1.0)
    assert r2 == pytest.approx(r1, abs=1e-9 * (1 + abs(a) ** 2 + abs(b) ** 2))
