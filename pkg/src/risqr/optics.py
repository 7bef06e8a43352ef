"""Probe modes, geometric channel loss, and displaced photon rates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Efficiencies (channel x detection) used in the evaluation presets.
CENTRAL_EFFICIENCY = 0.66
OTHER_EFFICIENCY = 0.46


@dataclass(frozen=True)
class ModeSpec:
    index: int
    source_amplitude: float
    efficiency: float
    wavelength: float | None = None

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError(f"mode efficiency must lie in (0, 1], got {self.efficiency}")


@dataclass(frozen=True)
class ChannelGeometry:
    """Source -> RIS -> receiver geometry, SI units throughout."""

    l_ris: float
    a_tx: float
    a_rx: float
    z0: float
    z1: float

    def __post_init__(self):
        for name in ("l_ris", "a_tx", "a_rx", "z0", "z1"):
            if not getattr(self, name) > 0:
                raise ValueError(f"geometry field {name} must be positive")


def geometric_efficiency(geom: ChannelGeometry, wavelength: float, clamp: bool = True) -> float:
    """Far-field beam-spreading efficiency of the two-hop RIS link.

    The RIS captures ``L^2 A_tx / (lambda^2 z0^2)`` of the source power and
    the receiver captures ``A_rx L^2 / (lambda^2 z1^2)`` of the reflected
    main lobe. The product is clamped to 1 unless ``clamp`` is False.
    """
    if not wavelength > 0:
        raise ValueError("wavelength must be positive")
    xi = geom.l_ris ** 4 * geom.a_tx * geom.a_rx / (wavelength ** 4 * geom.z0 ** 2 * geom.z1 ** 2)
    return min(1.0, xi) if clamp else xi


def mode_set(S: int, n0: float, efficiencies: Sequence[float] | None = None,
             central: float = CENTRAL_EFFICIENCY, other: float = OTHER_EFFICIENCY,
             wavelengths: Sequence[float] | None = None) -> list[ModeSpec]:
    """Split ``n0`` photons evenly over S mutually incoherent modes.

    Mode 0 is the central high-efficiency mode. An explicit per-mode
    ``efficiencies`` table overrides the central/other defaults.
    """
    if S < 1:
        raise ValueError(f"need at least one mode, got S={S}")
    if not n0 > 0:
        raise ValueError(f"total probe intensity must be positive, got {n0}")
    if efficiencies is None:
        efficiencies = [central] + [other] * (S - 1)
    elif len(efficiencies) < S:
        raise ValueError(f"efficiency table has {len(efficiencies)} entries for {S} modes")
    if wavelengths is not None and len(wavelengths) < S:
        raise ValueError(f"wavelength table has {len(wavelengths)} entries for {S} modes")
    a0 = math.sqrt(n0 / S)
    return [ModeSpec(index=s, source_amplitude=a0, efficiency=float(efficiencies[s]),
                     wavelength=None if wavelengths is None else float(wavelengths[s]))
            for s in range(S)]


def geometric_mode_set(S: int, n0: float, geom: ChannelGeometry, wavelengths: Sequence[float],
                       detection: Sequence[float]) -> list[ModeSpec]:
    """Modes whose efficiency is ``geometric_efficiency(lambda_s) * eta_s``."""
    if len(wavelengths) < S or len(detection) < S:
        raise ValueError("wavelength and detection tables must cover every mode")
    effs = [geometric_efficiency(geom, wavelengths[s]) * detection[s] for s in range(S)]
    return mode_set(S, n0, efficiencies=effs, wavelengths=wavelengths)


def _check_domain(visibility, duration):
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility}")
    if not duration > 0:
        raise ValueError(f"symbol duration must be positive, got {duration}")


def mismatch_energy(alpha, beta, visibility: float):
    """``|a|^2 + |b|^2 - 2V|a||b|cos(arg a - arg b)``, never negative.

    Written as ``|a-b|^2 + 2(1-V) Re(a conj b)`` so a perfectly matched LO
    at unit visibility gives exactly zero.
    """
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    diff = alpha - beta
    val = diff.real ** 2 + diff.imag ** 2
    if visibility != 1.0:
        val = val + 2.0 * (1.0 - visibility) * (alpha * np.conj(beta)).real
    return np.maximum(val, 0.0)


def displaced_rate(alpha, beta, visibility: float, efficiency: float, duration: float):
    """Photon arrival rate (per second) after displacing ``alpha`` by LO ``beta``.

    Accepts arrays for ``alpha`` to evaluate every hypothesis at once.
    """
    _check_domain(visibility, duration)
    if not 0.0 < efficiency <= 1.0:
        raise ValueError(f"efficiency must lie in (0, 1], got {efficiency}")
    rate = efficiency / duration * mismatch_energy(alpha, beta, visibility)
    return float(rate) if np.ndim(rate) == 0 else rate


def deviation_metric(alpha, beta, visibility: float, S: int, duration: float):
    """Efficiency-free mismatch ``S/T * [...]`` used to compare LO tracking across S."""
    _check_domain(visibility, duration)
    if S < 1:
        raise ValueError("S must be at least 1")
    val = S / duration * mismatch_energy(alpha, beta, visibility)
    return float(val) if np.ndim(val) == 0 else val
