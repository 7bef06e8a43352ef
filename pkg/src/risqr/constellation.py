"""Ring constellations produced by an amplitude/phase programmable RIS.

Symbols are stored ring-major, phase-minor: index 0 is ring 1 / slot 1,
index ``l_1`` is ring 2 / slot 1, and so on. Every tie-break elsewhere in
the package refers to this order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

RING_SCALINGS = ("intensity", "amplitude")


@dataclass(frozen=True)
class RingLayout:
    """One amplitude ring.

    ``on_level`` is the effective number of ON elements expressed as a
    fraction of the element count K (so the absolute level is
    ``on_level * K``). It is kept continuous, never rounded.
    """

    ring: int
    phase_count: int
    initial_offset: float
    on_level: float

    def phases(self) -> np.ndarray:
        k = np.arange(self.phase_count)
        return self.initial_offset + 2.0 * np.pi * k / self.phase_count


@dataclass(frozen=True)
class Constellation:
    order: int
    symbols: np.ndarray
    rings: tuple[RingLayout, ...] = ()
    element_count: int | None = None
    source_amplitude: float | None = None
    ring_of: np.ndarray = field(default=None, repr=False)
    slot_of: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        symbols = np.asarray(self.symbols, dtype=complex)
        symbols.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        if symbols.shape != (self.order,):
            raise ValueError(f"expected {self.order} symbols, got shape {symbols.shape}")
        if self.ring_of is None:
            object.__setattr__(self, "ring_of", np.ones(self.order, dtype=int))
            object.__setattr__(self, "slot_of", np.arange(1, self.order + 1))

    def __len__(self) -> int:
        return self.order

    @property
    def energies(self) -> np.ndarray:
        return np.abs(self.symbols) ** 2

    def mean_energy(self) -> float:
        return float(np.mean(self.energies))

    def min_distance(self) -> float:
        d = np.abs(self.symbols[:, None] - self.symbols[None, :])
        d[np.diag_indices(self.order)] = np.inf
        return float(d.min())

    def rows(self):
        """Yield ``(index, ring, phase_slot, re, im, abs, arg)`` per symbol."""
        for i, a in enumerate(self.symbols):
            yield (i, int(self.ring_of[i]), int(self.slot_of[i]),
                   float(a.real), float(a.imag), float(abs(a)), float(np.angle(a)))


def _ring_count(M: int) -> int:
    if not isinstance(M, (int, np.integer)) or M < 4:
        raise ValueError(f"modulation order must be an integer 4R^2, got {M!r}")
    R = math.isqrt(M) // 2
    if 4 * R * R != M:
        raise ValueError(f"modulation order {M} is not of the form 4R^2")
    return R


def _on_levels(M: int, R: int) -> list[float]:
    r = np.arange(1, R + 1)
    if M == 16:
        return [0.25, 1.0]
    if M == 64:
        return list((7 * r - 4) / 24)
    if M == 256:
        return list((15 * r - 8) / 112)
    # Other orders: evenly spaced levels ending at K.
    return list(r / R)


def ring_layout(M: int) -> list[RingLayout]:
    """Ring structure for an order-M RIS constellation.

    Ring r carries ``4(2r-1)`` phase slots offset by ``pi / (2 l_r)``.
    The on-levels follow fixed rules for M in {16, 64, 256}; any
    other M = 4R^2 falls back to linear levels r/R.
    """
    R = _ring_count(M)
    levels = _on_levels(M, R)
    rings = []
    for r in range(1, R + 1):
        l_r = 4 * (2 * r - 1)
        rings.append(RingLayout(ring=r, phase_count=l_r,
                                initial_offset=math.pi / (2 * l_r),
                                on_level=float(levels[r - 1])))
    return rings


def ring_amplitude(level: float, K: float, source_amplitude: float,
                   scaling: str = "intensity") -> float:
    """Symbol magnitude of a ring with absolute on-level ``level`` (= K_r).

    ``"intensity"``: ``|alpha|^2 = K_r * alpha_0^2``.
    ``"amplitude"``: ``|alpha| = K_r / sqrt(K) * alpha_0``, the coherent sum
    of K_r ON elements each reflecting ``alpha_0 / sqrt(K)``.
    Both give the full focusing gain ``sqrt(K) * alpha_0`` at K_r = K.
    """
    if scaling == "intensity":
        return math.sqrt(level) * source_amplitude
    if scaling == "amplitude":
        return level / math.sqrt(K) * source_amplitude
    raise ValueError(f"unknown ring scaling {scaling!r}")


def ris_constellation(M: int, K: float, source_amplitude: float,
                      scaling: str = "intensity") -> Constellation:
    """Build the RIS ring constellation of order M for K elements.

    Ring r sits at magnitude ``ring_amplitude(K_r, K, alpha_0, scaling)``
    with phases ``psi_{0,r} + 2 pi (k-1) / l_r``.
    """
    if K <= 0:
        raise ValueError(f"element count must be positive, got {K}")
    if source_amplitude <= 0:
        raise ValueError(f"source amplitude must be positive, got {source_amplitude}")
    if scaling not in RING_SCALINGS:
        raise ValueError(f"unknown ring scaling {scaling!r}")
    rings = ring_layout(M)
    symbols, ring_of, slot_of = [], [], []
    for ring in rings:
        amplitude = ring_amplitude(ring.on_level * K, K, source_amplitude, scaling)
        symbols.append(amplitude * np.exp(1j * ring.phases()))
        ring_of.extend([ring.ring] * ring.phase_count)
        slot_of.extend(range(1, ring.phase_count + 1))
    return Constellation(order=M, symbols=np.concatenate(symbols), rings=tuple(rings),
                         element_count=K, source_amplitude=source_amplitude,
                         ring_of=np.array(ring_of), slot_of=np.array(slot_of))


def psk_constellation(M: int, amplitude: float) -> Constellation:
    if M < 2:
        raise ValueError(f"PSK needs at least 2 symbols, got {M}")
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    phases = 2.0 * np.pi * np.arange(M) / M
    return Constellation(order=M, symbols=amplitude * np.exp(1j * phases))
