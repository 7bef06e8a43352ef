"""Monte Carlo simulator for reading RIS-modulated coherent states.

Compares a heterodyne (shot-noise limited) receiver against an adaptive,
time-resolving displacement receiver driven by Bayesian updates on photon
arrival times.
"""

from risqr.classical import PeEstimate, min_distance_decide, sql_error_probability
from risqr.constellation import Constellation, RingLayout, psk_constellation, ring_layout, ris_constellation
from risqr.optics import ChannelGeometry, ModeSpec, displaced_rate, geometric_efficiency, mode_set
from risqr.quantum import DegenerateEvidenceError, ReceiverParams, TrialRecord, run_symbol

__version__ = "0.1.0"

__all__ = [
    "ChannelGeometry",
    "Constellation",
    "DegenerateEvidenceError",
    "ModeSpec",
    "PeEstimate",
    "ReceiverParams",
    "RingLayout",
    "TrialRecord",
    "displaced_rate",
    "geometric_efficiency",
    "min_distance_decide",
    "mode_set",
    "psk_constellation",
    "ring_layout",
    "ris_constellation",
    "run_symbol",
    "sql_error_probability",
]
