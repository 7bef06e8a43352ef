"""Adaptive time-resolving displacement receiver.

Each measurement shot displaces the incoming field by an LO taken from the
constellation, watches every spectral mode for its first photon, updates
one posterior per mode from the shared prior, and keeps the posterior of
the mode with the most confident MAP hypothesis. The MAP symbol of that
posterior becomes the next LO.

Posteriors are held as normalized log-probabilities so that hypotheses
excluded by a click stay at exactly zero and nothing underflows at M=256.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from risqr.constellation import Constellation
from risqr.optics import ModeSpec, displaced_rate, mismatch_energy

RETENTION_RULES = ("map", "elementwise-max")


class DegenerateEvidenceError(RuntimeError):
    """Observation has zero likelihood under every hypothesis with prior mass."""


@dataclass(frozen=True)
class ReceiverParams:
    """Timing and interference settings of the receiver (times in seconds).

    ``time_bin`` defaults to a tenth of the symbol duration.
    ``click_resolution`` (optional) rounds each first-click time up to a
    multiple of it, mimicking a time-to-digital converter.
    """

    symbol_duration: float
    time_bin: float | None = None
    feedback_delay: float = 1e-6
    max_steps: int = 200
    visibility: float = 1.0
    accel_threshold: float = 0.99
    retention: str = "map"
    click_resolution: float | None = None

    def __post_init__(self):
        T = self.symbol_duration
        if not T > 0:
            raise ValueError(f"symbol duration must be positive, got {T}")
        if self.time_bin is None:
            object.__setattr__(self, "time_bin", T / 10)
        if not 0 < self.time_bin <= T:
            raise ValueError(f"time bin must lie in (0, T], got {self.time_bin}")
        if self.feedback_delay < 0:
            raise ValueError("feedback delay must be non-negative")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must lie in [0, 1], got {self.visibility}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not 0 < self.accel_threshold <= 1:
            raise ValueError("accel_threshold must lie in (0, 1]")
        if self.retention not in RETENTION_RULES:
            raise ValueError(f"retention must be one of {RETENTION_RULES}")
        if self.click_resolution is not None and not self.click_resolution > 0:
            raise ValueError("click_resolution must be positive")


@dataclass(frozen=True)
class DetectionEvent:
    """First-photon outcome of one mode in one shot.

    ``time`` is the arrival time for a click, or the observed window length
    for a no-click.
    """

    mode: int
    clicked: bool
    time: float

    def __post_init__(self):
        if not self.time > 0:
            raise ValueError("event time / window must be positive")


@dataclass
class PosteriorState:
    per_mode: np.ndarray  # (S, M) log-probabilities
    retained: np.ndarray  # (M,) log-probabilities
    lo: int
    elapsed: float = 0.0
    step: int = 0

    @classmethod
    def uniform(cls, M: int, S: int) -> "PosteriorState":
        logp = np.full(M, -math.log(M))
        return cls(per_mode=np.tile(logp, (S, 1)), retained=logp, lo=0)

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.retained)

    @property
    def mode_probabilities(self) -> np.ndarray:
        return np.exp(self.per_mode)


@dataclass(frozen=True)
class StepLog:
    t: float
    lo_index: int
    max_pr: float
    true_pr: float
    deviation: float
    shot_elapsed: float
    clicks: int


@dataclass
class TrialRecord:
    true_index: int
    decision: int
    correct: bool
    steps_used: int
    final_posterior: np.ndarray
    elapsed: float
    steps: list[StepLog] = field(default_factory=list)
    clicks: list[tuple[int, int, float]] = field(default_factory=list)  # (step, mode, tau)
    posteriors: list[np.ndarray] = field(default_factory=list)


# -- single-event primitives -------------------------------------------------

def sample_first_click(rate: float, window: float, rng: np.random.Generator) -> float | None:
    """Arrival time of the first photon if it lands inside ``window``.

    Inverse-CDF draw ``tau = -ln(u) / rate``. One uniform is consumed on
    every call, including ``rate == 0``, so streams stay aligned.
    """
    u = rng.random()
    if rate <= 0.0 or u == 0.0:
        return None
    tau = -math.log(u) / rate
    return tau if tau <= window else None


def log_likelihood(rates: np.ndarray, event: DetectionEvent) -> np.ndarray:
    """Log of the click density / no-click probability for each hypothesis rate."""
    rates = np.asarray(rates, dtype=float)
    if not event.clicked:
        return -rates * event.time
    with np.errstate(divide="ignore"):
        return np.log(rates) - rates * event.time


def click_likelihood(alpha_m: complex, beta: complex, mode: ModeSpec, event: DetectionEvent,
                     params: ReceiverParams) -> float:
    """Likelihood of ``event`` if the incoming symbol is ``alpha_m``.

    No click over window w: ``exp(-n w)``; first click at tau: ``n exp(-n tau)``.
    """
    n = displaced_rate(alpha_m, beta, params.visibility, mode.efficiency, params.symbol_duration)
    if not event.clicked:
        return math.exp(-n * event.time)
    return n * math.exp(-n * event.time)


def _normalize_log(logp: np.ndarray) -> np.ndarray:
    top = logp.max()
    if top == -np.inf:
        raise DegenerateEvidenceError("observation is impossible under every hypothesis")
    return logp - (top + math.log(np.exp(logp - top).sum()))


def log_posterior_update(log_prior: np.ndarray, log_lik: np.ndarray) -> np.ndarray:
    return _normalize_log(log_prior + log_lik)


def posterior_update(prior, likelihoods) -> np.ndarray:
    """Bayes rule on probability vectors, evaluated in the log domain."""
    prior = np.asarray(prior, dtype=float)
    lik = np.asarray(likelihoods, dtype=float)
    if np.any(lik < 0) or np.any(prior < 0):
        raise ValueError("prior and likelihoods must be non-negative")
    with np.errstate(divide="ignore"):
        out = log_posterior_update(np.log(prior), np.log(lik))
    return np.exp(out)


def select_lo(per_mode) -> tuple[int, np.ndarray, int, int]:
    """MAP symbol per mode, then the mode whose MAP is most probable.

    Returns ``(lo_index, retained, s_hat, m_hat)`` with ``lo_index == m_hat``.
    Works on probabilities or log-probabilities alike (argmax is monotone);
    ``retained`` is returned in the same representation. Ties go to the
    lowest index.
    """
    P = np.atleast_2d(np.asarray(per_mode))
    m_hat = np.argmax(P, axis=1)
    s_hat = int(np.argmax(P[np.arange(P.shape[0]), m_hat]))
    m = int(m_hat[s_hat])
    return m, P[s_hat], s_hat, m


# -- the shot loop -----------------------------------------------------------

def mode_streams(seed, S: int) -> list[np.random.Generator]:
    """One generator per mode, spawned from ``seed`` (int or SeedSequence)."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(c) for c in ss.spawn(S)]


class AdaptiveReceiver:
    """Precomputed rate tables for one (constellation, modes, params) setup.

    ``rates[s, b, m]`` is the photon rate of mode s when hypothesis m is
    displaced by LO symbol b.
    """

    def __init__(self, constellation: Constellation, modes: Sequence[ModeSpec],
                 params: ReceiverParams):
        if not modes:
            raise ValueError("need at least one mode")
        self.constellation = constellation
        self.modes = list(modes)
        self.params = params
        a = constellation.symbols
        # energy[b, m]: mismatch of hypothesis m against LO b
        self.energy = mismatch_energy(a[None, :], a[:, None], params.visibility)
        eff = np.array([m.efficiency for m in self.modes])
        self.rates = eff[:, None, None] / params.symbol_duration * self.energy[None]
        with np.errstate(divide="ignore"):
            self.log_rates = np.log(self.rates)

    @property
    def M(self) -> int:
        return self.constellation.order

    @property
    def S(self) -> int:
        return len(self.modes)

    def run(self, true_index: int, rngs, record: bool = True, keep_posteriors: bool = False,
            fixed_lo=None) -> TrialRecord:
        """Measure one symbol.

        ``rngs`` is a list of per-mode generators or a seed for
        :func:`mode_streams`. ``fixed_lo`` (an index, or a per-shot
        sequence whose last entry repeats) overrides the MAP feedback.
        """
        p = self.params
        M, S = self.M, self.S
        if not 0 <= true_index < M:
            raise ValueError(f"true index {true_index} outside 0..{M - 1}")
        if not isinstance(rngs, (list, tuple)):
            rngs = mode_streams(rngs, S)
        if len(rngs) != S:
            raise ValueError("need one generator per mode")
        if fixed_lo is not None and np.ndim(fixed_lo) == 0:
            fixed_lo = [int(fixed_lo)]

        T, tau_bar, delay = p.symbol_duration, p.time_bin, p.feedback_delay
        accel_at = p.accel_threshold * T
        res = p.click_resolution
        rates, log_rates = self.rates, self.log_rates

        state = PosteriorState.uniform(M, S)
        logP = state.retained
        lo = int(np.argmax(logP)) if fixed_lo is None else fixed_lo[0]
        t = 0.0
        step = 0
        rec = TrialRecord(true_index=true_index, decision=-1, correct=False, steps_used=0,
                          final_posterior=None, elapsed=0.0)
        taus = np.empty(S)
        per_mode = np.empty((S, M))

        while t < T and step < p.max_steps:
            accelerated = t > accel_at
            window = min(tau_bar, T - t)
            for s in range(S):
                tau = sample_first_click(rates[s, lo, true_index], window, rngs[s])
                if tau is not None and res is not None:
                    tau = min(math.ceil(tau / res) * res, window)
                taus[s] = np.inf if tau is None else tau
            clicked = taus <= window
            n_clicks = int(clicked.sum())
            if n_clicks == 0:
                observed = window
            else:
                observed = taus[clicked].min() if accelerated else taus[clicked].max()
                if accelerated:
                    clicked = taus == observed
                    n_clicks = int(clicked.sum())

            for s in range(S):
                r = rates[s, lo]
                if clicked[s]:
                    ll = log_rates[s, lo] - r * taus[s]
                    if record:
                        rec.clicks.append((step, s, float(taus[s])))
                else:
                    ll = -r * observed
                per_mode[s] = _normalize_log(logP + ll)

            m_hat = per_mode.argmax(axis=1)
            s_hat = int(np.argmax(per_mode[np.arange(S), m_hat]))
            if p.retention == "map" or S == 1:
                logP = per_mode[s_hat].copy()
            else:
                logP = _normalize_log(per_mode.max(axis=0))
            if fixed_lo is None:
                lo = int(m_hat[s_hat])
            else:
                lo = int(fixed_lo[min(step + 1, len(fixed_lo) - 1)])

            shot = observed + delay
            t += shot
            step += 1
            if keep_posteriors:
                rec.posteriors.append(np.exp(per_mode))
            if record:
                rec.steps.append(StepLog(
                    t=min(t, T), lo_index=lo, max_pr=math.exp(logP.max()),
                    true_pr=math.exp(logP[true_index]),
                    deviation=S / T * float(self.energy[lo, true_index]),
                    shot_elapsed=shot, clicks=n_clicks))

        decision = int(np.argmax(logP))
        rec.decision = decision
        rec.correct = decision == true_index
        rec.steps_used = step
        rec.final_posterior = np.exp(logP)
        rec.elapsed = t
        return rec


def run_symbol(true_index: int, constellation: Constellation, modes: Sequence[ModeSpec],
               params: ReceiverParams, rng, **kwargs) -> TrialRecord:
    """Run the adaptive measurement for one transmitted symbol.

    Convenience wrapper; build an :class:`AdaptiveReceiver` once when
    running many trials on the same setup.
    """
    return AdaptiveReceiver(constellation, modes, params).run(true_index, rng, **kwargs)
