"""Monte Carlo experiment engine: P_e estimation, sweeps, trajectories.

Every random draw is keyed by ``(master_seed, grid point, trial)`` so a
run's output depends only on its spec, never on how trials are scheduled
across workers.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from risqr import __version__
from risqr.classical import PeEstimate, sql_error_probability
from risqr.constellation import Constellation, psk_constellation, ris_constellation
from risqr.optics import (CENTRAL_EFFICIENCY, OTHER_EFFICIENCY, ChannelGeometry,
                          geometric_efficiency, mode_set)
from risqr.quantum import AdaptiveReceiver, ReceiverParams, TrialRecord

log = logging.getLogger(__name__)

SCHEMES = ("ris-quantum", "ris-sql", "psk-sql")
NBAR_CONVENTIONS = ("source", "received")
CHUNK_TRIALS = 250

SWEEP_COLUMNS = ["label", "scheme", "M", "S", "K", "visibility", "n0", "T_us", "xi_eta",
                 "trials", "errors", "p_e", "ci_low", "ci_high", "data_rate",
                 "data_rate_per_mode", "mean_steps"]
TRAJECTORY_COLUMNS = ["trial", "step", "t_us", "lo_index", "max_pr", "true_pr", "deviation",
                      "shot_elapsed_us", "clicks"]


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: fixed parameters plus at most one swept axis.

    Times are in seconds. The ``*_grid`` fields default to the matching
    scalar; exactly one of them may hold more than one value.
    """

    scheme: str = "ris-quantum"
    M: int = 16
    S: int = 1
    K: float = 80
    visibility: float = 1.0
    n0: float = 1.5
    symbol_duration: float = 1e-3
    n0_grid: tuple = ()
    k_grid: tuple = ()
    t_grid: tuple = ()
    s_grid: tuple = ()
    trials: int = 1000
    master_seed: int = 0
    time_bin_divisor: float = 10.0
    feedback_delay: float = 1e-6
    max_steps: int = 200
    accel_threshold: float = 0.99
    retention: str = "map"
    efficiency_central: float = CENTRAL_EFFICIENCY
    efficiency_other: float = OTHER_EFFICIENCY
    ring_scaling: str = "intensity"
    nbar_convention: str = "source"
    geometry: ChannelGeometry | None = None
    wavelengths: tuple = ()
    forced_truth: int | None = None
    record_trajectories: bool = False
    heatmap_bin: float = 0.5e-6
    label: str = ""

    def __post_init__(self):
        for name in ("n0_grid", "k_grid", "t_grid", "s_grid", "wavelengths"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        validate_spec(self)

    def axes(self) -> dict[str, tuple]:
        return {"n0": self.n0_grid or (self.n0,), "K": self.k_grid or (self.K,),
                "T": self.t_grid or (self.symbol_duration,), "S": self.s_grid or (self.S,)}

    def sweep_axis(self) -> str | None:
        swept = [k for k, v in self.axes().items() if len(v) > 1]
        return swept[0] if swept else None

    def points(self) -> list[dict]:
        ax = self.axes()
        axis = self.sweep_axis()
        base = {k: v[0] for k, v in ax.items()}
        if axis is None:
            return [base]
        return [{**base, axis: value} for value in ax[axis]]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if self.geometry is not None:
            d["geometry"] = dataclasses.asdict(self.geometry)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        if d.get("geometry") is not None:
            d["geometry"] = ChannelGeometry(**d["geometry"])
        return cls(**d)


class SpecError(ValueError):
    """Invalid parameter value."""


class AxisError(SpecError):
    """More than one non-singleton sweep axis, or an unsupported combination."""


def validate_spec(spec: ExperimentSpec) -> None:
    if spec.scheme not in SCHEMES:
        raise SpecError(f"scheme must be one of {SCHEMES}, got {spec.scheme!r}")
    if spec.trials < 1:
        raise SpecError("trials must be >= 1")
    if not 0.0 <= spec.visibility <= 1.0:
        raise SpecError(f"visibility must lie in [0, 1], got {spec.visibility}")
    if spec.nbar_convention not in NBAR_CONVENTIONS:
        raise SpecError(f"nbar_convention must be one of {NBAR_CONVENTIONS}")
    for eff in (spec.efficiency_central, spec.efficiency_other):
        if not 0.0 < eff <= 1.0:
            raise SpecError(f"efficiencies must lie in (0, 1], got {eff}")
    if spec.time_bin_divisor < 1:
        raise SpecError("time_bin_divisor must be >= 1")
    if spec.forced_truth is not None and not 0 <= spec.forced_truth < spec.M:
        raise SpecError("forced_truth outside the symbol range")
    ax = spec.axes()
    for v in ax["n0"]:
        if not v > 0:
            raise SpecError("n0 values must be positive")
    for v in ax["K"]:
        if not v > 0:
            raise SpecError("K values must be positive")
    for v in ax["T"]:
        if not v > 0:
            raise SpecError("symbol durations must be positive")
    for v in ax["S"]:
        if int(v) != v or v < 1:
            raise SpecError("mode counts must be positive integers")
    swept = [k for k, v in ax.items() if len(v) > 1]
    if len(swept) > 1:
        raise AxisError(f"only one sweep axis allowed per run, got {swept}")
    if spec.scheme != "ris-quantum" and max(ax["S"]) != 1:
        raise AxisError("heterodyne baselines are defined for S=1 only")
    if spec.geometry is not None and len(spec.wavelengths) < max(ax["S"]):
        raise SpecError("geometry needs one wavelength per mode")
    try:
        ReceiverParams(symbol_duration=ax["T"][0], time_bin=ax["T"][0] / spec.time_bin_divisor,
                       feedback_delay=spec.feedback_delay, max_steps=spec.max_steps,
                       visibility=spec.visibility, accel_threshold=spec.accel_threshold,
                       retention=spec.retention)
        if spec.scheme != "psk-sql":
            ris_constellation(spec.M, ax["K"][0], 1.0, spec.ring_scaling)
    except ValueError as exc:
        raise SpecError(str(exc)) from exc


@dataclass
class SweepRow:
    label: str
    scheme: str
    M: int
    S: int
    K: float
    visibility: float
    n0: float
    T_us: float
    xi_eta: float
    trials: int
    errors: int
    p_e: float
    ci_low: float
    ci_high: float
    data_rate: float
    data_rate_per_mode: float
    mean_steps: float
    wall_time: float = 0.0
    records: list = field(default_factory=list, repr=False)

    def csv_values(self) -> list[str]:
        return [fmt(getattr(self, c)) for c in SWEEP_COLUMNS]


def fmt(x) -> str:
    """Round-trip decimal text for CSV cells."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return str(int(x)) if x.is_integer() and abs(x) < 2 ** 53 else repr(x)
    return str(x)


def data_rate(p_e: float, M: int, T: float) -> float:
    """Bits per second: ``(1 - P_e) log2(M) / T``."""
    if not 0.0 <= p_e <= 1.0:
        raise ValueError("p_e must lie in [0, 1]")
    if not T > 0:
        raise ValueError("T must be positive")
    return (1.0 - p_e) * math.log2(M) / T


# -- building blocks for one grid point -----------------------------------------

def _modes(spec: ExperimentSpec, S: int, n0: float):
    if spec.geometry is not None:
        effs = [geometric_efficiency(spec.geometry, spec.wavelengths[s])
                * (spec.efficiency_central if s == 0 else spec.efficiency_other)
                for s in range(S)]
        return mode_set(S, n0, efficiencies=effs, wavelengths=spec.wavelengths[:S])
    return mode_set(S, n0, central=spec.efficiency_central, other=spec.efficiency_other)


def point_constellation(spec: ExperimentSpec, point: dict) -> Constellation:
    """Per-mode constellation for a grid point.

    With the ``source`` convention ``n0`` is the probe intensity before the
    RIS and each mode carries ``alpha_0 = sqrt(n0 / S)``. With ``received``
    the amplitudes are rescaled so the mean symbol energy summed over modes
    equals ``n0``.
    """
    S, n0, K = int(point["S"]), point["n0"], point["K"]
    a0 = math.sqrt(n0 / S)
    if spec.scheme == "psk-sql":
        c = psk_constellation(spec.M, math.sqrt(K) * a0)
    else:
        c = ris_constellation(spec.M, K, a0, spec.ring_scaling)
    if spec.nbar_convention == "received":
        scale = math.sqrt(n0 / S / c.mean_energy())
        c = Constellation(order=c.order, symbols=c.symbols * scale, rings=c.rings,
                          element_count=c.element_count,
                          source_amplitude=(c.source_amplitude or a0) * scale,
                          ring_of=c.ring_of, slot_of=c.slot_of)
    return c


def receiver_params(spec: ExperimentSpec, T: float) -> ReceiverParams:
    return ReceiverParams(symbol_duration=T, time_bin=T / spec.time_bin_divisor,
                          feedback_delay=spec.feedback_delay, max_steps=spec.max_steps,
                          visibility=spec.visibility, accel_threshold=spec.accel_threshold,
                          retention=spec.retention)


def trial_seed(master_seed: int, point_index: int, trial: int) -> np.random.SeedSequence:
    """Independent stream for one trial; children are (truth, mode 0..S-1)."""
    return np.random.SeedSequence(master_seed, spawn_key=(point_index, trial))


def _run_chunk(args) -> tuple[int, int, list]:
    spec, point, point_index, start, stop = args
    S, T = int(point["S"]), point["T"]
    rx = AdaptiveReceiver(point_constellation(spec, point), _modes(spec, S, point["n0"]),
                          receiver_params(spec, T))
    errors = steps = 0
    records = []
    for i in range(start, stop):
        truth_ss, *mode_ss = trial_seed(spec.master_seed, point_index, i).spawn(S + 1)
        if spec.forced_truth is None:
            truth = int(np.random.default_rng(truth_ss).integers(spec.M))
        else:
            truth = spec.forced_truth
        rec = rx.run(truth, [np.random.default_rng(s) for s in mode_ss],
                     record=spec.record_trajectories)
        errors += not rec.correct
        steps += rec.steps_used
        if spec.record_trajectories:
            records.append(rec)
    return errors, steps, records


def estimate_pe(spec: ExperimentSpec, point: dict | None = None, point_index: int = 0,
                workers: int = 1, executor=None) -> SweepRow:
    """Monte Carlo P_e at one grid point (the first grid point by default)."""
    point = point or spec.points()[0]
    S, T, n0, K = int(point["S"]), point["T"], point["n0"], point["K"]
    modes = _modes(spec, S, n0)
    started = time.perf_counter()
    records: list[TrialRecord] = []
    if spec.scheme == "ris-quantum":
        chunks = [(spec, point, point_index, a, min(a + CHUNK_TRIALS, spec.trials))
                  for a in range(0, spec.trials, CHUNK_TRIALS)]
        if executor is not None:
            results = list(executor.map(_run_chunk, chunks))
        elif workers > 1 and len(chunks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_run_chunk, chunks))
        else:
            results = [_run_chunk(c) for c in chunks]
        errors = sum(r[0] for r in results)
        steps = sum(r[1] for r in results)
        for r in results:
            records.extend(r[2])
        est = PeEstimate.from_counts(errors, spec.trials)
        mean_steps = steps / spec.trials
    else:
        c = point_constellation(spec, point)
        seed = np.random.SeedSequence(spec.master_seed, spawn_key=(point_index,))
        est = sql_error_probability(c, modes[0].efficiency, spec.trials, seed=seed)
        mean_steps = 1.0
    rate = data_rate(est.p_e, spec.M, T)
    return SweepRow(label=spec.label, scheme=spec.scheme, M=spec.M, S=S, K=K,
                    visibility=spec.visibility, n0=n0, T_us=T * 1e6,
                    xi_eta=modes[0].efficiency, trials=est.trials, errors=est.errors,
                    p_e=est.p_e, ci_low=est.ci_low, ci_high=est.ci_high, data_rate=rate,
                    data_rate_per_mode=rate / S, mean_steps=mean_steps,
                    wall_time=time.perf_counter() - started, records=records)


def sweep(spec: ExperimentSpec, workers: int = 1) -> list[SweepRow]:
    """One row per grid point, in grid order."""
    points = spec.points()
    rows = []
    if workers > 1 and spec.scheme == "ris-quantum":
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, p in enumerate(points):
                rows.append(estimate_pe(spec, p, i, executor=pool))
                log.info("%s point %d/%d: p_e=%.4g", spec.label or spec.scheme, i + 1,
                         len(points), rows[-1].p_e)
    else:
        for i, p in enumerate(points):
            rows.append(estimate_pe(spec, p, i))
            log.info("%s point %d/%d: p_e=%.4g", spec.label or spec.scheme, i + 1,
                     len(points), rows[-1].p_e)
    return rows


# -- trajectories ------------------------------------------------------------

@dataclass
class TrajectorySummary:
    steps: np.ndarray
    max_pr: np.ndarray
    true_pr: np.ndarray
    deviation: np.ndarray
    heatmap: list[tuple[int, float, int]]  # (step, bin lower edge in us, count)


def aggregate_trajectories(records: Sequence[TrialRecord], bin_width: float = 0.5e-6
                           ) -> TrajectorySummary:
    """Per-step means over trials plus an elapsed-time histogram per step.

    Trials that stopped early are padded with their terminal values so the
    mean curve keeps each trial's final posterior.
    """
    records = [r for r in records]
    if not records:
        raise ValueError("no trajectories to aggregate")
    if any(not r.steps for r in records):
        raise ValueError("records carry no step log (run with record=True)")
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    n = max(len(r.steps) for r in records)

    def padded(attr):
        out = np.empty((len(records), n))
        for i, r in enumerate(records):
            vals = [getattr(s, attr) for s in r.steps]
            out[i, :len(vals)] = vals
            out[i, len(vals):] = vals[-1]
        return out.mean(axis=0)

    counts: dict[tuple[int, int], int] = {}
    for r in records:
        for k, s in enumerate(r.steps, start=1):
            b = int(math.floor(s.shot_elapsed / bin_width + 1e-9))
            counts[(k, b)] = counts.get((k, b), 0) + 1
    heatmap = [(k, b * bin_width * 1e6, c) for (k, b), c in sorted(counts.items())]
    return TrajectorySummary(steps=np.arange(1, n + 1), max_pr=padded("max_pr"),
                             true_pr=padded("true_pr"), deviation=padded("deviation"),
                             heatmap=heatmap)


# -- output ----------------------------------------------------------------

def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def write_sweep_csv(path: Path, rows: Sequence[SweepRow]) -> Path:
    return _write_csv(path, SWEEP_COLUMNS, ([getattr(r, c) for c in SWEEP_COLUMNS] for r in rows))


def trajectory_rows(records: Sequence[TrialRecord]):
    for i, r in enumerate(records):
        for k, s in enumerate(r.steps, start=1):
            yield (i, k, s.t * 1e6, s.lo_index, s.max_pr, s.true_pr, s.deviation,
                   s.shot_elapsed * 1e6, s.clicks)


def write_trajectory_outputs(out_dir: Path, records: Sequence[TrialRecord], bin_width: float,
                             prefix: str = "") -> list[Path]:
    summary = aggregate_trajectories(records, bin_width)
    return [
        _write_csv(out_dir / f"{prefix}trajectory.csv", TRAJECTORY_COLUMNS, trajectory_rows(records)),
        _write_csv(out_dir / f"{prefix}trajectory_mean.csv",
                   ["step", "max_pr", "true_pr", "deviation"],
                   zip(summary.steps, summary.max_pr, summary.true_pr, summary.deviation)),
        _write_csv(out_dir / f"{prefix}heatmap.csv", ["step", "elapsed_bin_us", "count"],
                   summary.heatmap),
    ]


def write_manifest(out_dir: Path, command: str, specs: Sequence[ExperimentSpec],
                   outputs: Sequence[Path], rows: Sequence[SweepRow] = (), started: float | None = None,
                   extra: dict | None = None) -> Path:
    manifest = {
        "command": command,
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "specs": [s.to_dict() for s in specs],
        "master_seeds": sorted({s.master_seed for s in specs}),
        "outputs": [Path(p).name for p in outputs],
        "row_wall_times": [r.wall_time for r in rows],
        "wall_time": None if started is None else time.perf_counter() - started,
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, default=_json_default), encoding="utf-8")
    return path


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def run_spec(spec: ExperimentSpec, out_dir: Path, workers: int = 1, command: str = "sweep"
             ) -> list[SweepRow]:
    """Run a sweep and write pe_sweep.csv (+ trajectory files) and the manifest."""
    started = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = sweep(spec, workers=workers)
    outputs = [write_sweep_csv(out_dir / "pe_sweep.csv", rows)]
    if spec.record_trajectories:
        for i, row in enumerate(rows):
            prefix = "" if len(rows) == 1 else f"point{i}_"
            outputs += write_trajectory_outputs(out_dir, row.records, spec.heatmap_bin, prefix)
    write_manifest(out_dir, command, [spec], outputs, rows, started)
    return rows
