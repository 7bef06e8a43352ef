"""Experiment presets for the figure and table reproductions."""

from __future__ import annotations

import dataclasses
import time
from pathlib import Path

from risqr.harness import (ExperimentSpec, SweepRow, _write_csv, data_rate, sweep,
                           write_manifest, write_sweep_csv, write_trajectory_outputs)


def us(x: float) -> float:
    return x / 1e6


VISIBILITY = {16: 0.997, 64: 0.998, 256: 0.9995}
FULL_TRIALS = {16: 20000, 64: 20000, 256: 10000}
TRAJECTORY_TRIALS = 1000
MODE_COUNTS = (1, 2, 3, 7)


def _grid(step: float, n: int) -> tuple:
    return tuple(round(step * k, 10) for k in range(1, n + 1))


NBAR_GRID = {16: _grid(0.15, 10), 64: _grid(0.15, 10), 256: _grid(1.5, 10)}
FIG3 = {"a": (16, 80), "b": (64, 80), "c": (256, 160)}
FIG5 = {"a": (16, us(7), 80), "b": (64, us(15), 80), "c": (256, us(30), 160)}
FIG6 = {"a": (16, 80 * 1000, tuple(us(k) for k in range(1, 16, 2))),
        "b": (64, 80 * 2000, tuple(us(k) for k in range(3, 24, 4))),
        "c": (256, 160 * 4000, tuple(us(k) for k in range(5, 31, 5)))}
FIG7 = {"a": (16, us(13), 80 * 1000), "b": (64, us(23), 80 * 2000),
        "c": (256, us(30), 160 * 4000)}
ELEMENTS_AT_M = {16: 80 * 1000, 64: 80 * 2000, 256: 160 * 4000}

# (P_e target, M, SQL-RIS, RIS-QR V<1, RIS-QR V=1)
TABLE1 = [(0.003, 16, 1.35, 0.9, 0.6), (0.3, 64, 1.35, 1.2, 1.05), (0.03, 256, 13.5, 12, 6)]
# (V, M, T_us, rate/S at S=1, rate/S at S=2) in Mbps
TABLE2 = [(0.997, 16, 15, 0.2665, 0.1333), (0.998, 64, 23, 0.2602, 0.1303),
          (0.9995, 256, 30, 0.2664, 0.1333), (1.0, 16, 13, 0.3076, 0.1538),
          (1.0, 64, 19, 0.3158, 0.1579), (1.0, 256, 27, 0.2963, 0.1482)]


class UnknownPreset(KeyError):
    pass


def _scaled(trials: int, scale: float) -> int:
    return max(1, int(round(trials * scale)))


def fig3_specs(letter: str, scale: float = 1.0, seed: int = 0) -> list[ExperimentSpec]:
    M, K = FIG3[letter]
    common = dict(M=M, K=K, S=1, n0_grid=NBAR_GRID[M], symbol_duration=us(1000),
                  trials=_scaled(FULL_TRIALS[M], scale), master_seed=seed)
    V = VISIBILITY[M]
    return [ExperimentSpec(scheme="ris-quantum", visibility=V, label=f"ris-qr-v{V}", **common),
            ExperimentSpec(scheme="ris-quantum", visibility=1.0, label="ris-qr-v1", **common),
            ExperimentSpec(scheme="ris-sql", label="sql-ris", **common),
            ExperimentSpec(scheme="psk-sql", label="sql-psk", **common)]


def fig5_specs(letter: str, scale: float = 1.0, seed: int = 0) -> list[ExperimentSpec]:
    M, T, base = FIG5[letter]
    grid = tuple(base * f for f in (10, 30, 100, 300, 1000, 3000))
    return [ExperimentSpec(scheme="ris-quantum", M=M, S=S, k_grid=grid, K=grid[0], n0=1.5,
                           symbol_duration=T, visibility=VISIBILITY[M],
                           trials=_scaled(FULL_TRIALS[M], scale), master_seed=seed,
                           label=f"S={S}")
            for S in MODE_COUNTS]


def fig6_specs(letter: str, scale: float = 1.0, seed: int = 0) -> list[ExperimentSpec]:
    M, K, grid = FIG6[letter]
    return [ExperimentSpec(scheme="ris-quantum", M=M, S=S, K=K, n0=1.5, t_grid=grid,
                           symbol_duration=grid[0], visibility=VISIBILITY[M],
                           trials=_scaled(FULL_TRIALS[M], scale), master_seed=seed,
                           label=f"S={S}")
            for S in MODE_COUNTS]


def fig7_specs(letter: str, scale: float = 1.0, seed: int = 0) -> list[ExperimentSpec]:
    M, T, K = FIG7[letter]
    return [ExperimentSpec(scheme="ris-quantum", M=M, S=S, K=K, n0=1.5, symbol_duration=T,
                           visibility=VISIBILITY[M], trials=_scaled(TRAJECTORY_TRIALS, scale),
                           master_seed=seed, record_trajectories=True,
                           heatmap_bin=T / 10 / 20, label=f"S={S}")
            for S in MODE_COUNTS]


def table1_specs(scale: float = 1.0, seed: int = 0) -> list[ExperimentSpec]:
    specs = []
    for _, M, *_ in TABLE1:
        K = FIG3["a" if M == 16 else "b" if M == 64 else "c"][1]
        common = dict(M=M, K=K, S=1, n0_grid=NBAR_GRID[M], symbol_duration=us(1000),
                      trials=_scaled(FULL_TRIALS[M], scale), master_seed=seed)
        V = VISIBILITY[M]
        specs += [ExperimentSpec(scheme="ris-sql", label=f"M={M} sql-ris", **common),
                  ExperimentSpec(scheme="ris-quantum", visibility=V, label=f"M={M} ris-qr-v{V}",
                                 **common),
                  ExperimentSpec(scheme="ris-quantum", visibility=1.0, label=f"M={M} ris-qr-v1",
                                 **common)]
    return specs


def table2_specs(scale: float = 1.0, seed: int = 0) -> list[ExperimentSpec]:
    specs = []
    for V, M, T_us, *_ in TABLE2:
        for S in (1, 2):
            specs.append(ExperimentSpec(scheme="ris-quantum", M=M, S=S, K=ELEMENTS_AT_M[M],
                                        n0=1.5, visibility=V, symbol_duration=us(T_us),
                                        trials=_scaled(FULL_TRIALS[M], scale),
                                        master_seed=seed, label=f"V={V} M={M} T={T_us}us S={S}"))
    return specs


def min_nbar(rows: list[SweepRow], target: float) -> float | None:
    """Smallest swept n0 whose P_e meets ``target``."""
    for r in sorted(rows, key=lambda r: r.n0):
        if r.p_e <= target:
            return r.n0
    return None


def table1_rows(rows: list[SweepRow]) -> list[tuple]:
    out = []
    for target, M, ref_sql, ref_qv, ref_q1 in TABLE1:
        by = {}
        for r in rows:
            if r.M == M:
                by.setdefault(r.label, []).append(r)
        V = VISIBILITY[M]
        out.append((target, V, M,
                    min_nbar(by.get(f"M={M} sql-ris", []), target),
                    min_nbar(by.get(f"M={M} ris-qr-v{V}", []), target),
                    min_nbar(by.get(f"M={M} ris-qr-v1", []), target),
                    ref_sql, ref_qv, ref_q1))
    return out


def table2_rows(rows: list[SweepRow]) -> list[tuple]:
    out = []
    for V, M, T_us, ref1, ref2 in TABLE2:
        for S, ref in ((1, ref1), (2, ref2)):
            r = next(r for r in rows if r.label == f"V={V} M={M} T={T_us}us S={S}")
            out.append((V, M, T_us, S, r.p_e, data_rate(r.p_e, M, us(T_us)) / S / 1e6, ref))
    return out


def _letters(prefix, table):
    return {f"{prefix}{k}": k for k in table}


PRESETS: dict[str, tuple] = {}
for _name, _k in _letters("fig3", FIG3).items():
    PRESETS[_name] = (fig3_specs, _k)
for _name, _k in _letters("fig5", FIG5).items():
    PRESETS[_name] = (fig5_specs, _k)
for _name, _k in _letters("fig6", FIG6).items():
    PRESETS[_name] = (fig6_specs, _k)
# Trajectory, deviation, final-posterior and heatmap ids share one run.
for _fig in ("fig7", "fig8", "fig9", "fig10"):
    for _name, _k in _letters(_fig, FIG7).items():
        PRESETS[_name] = (fig7_specs, _k)
PRESETS["table1"] = (table1_specs, None)
PRESETS["table2"] = (table2_specs, None)


def preset_specs(name: str, scale: float = 1.0, seed: int = 0) -> list[ExperimentSpec]:
    if name not in PRESETS:
        raise UnknownPreset(name)
    fn, key = PRESETS[name]
    return fn(scale=scale, seed=seed) if key is None else fn(key, scale=scale, seed=seed)


def reproduce(name: str, out_dir: Path, scale: float = 1.0, seed: int = 0, workers: int = 1,
              trials: int | None = None) -> list[Path]:
    """Run a preset and write its data files plus one manifest."""
    started = time.perf_counter()
    specs = preset_specs(name, scale, seed)
    if trials is not None:
        specs = [dataclasses.replace(s, trials=trials) for s in specs]
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: list[SweepRow] = []
    outputs: list[Path] = []
    for spec in specs:
        spec_rows = sweep(spec, workers=workers)
        rows += spec_rows
        if spec.record_trajectories:
            tag = spec.label.replace("=", "").replace(" ", "_")
            for row in spec_rows:
                outputs += write_trajectory_outputs(out_dir, row.records, spec.heatmap_bin,
                                                    prefix=f"{tag}_")
    outputs.insert(0, write_sweep_csv(out_dir / "pe_sweep.csv", rows))
    if name == "table1":
        outputs.append(_write_csv(out_dir / "table1.csv",
                                  ["target_pe", "V", "M", "n_sql_ris", "n_qr_v", "n_qr_v1",
                                   "reference_sql_ris", "reference_qr_v", "reference_qr_v1"],
                                  ([("" if v is None else v) for v in row]
                                   for row in table1_rows(rows))))
    elif name == "table2":
        outputs.append(_write_csv(out_dir / "table2.csv",
                                  ["V", "M", "T_us", "S", "p_e", "rate_per_mode_mbps",
                                   "reference_rate_per_mode_mbps"], table2_rows(rows)))
    write_manifest(out_dir, f"reproduce {name}", specs, outputs, rows, started,
                   extra={"preset": name, "scale": scale})
    return outputs
