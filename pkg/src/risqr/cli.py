"""Command-line front end: ``risqr <subcommand> [options]``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from pathlib import Path

from risqr.config import (EXIT_DEGENERATE, EXIT_OK, EXIT_OUTPUT, EXIT_UNKNOWN_PRESET,
                          ConfigError, InvalidValueError, parse_config)
from risqr.constellation import psk_constellation, ris_constellation
from risqr.harness import (_write_csv, estimate_pe, run_spec, write_manifest)
from risqr.presets import PRESETS, UnknownPreset, reproduce
from risqr.quantum import DegenerateEvidenceError

log = logging.getLogger("risqr")

# flag dest -> config key
SHORTCUTS = {"scheme": "scheme", "m": "m", "modes": "modes", "k": "k", "n0": "n0_total",
             "visibility": "visibility", "trials": "trials", "seed": "seed",
             "symbol_duration_us": "symbol_duration_us"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key-value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key (repeatable)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out-dir", default="out", help="output directory (default: out)")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--scale", "--desk-scale", dest="scale", type=float, default=1.0, help="trial-count multiplier")
    p.add_argument("-v", "--verbose", action="store_true")


def _physics(p: argparse.ArgumentParser, trials_default=None) -> None:
    p.add_argument("--scheme")
    p.add_argument("--m", type=int)
    p.add_argument("--modes", type=int)
    p.add_argument("--k", type=float)
    p.add_argument("--n0", type=float)
    p.add_argument("--visibility", type=float)
    p.add_argument("--trials", type=int, default=trials_default)
    p.add_argument("--symbol-duration-us", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="risqr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("constellation", help="dump a constellation as CSV")
    _common(c)
    c.add_argument("--modulation", choices=("ris", "psk"), default="ris")
    c.add_argument("--m", type=int, default=16)
    c.add_argument("--k", type=float, default=80)
    c.add_argument("--n0", type=float, default=1.0, help="per-mode source intensity")
    c.add_argument("--scaling", choices=("intensity", "amplitude"), default="intensity")

    b = sub.add_parser("baseline", help="heterodyne (SQL) symbol error probability")
    _common(b)
    b.add_argument("--modulation", choices=("ris", "psk"), default="ris")
    _physics(b)

    r = sub.add_parser("read", help="quantum-receiver run with trajectory dump")
    _common(r)
    _physics(r)

    s = sub.add_parser("sweep", help="P_e sweep from a config")
    _common(s)
    _physics(s)

    rp = sub.add_parser("reproduce", help="run a figure/table preset")
    _common(rp)
    rp.add_argument("preset", help=f"one of: {', '.join(sorted(PRESETS))}")
    rp.add_argument("--trials", type=int, help="fixed trial count (overrides --scale)")
    return parser


def _overrides(args) -> dict:
    out = {}
    for dest, key in SHORTCUTS.items():
        val = getattr(args, dest, None)
        if val is not None:
            out[key] = val
    for item in args.set:
        if "=" not in item:
            raise InvalidValueError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _scaled(spec, scale):
    if scale != 1.0:
        spec = dataclasses.replace(spec, trials=max(1, int(round(spec.trials * scale))))
    return spec


def cmd_constellation(args) -> int:
    started = time.perf_counter()
    if args.modulation == "ris":
        c = ris_constellation(args.m, args.k, args.n0 ** 0.5, args.scaling)
    else:
        c = psk_constellation(args.m, (args.k * args.n0) ** 0.5)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = ["index", "ring", "phase_slot", "re", "im", "abs", "arg"]
    path = _write_csv(out / "constellation.csv", header, c.rows())
    sys.stdout.write(path.read_text(encoding="utf-8"))
    write_manifest(out, "constellation", [], [path], started=started,
                   extra={"constellation": {"modulation": args.modulation, "M": args.m,
                                            "K": args.k, "n0": args.n0,
                                            "scaling": args.scaling}})
    return EXIT_OK


def cmd_baseline(args) -> int:
    started = time.perf_counter()
    ov = _overrides(args)
    ov["scheme"] = "ris-sql" if args.modulation == "ris" else "psk-sql"
    spec = _scaled(parse_config(args.config, ov), args.scale)
    row = estimate_pe(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = ["M", "scheme", "n0", "xi_eta", "trials", "pe", "ci_low", "ci_high"]
    path = _write_csv(out / "baseline.csv", header,
                      [(row.M, args.modulation, row.n0, row.xi_eta, row.trials, row.p_e,
                        row.ci_low, row.ci_high)])
    sys.stdout.write(path.read_text(encoding="utf-8"))
    write_manifest(out, "baseline", [spec], [path], [row], started)
    return EXIT_OK


def cmd_read(args) -> int:
    ov = _overrides(args)
    ov.setdefault("trials", 1)
    ov["scheme"] = "ris-quantum"
    ov["record_trajectories"] = True
    spec = _scaled(parse_config(args.config, ov), args.scale)
    if spec.sweep_axis() is not None:
        spec = dataclasses.replace(spec, n0_grid=(), k_grid=(), t_grid=(), s_grid=())
    rows = run_spec(spec, Path(args.out_dir), workers=args.workers, command="read")
    _report(rows)
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = _scaled(parse_config(args.config, _overrides(args)), args.scale)
    rows = run_spec(spec, Path(args.out_dir), workers=args.workers, command="sweep")
    _report(rows)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    outputs = reproduce(args.preset, Path(args.out_dir), scale=args.scale,
                        seed=args.seed or 0, workers=args.workers, trials=args.trials)
    for p in outputs:
        print(p)
    return EXIT_OK


def _report(rows) -> None:
    for r in rows:
        print(f"{r.scheme} M={r.M} S={r.S} K={r.K:g} n0={r.n0:g} T={r.T_us:g}us "
              f"p_e={r.p_e:.4g} [{r.ci_low:.4g}, {r.ci_high:.4g}] steps={r.mean_steps:.1f}")


COMMANDS = {"constellation": cmd_constellation, "baseline": cmd_baseline, "read": cmd_read,
            "sweep": cmd_sweep, "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"risqr: {exc}", file=sys.stderr)
        return exc.exit_code
    except UnknownPreset as exc:
        print(f"risqr: unknown preset {exc.args[0]!r}; known: {', '.join(sorted(PRESETS))}",
              file=sys.stderr)
        return EXIT_UNKNOWN_PRESET
    except DegenerateEvidenceError as exc:
        print(f"risqr: degenerate evidence: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"risqr: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_OUTPUT


if __name__ == "__main__":
    sys.exit(main())
