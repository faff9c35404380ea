"""Command-line interface: ``qndsim {simulate,fit,sweep,presets}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 fit failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import warnings

import numpy as np

from .analysis import fit_flip_rates, fit_records, sweep_hybridization
from .config import BOTH, load_config
from .errors import ConfigError, FitFailure, NumericalFailure
from .protocol import ProtocolSpec, run_qnd
from .reservoir import PRESET_NAMES, describe_preset, preset
from .spin_system import SpinSystemSpec, SystemKind

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_FIT = 0, 2, 3, 4
NUM_FMT = "%.11e"

_SUFFIX = {"up": "_up", "down": "_down"}


def _fmt(x) -> str:
    return NUM_FMT % x


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _suffixed(name, tag):
    root, ext = os.path.splitext(name)
    return f"{root}{_SUFFIX[tag]}{ext}" if tag else name


def write_trajectory(path, record):
    rows = ([_fmt(t), *map(_fmt, rho)] for t, rho in zip(record.times, record.states))
    _write_csv(path, ["time_s", *record.basis], rows)


def write_cycles(path, record):
    rows = (
        [str(k + 1), _fmt(t), _fmt(p), *map(_fmt, rho)]
        for k, (t, p, rho) in enumerate(zip(record.cycle_times, record.p_up_series, record.cycle_end_states))
    )
    _write_csv(path, ["cycle", "time_s", "p_up", *record.basis], rows)


def read_cycles(path):
    """``(time_s, p_up)`` arrays from a cycle table written by ``simulate``."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"time_s", "p_up"} <= set(reader.fieldnames):
                raise ConfigError("cycle table needs time_s and p_up columns", str(path))
            rows = [(float(r["time_s"]), float(r["p_up"])) for r in reader]
    except OSError as exc:
        raise ConfigError(str(exc), str(path)) from exc
    except ValueError as exc:
        raise ConfigError(f"bad number: {exc}", str(path)) from exc
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def _fit_block(fit) -> str:
    lines = [
        f"gamma_up={_fmt(fit.gamma_up)}",
        f"gamma_down={_fmt(fit.gamma_down)}",
        f"equilibrium_p_up={_fmt(fit.equilibrium_p_up)}",
        f"residual_rms={_fmt(fit.residual_rms)}",
        f"pinned={','.join(fit.pinned)}",
    ]
    return "\n".join(lines) + "\n"


def _run(cfg, initial):
    p = cfg.protocol
    spec = ProtocolSpec(p.segments, p.cycles, p.cr_schedule, initial, p.sample_points, p.trace_cycles)
    return run_qnd(cfg.system, cfg.rates, spec)


def _run_both(cfg):
    up = _run(cfg, np.eye(6)[2])
    down = _run(cfg, np.eye(6)[3])
    return up, down


def _config(args):
    if not args.config:
        raise ConfigError("--config is required for this subcommand")
    return load_config(args.config, args.set or ())


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if cfg.protocol is None:
        raise ConfigError("simulate needs [system], [rates.<label>] and [protocol]")
    os.makedirs(args.out, exist_ok=True)
    out = cfg.output
    if isinstance(cfg.initial, str) and cfg.initial == BOTH:
        records = dict(zip(("up", "down"), _run_both(cfg)))
        for tag, rec in records.items():
            write_trajectory(os.path.join(args.out, _suffixed(out["trajectory"], tag)), rec)
            write_cycles(os.path.join(args.out, _suffixed(out["cycles"], tag)), rec)
        fit = fit_records(records["up"], records["down"])
        block = _fit_block(fit)
        with open(os.path.join(args.out, out["summary"]), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(block)
        sys.stdout.write(block)
    else:
        rec = _run(cfg, cfg.initial)
        write_trajectory(os.path.join(args.out, out["trajectory"]), rec)
        write_cycles(os.path.join(args.out, out["cycles"]), rec)
        sys.stdout.write(f"final_p_up={_fmt(rec.p_up_series[-1])}\n")
    return EXIT_OK


def cmd_fit(args) -> int:
    if args.up or args.down:
        if not (args.up and args.down):
            raise ConfigError("--up and --down must be given together")
        fit = fit_flip_rates(read_cycles(args.up), read_cycles(args.down))
    else:
        cfg = _config(args)
        if cfg.protocol is None:
            raise ConfigError("fit needs [system], [rates.<label>] and [protocol] or --up/--down tables")
        fit = fit_records(*_run_both(cfg))
    sys.stdout.write(_fit_block(fit))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    sw = cfg.sweep
    if sw is None:
        raise ConfigError("sweep needs a [sweep] section")
    base = SpinSystemSpec(SystemKind.ANISOTROPIC_EN, 1.0, 0.5, sw.coupling)
    res = sweep_hybridization(base, sw.b0, sw.d_xz, sw.gamma_e, sw.gamma_n, jobs=args.jobs)
    os.makedirs(args.out, exist_ok=True)
    rows = (
        [_fmt(b), _fmt(d), _fmt(res.m_down[i, j]), _fmt(res.m_up[i, j])]
        for i, b in enumerate(res.b0)
        for j, d in enumerate(res.d_xz)
    )
    path = os.path.join(args.out, "sweep.csv")
    _write_csv(path, ["b0_T", "d_xz_hz", "m_down", "m_up"], rows)
    sys.stdout.write(f"wrote {path}\n")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in PRESET_NAMES:
        try:
            p = preset(name)
        except ConfigError:
            sys.stdout.write(f"{name}\t{describe_preset(name)}\trates supplied by configuration\n")
            continue
        r = p.rates
        rates = (
            f"gin_up={r.gin_up:g} gout_up={r.gout_up:g} gin_down={r.gin_down:g} "
            f"gout_down={r.gout_down:g} gamma_t1={r.gamma_t1:g} gamma_ff={r.gamma_ff:g}"
        )
        sys.stdout.write(f"{name}\t{p.description}\t{rates}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qndsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key, e.g. protocol.cycles=10")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    common(sub.add_parser("simulate", help="run a protocol and write trajectory and cycle tables"))
    p_fit = sub.add_parser("fit", help="fit flip rates from a config or two cycle tables")
    common(p_fit)
    p_fit.add_argument("--up", help="cycle table starting from the up data state")
    p_fit.add_argument("--down", help="cycle table starting from the down data state")
    common(sub.add_parser("sweep", help="hybridization map over field and dipolar coupling"))
    sub.add_parser("presets", help="list named rate scenarios")
    return parser


_COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "sweep": cmd_sweep, "presets": cmd_presets}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        sys.stderr.write("error: --jobs must be >= 1\n")
        return EXIT_CONFIG
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return _COMMANDS[args.command](args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except NumericalFailure as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except FitFailure as exc:
        sys.stderr.write(f"fit failure: {exc}\n{exc.diagnostics}\n")
        return EXIT_FIT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
