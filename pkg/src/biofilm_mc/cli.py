"""Command-line entry point.

Subcommands::

    modes    dump the eigenmode table as CSV
    impulse  analytical impulse response at each configured receiver point
    pbs      Monte Carlo receiver series (optionally spatial fields)
    compare  analytical vs Monte Carlo per receiver; exit 2 on threshold breach
    field    analytical spatial concentration maps (CSV + 16-bit PGM)

Every run writes a ``manifest.txt`` with the config hash, seed, truncation,
tool version and wall time into the output directory.  Exit codes: 0 success,
1 validation error, 2 threshold violation (compare only).
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import __version__
from .compare import compare_series
from .config import ConfigError, RunConfig, parse_config, parse_config_text
from .gfc import gfc_field, gfc_time_series, rx_disc_average_series
from .modes import build_mode_table
from .outputs import (
    write_compare_csv,
    write_field_csv,
    write_field_pgm,
    write_manifest,
    write_modes_csv,
    write_series_csv,
)
from .pbs import default_threads, pbs_field, run_ensemble

_PRESET_FLAG_MAP = {"paper": "paper", "desk": "default"}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a key = value config file")
    common.add_argument("--out", help="output directory (overrides config out_dir)")
    common.add_argument("--seed", type=int, help="RNG seed (overrides config seed)")
    common.add_argument("--preset", choices=sorted(_PRESET_FLAG_MAP),
                        help="parameter preset: paper scale or desk scale")
    common.add_argument("--threads", type=int, default=None,
                        help="worker count for Monte Carlo realizations "
                             "(affects speed only, never results; "
                             "falls back to BIOFILM_MC_THREADS)")

    parser = argparse.ArgumentParser(prog="biofilm-mc", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("modes", parents=[common], help="dump the eigenmode table")
    sub.add_parser("impulse", parents=[common],
                   help="analytical impulse response per receiver")
    pbs_cmd = sub.add_parser("pbs", parents=[common], help="Monte Carlo receiver series")
    pbs_cmd.add_argument("--field", action="store_true",
                         help="also write spatial histograms at the configured snapshot times")
    sub.add_parser("compare", parents=[common],
                   help="analytical vs Monte Carlo comparison per receiver")
    field_cmd = sub.add_parser("field", parents=[common],
                               help="analytical spatial concentration maps")
    field_cmd.add_argument("--counts", action="store_true",
                           help="scale values by pixel^2 * n_molecules (count-style maps)")
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    preset = _PRESET_FLAG_MAP[args.preset] if args.preset else None
    if args.config:
        cfg = parse_config(args.config, preset=preset)
    else:
        cfg = parse_config_text("", preset=preset)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        cfg = _replace_cfg(cfg, seed=args.seed)
    if args.out:
        cfg = _replace_cfg(cfg, out_dir=args.out)
    return cfg


def _replace_cfg(cfg: RunConfig, **changes) -> RunConfig:
    from dataclasses import replace

    return replace(cfg, **changes)


def _rx_label(cfg: RunConfig, index: int) -> str:
    rx = cfg.receivers[index]
    return f"rx{index}_{rx.rho * 1e6:g}um"


def _sample_times(cfg: RunConfig):
    return cfg.pbs_config().sample_times


def _run(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    threads = args.threads if args.threads is not None else default_threads()
    try:
        os.makedirs(cfg.out_dir, exist_ok=True)
        probe = os.path.join(cfg.out_dir, ".write_probe")
        with open(probe, "w", encoding="utf-8"):
            pass
        os.remove(probe)
    except OSError as exc:
        raise ConfigError(f"output directory {cfg.out_dir!r} is not writable: {exc}")

    started = time.perf_counter()
    exit_code = 0

    if args.subcommand == "modes":
        table = build_mode_table(cfg.channel, cfg.n_max, cfg.m_max)
        write_modes_csv(os.path.join(cfg.out_dir, "modes.csv"), table)

    elif args.subcommand == "impulse":
        table = build_mode_table(cfg.channel, cfg.n_max, cfg.m_max)
        times = _sample_times(cfg)
        for i, rx in enumerate(cfg.receivers):
            series = gfc_time_series(table, rx.rho, rx.theta, times)
            write_series_csv(
                os.path.join(cfg.out_dir, f"impulse_{_rx_label(cfg, i)}.csv"), series
            )

    elif args.subcommand == "pbs":
        pbs_cfg = cfg.pbs_config()
        series_list = run_ensemble(pbs_cfg, list(cfg.receivers), threads=threads)
        for i, series in enumerate(series_list):
            write_series_csv(
                os.path.join(cfg.out_dir, f"pbs_{_rx_label(cfg, i)}.csv"), series
            )
        if args.field:
            for fld in pbs_field(pbs_cfg, cfg.field_snapshot_times, cfg.field_pixel,
                                 cfg.field_extent, threads=threads):
                stem = os.path.join(cfg.out_dir, f"field_pbs_t{fld.t:g}s")
                write_field_csv(stem + ".csv", fld)
                write_field_pgm(stem + ".pgm", fld)

    elif args.subcommand == "field":
        table = build_mode_table(cfg.channel, cfg.n_max, cfg.m_max)
        for t in cfg.field_snapshot_times:
            fld = gfc_field(table, t, cfg.field_pixel, cfg.field_extent)
            if args.counts:
                fld.values = fld.values * (cfg.field_pixel**2 * cfg.n_molecules)
            stem = os.path.join(cfg.out_dir, f"field_gfc_t{t:g}s")
            write_field_csv(stem + ".csv", fld)
            write_field_pgm(stem + ".pgm", fld)

    elif args.subcommand == "compare":
        table = build_mode_table(cfg.channel, cfg.n_max, cfg.m_max)
        times = _sample_times(cfg)
        pbs_series = run_ensemble(cfg.pbs_config(), list(cfg.receivers), threads=threads)
        reports = []
        for i, rx in enumerate(cfg.receivers):
            clip = rx.rho + rx.radius > cfg.channel.rho_c
            reference = rx_disc_average_series(
                table, rx.rho, rx.theta, rx.radius, times, clip=clip
            )
            reports.append((_rx_label(cfg, i), compare_series(reference, pbs_series[i])))
        write_compare_csv(os.path.join(cfg.out_dir, "compare_report.csv"), reports)
        summary_lines = []
        for label, rep in reports:
            bad = rep.violates(cfg.compare_nrmse_max, cfg.compare_peak_rel_err_max)
            if bad:
                exit_code = 2
            summary_lines.append(
                f"{label}: nrmse={rep.nrmse:.4f} peak_rel_err={rep.peak_rel_err:.4f} "
                f"peak_dt={rep.peak_time_offset:+.4f}s ci_frac={rep.within_ci_fraction:.3f} "
                f"[{'FAIL' if bad else 'ok'}]"
            )
        summary = "\n".join(summary_lines) + "\n"
        with open(os.path.join(cfg.out_dir, "compare_summary.txt"), "w",
                  encoding="utf-8") as handle:
            handle.write(summary)
        sys.stdout.write(summary)

    write_manifest(
        os.path.join(cfg.out_dir, "manifest.txt"),
        subcommand=args.subcommand,
        config_hash=cfg.config_hash(),
        seed=cfg.seed,
        n_max=cfg.n_max,
        m_max=cfg.m_max,
        version=__version__,
        wall_time_s=time.perf_counter() - started,
    )
    return exit_code


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return _run(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
