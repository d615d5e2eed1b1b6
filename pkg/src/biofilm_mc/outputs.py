"""CSV / PGM artifact writers.

All numeric CSV cells use a fixed ``%.12e`` format so repeated runs with the
same seed produce byte-identical files.  Analytical series may contain small
negative truncation ringing; export clips those samples at zero and records
the clip count in a leading comment, keeping the raw values auditable.
"""

from __future__ import annotations

import numpy as np

from .compare import ComparisonReport
from .gfc import ConcentrationSeries, GridField
from .modes import ModeTable

PGM_MAX = 65535


def _fmt(value: float) -> str:
    return f"{value:.12e}"


def write_series_csv(path: str, series: ConcentrationSeries) -> int:
    """Write one concentration series; returns the number of clipped samples."""
    clipped = int(np.count_nonzero(series.values < 0.0))
    values = np.maximum(series.values, 0.0)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"# source: {series.source}; receiver: {series.receiver}\n")
        handle.write(f"# clipped_negative_samples: {clipped}\n")
        if series.stderr is None:
            handle.write("t_s,concentration_per_m2\n")
            for t, v in zip(series.times, values):
                handle.write(f"{_fmt(t)},{_fmt(v)}\n")
        else:
            handle.write("t_s,mean_concentration_per_m2,stderr_per_m2\n")
            for t, v, e in zip(series.times, values, series.stderr):
                handle.write(f"{_fmt(t)},{_fmt(v)},{_fmt(e)}\n")
    return clipped


def write_modes_csv(path: str, table: ModeTable) -> None:
    rho_c = table.params.rho_c
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("n,m,zeta,lambda_per_m,lambda_rho_c,norm_m2,L_n\n")
        for mode in table.modes:
            handle.write(
                f"{mode.n},{mode.m},{_fmt(mode.zeta)},{_fmt(mode.lam)},"
                f"{_fmt(mode.lam * rho_c)},{_fmt(mode.norm)},{_fmt(mode.weight)}\n"
            )


def write_field_csv(path: str, field: GridField) -> None:
    """Grid values with a header row of x-coordinates and one row per y."""
    xs = field.x_centers
    ys = field.y_centers
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("y_m," + ",".join(_fmt(x) for x in xs) + "\n")
        for iy in range(field.ny):
            row = ",".join(_fmt(field.values[ix, iy]) for ix in range(field.nx))
            handle.write(f"{_fmt(ys[iy])},{row}\n")


def write_field_pgm(path: str, field: GridField) -> None:
    """16-bit ASCII PGM normalized to the frame maximum, plus a scale sidecar.

    Raster rows run from +y (top) to -y (bottom), columns from -x to +x; the
    sidecar records the concentration corresponding to full scale.
    """
    vmax = float(field.values.max(initial=0.0))
    scale = PGM_MAX / vmax if vmax > 0.0 else 0.0
    levels = np.rint(np.maximum(field.values, 0.0) * scale).astype(int)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"P2\n{field.nx} {field.ny}\n{PGM_MAX}\n")
        for iy in range(field.ny - 1, -1, -1):
            handle.write(" ".join(str(levels[ix, iy]) for ix in range(field.nx)) + "\n")
    with open(path + ".txt", "w", encoding="utf-8") as handle:
        handle.write(f"t_s = {_fmt(field.t)}\n")
        handle.write(f"pixel_m = {_fmt(field.pixel)}\n")
        handle.write(f"value_at_full_scale = {_fmt(vmax)}\n")
        handle.write(f"pgm_max_level = {PGM_MAX}\n")
        handle.write("raster = rows +y to -y, columns -x to +x\n")


def write_compare_csv(path: str, reports: list[tuple[str, ComparisonReport]]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(
            "receiver,peak_rel_err,peak_time_offset_s,nrmse,"
            "n_samples_compared,within_ci_fraction,resampled\n"
        )
        for label, rep in reports:
            handle.write(
                f"{label},{_fmt(rep.peak_rel_err)},{_fmt(rep.peak_time_offset)},"
                f"{_fmt(rep.nrmse)},{rep.n_samples_compared},"
                f"{_fmt(rep.within_ci_fraction)},{int(rep.resampled)}\n"
            )


def write_manifest(
    path: str,
    *,
    subcommand: str,
    config_hash: str,
    seed: int,
    n_max: int,
    m_max: int,
    version: str,
    wall_time_s: float,
) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"tool_version = {version}\n")
        handle.write(f"subcommand = {subcommand}\n")
        handle.write(f"config_sha256 = {config_hash}\n")
        handle.write(f"seed = {seed}\n")
        handle.write(f"truncation_n_max = {n_max}\n")
        handle.write(f"truncation_m_max = {m_max}\n")
        handle.write(f"wall_time_s = {wall_time_s:.3f}\n")
