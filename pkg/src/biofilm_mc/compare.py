"""Quantitative comparison of analytical and simulated outputs.

The reference series is by convention the analytical one; NRMSE is normalized
by the reference peak.  Peak times use parabolic refinement through the three
samples around the discrete maximum so the metric is not quantized by the
sampling step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .gfc import ConcentrationSeries, eval_polar_grid
from .modes import ChannelParams, ModeTable, build_mode_table
from . import gfc

__all__ = [
    "ComparisonReport",
    "compare_series",
    "MassCheckRow",
    "mass_check_gfc",
    "AnisotropyRow",
    "anisotropy_effect",
]


@dataclass(frozen=True)
class ComparisonReport:
    """Summary metrics of a test series against a reference series."""

    peak_rel_err: float
    peak_time_offset: float
    nrmse: float
    n_samples_compared: int
    within_ci_fraction: float
    resampled: bool = False

    def violates(self, nrmse_max: float, peak_rel_err_max: float) -> bool:
        return self.nrmse > nrmse_max or self.peak_rel_err > peak_rel_err_max


def compare_series(
    reference: ConcentrationSeries, test: ConcentrationSeries
) -> ComparisonReport:
    """Compare a test series (e.g. PBS) against a reference (analytical).

    If the time grids differ, the test series is linearly interpolated onto
    the reference grid and the report is flagged as resampled.
    within_ci_fraction is the fraction of samples where the reference lies in
    the test's +/- 3*stderr band (exact-match fraction when no stderr exists).
    """
    if reference.times.size == 0 or test.times.size == 0:
        raise ValueError("cannot compare empty series")

    resampled = not (
        reference.times.shape == test.times.shape
        and np.array_equal(reference.times, test.times)
    )
    if resampled:
        test_vals = np.interp(reference.times, test.times, test.values)
        test_err = (
            np.interp(reference.times, test.times, test.stderr)
            if test.stderr is not None
            else None
        )
    else:
        test_vals = test.values
        test_err = test.stderr

    ref_peak_t, ref_peak_v = reference.peak()
    test_peak_t, test_peak_v = ConcentrationSeries(
        times=reference.times, values=test_vals, source=test.source
    ).peak()
    if ref_peak_v == 0.0:
        raise ValueError("reference series has zero peak; metrics undefined")

    rmse = math.sqrt(float(np.mean((test_vals - reference.values) ** 2)))
    if test_err is not None:
        inside = np.abs(reference.values - test_vals) <= 3.0 * test_err
    else:
        inside = reference.values == test_vals
    return ComparisonReport(
        peak_rel_err=abs(test_peak_v - ref_peak_v) / ref_peak_v,
        peak_time_offset=test_peak_t - ref_peak_t,
        nrmse=rmse / ref_peak_v,
        n_samples_compared=int(reference.times.size),
        within_ci_fraction=float(np.mean(inside)),
        resampled=resampled,
    )


class MassCheckRow(NamedTuple):
    t: float
    mass: float
    expected: float
    rel_err: float


def mass_check_gfc(
    table: ModeTable,
    t_list,
    *,
    n_radial: int = 256,
    n_angular: int = 64,
) -> list[MassCheckRow]:
    """Total mass in the disk versus the exact survival law exp(-k_d*(t - t0)).

    Integrates the series by Gauss-Legendre in rho (weight rho) times a uniform
    angular rule; certifies the decay exponent, the source coefficients and the
    constant mode in one number per time.
    """
    p = table.params
    nodes, weights = np.polynomial.legendre.leggauss(n_radial)
    rho = 0.5 * (nodes + 1.0) * p.rho_c
    w_rho = 0.5 * weights * p.rho_c * rho
    theta = (np.arange(n_angular) + 0.5) * (2.0 * math.pi / n_angular)
    w_theta = 2.0 * math.pi / n_angular

    t_arr = np.atleast_1d(np.asarray(t_list, dtype=float))
    vals = eval_polar_grid(table, rho, theta, t_arr)  # (nt, nr, na)
    masses = np.einsum("tra,r->t", vals, w_rho) * w_theta

    rows: list[MassCheckRow] = []
    for t, mass in zip(t_arr, masses):
        expected = math.exp(-p.k_d * (t - p.t0)) if t >= p.t0 else 0.0
        rel = abs(mass - expected) / expected if expected > 0 else abs(mass)
        rows.append(MassCheckRow(t=float(t), mass=float(mass),
                                 expected=expected, rel_err=float(rel)))
    return rows


class AnisotropyRow(NamedTuple):
    tx_rho: float
    rx_rho: float
    peak_iso: float
    peak_aniso: float
    ratio: float


def anisotropy_effect(
    params_iso: ChannelParams,
    params_aniso: ChannelParams,
    tx_rho_list,
    rx_rho_list,
    *,
    n_max: int = 8,
    m_max: int = 40,
    t_grid=None,
) -> list[AnisotropyRow]:
    """Peak ratios anisotropic/isotropic for each transmitter/receiver pairing.

    Receivers sit at theta = 0 on the transmitter ray.  For a centered
    transmitter the n > 0 terms vanish identically, so the ratio is exactly 1.
    """
    if t_grid is None:
        t_grid = np.linspace(0.02, 10.0, 1500)
    rows: list[AnisotropyRow] = []
    for tx_rho in tx_rho_list:
        iso = build_mode_table(replace(params_iso, tx_rho=tx_rho), n_max, m_max)
        aniso = build_mode_table(replace(params_aniso, tx_rho=tx_rho), n_max, m_max)
        for rx_rho in rx_rho_list:
            _, peak_iso = gfc.gfc_time_series(iso, rx_rho, 0.0, t_grid).peak()
            _, peak_aniso = gfc.gfc_time_series(aniso, rx_rho, 0.0, t_grid).peak()
            rows.append(AnisotropyRow(
                tx_rho=tx_rho, rx_rho=rx_rho, peak_iso=peak_iso,
                peak_aniso=peak_aniso, ratio=peak_aniso / peak_iso,
            ))
    return rows
