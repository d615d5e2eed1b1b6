"""Real-order Bessel functions of the first kind and Robin-condition root finding.

The radial eigenvalue problem on a disk of radius ``rho_c`` with the boundary
condition ``D_rho * dR/drho = -k_f * R`` at the rim leads to the characteristic
equation

    g(lam) = D_rho * lam * J'_zeta(lam * rho_c) + k_f * J_zeta(lam * rho_c) = 0,

whose strictly positive roots are located here by a fine scan plus bracketed
refinement.  ``lam = 0`` is never returned; the constant (zero) mode that exists
for ``k_f = 0`` is the caller's responsibility.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv


class RootBracketingError(RuntimeError):
    """Raised when the requested number of characteristic roots cannot be bracketed."""


def bessel_j(nu: float, x):
    """J_nu(x) for real order nu >= 0 and argument x >= 0.

    Accepts scalars or arrays for ``x``; relative accuracy is at machine level
    throughout the operating envelope (x <= 200, nu <= 20).
    """
    if not math.isfinite(nu) or nu < 0.0:
        raise ValueError(f"Bessel order must be finite and non-negative, got nu={nu}")
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)):
        raise ValueError("Bessel argument must be finite")
    if np.any(x_arr < 0.0):
        raise ValueError("Bessel argument must be non-negative")
    out = jv(nu, x_arr)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(f"J_{nu} evaluation produced non-finite values")
    if np.isscalar(x) or x_arr.ndim == 0:
        return float(out)
    return out


def bessel_j_prime(nu: float, x):
    """First derivative J'_nu(x), via J'_0 = -J_1 and 2 J'_nu = J_{nu-1} - J_{nu+1}.

    For 0 < nu < 1 the derivative diverges at x = 0; the one-sided limit
    (+inf) is returned with a RuntimeWarning.
    """
    if not math.isfinite(nu) or nu < 0.0:
        raise ValueError(f"Bessel order must be finite and non-negative, got nu={nu}")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0.0) or not np.all(np.isfinite(x_arr)):
        raise ValueError("Bessel argument must be finite and non-negative")

    if nu == 0.0:
        out = -jv(1.0, x_arr)
    elif nu >= 1.0:
        out = 0.5 * (jv(nu - 1.0, x_arr) - jv(nu + 1.0, x_arr))
    else:
        # 0 < nu < 1: the recurrence form holds for x > 0; x = 0 diverges.
        out = 0.5 * (jv(nu - 1.0, x_arr) - jv(nu + 1.0, x_arr))
        at_zero = x_arr == 0.0
        if np.any(at_zero):
            warnings.warn(
                f"J'_{nu}(0) diverges for 0 < nu < 1; returning the one-sided limit +inf",
                RuntimeWarning,
                stacklevel=2,
            )
            out = np.where(at_zero, np.inf, out)
    if np.isscalar(x) or x_arr.ndim == 0:
        return float(out)
    return out


def _characteristic(lam: float, zeta: float, rho_c: float, d_rho: float, k_f: float) -> float:
    x = lam * rho_c
    return d_rho * lam * bessel_j_prime(zeta, x) + k_f * bessel_j(zeta, x)


def find_robin_roots(
    zeta: float,
    rho_c: float,
    d_rho: float,
    k_f: float,
    m_max: int,
) -> list[float]:
    """Smallest ``m_max`` strictly positive roots of the Robin characteristic equation.

    Roots are scanned in lam*rho_c units with step pi/2 (finer than the
    asymptotic spacing pi, so none are skipped in the operating envelope) and
    refined to |delta(lam*rho_c)| <= 1e-10.  Ascending order is guaranteed and
    a post-pass asserts that g alternates sign between consecutive roots.
    """
    if rho_c <= 0.0 or d_rho <= 0.0:
        raise ValueError("rho_c and d_rho must be positive")
    if k_f < 0.0:
        raise ValueError("k_f must be non-negative")
    if m_max < 1:
        raise ValueError("m_max must be >= 1")

    g = lambda lam: _characteristic(lam, zeta, rho_c, d_rho, k_f)
    scan_step = 0.5 * math.pi / rho_c
    scan_bound = (m_max * math.pi + 10.0 * math.pi) / rho_c
    xtol = 1e-10 / rho_c

    roots: list[float] = []
    a = 1e-9 / rho_c  # skip lam = 0 (handled by the caller for k_f = 0)
    ga = g(a)
    while len(roots) < m_max and a < scan_bound:
        b = a + scan_step
        gb = g(b)
        if gb == 0.0:
            roots.append(b)
            # restart the scan just past the root
            a = b + xtol
            ga = g(a)
            continue
        if ga * gb < 0.0:
            root = brentq(g, a, b, xtol=xtol, rtol=8.9e-16)
            roots.append(root)
        a, ga = b, gb

    if len(roots) < m_max:
        raise RootBracketingError(
            f"bracketed only {len(roots)} of {m_max} roots for zeta={zeta} "
            f"within lam*rho_c <= {scan_bound * rho_c:.3f}"
        )

    _assert_sign_alternation(g, roots, zeta, m_max)
    return roots


def _assert_sign_alternation(g, roots: list[float], zeta: float, m_max: int) -> None:
    if len(roots) < 2:
        return
    signs = []
    for r0, r1 in zip(roots, roots[1:]):
        val = g(0.5 * (r0 + r1))
        if val == 0.0:
            raise RootBracketingError(
                f"degenerate midpoint between roots for zeta={zeta}, m_max={m_max}"
            )
        signs.append(math.copysign(1.0, val))
    for s0, s1 in zip(signs, signs[1:]):
        if s0 == s1:
            raise RootBracketingError(
                f"missed or duplicated root detected (no sign alternation) "
                f"for zeta={zeta}, m_max={m_max}"
            )
