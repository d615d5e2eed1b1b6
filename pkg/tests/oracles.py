"""Independent high-precision oracles used to derive frozen expected values.

Everything here is deliberately implemented without scipy so the test suite
checks the production code against a second, unrelated route:

* ``series_j``: J_nu by its power series in 80-digit mpmath arithmetic,
  J_nu(x) = sum_k (-1)^k (x/2)^(nu+2k) / (k! * Gamma(nu+k+1)).
* ``series_j_prime``: derivative via the recurrence on the series evaluator.
* ``bisect_root``: plain bisection to 1e-13 on a bracketing interval.
* ``free_space_concentration``: 2D unbounded diffusion kernel with first-order
  degradation, 1/(4 pi D t) * exp(-d^2/(4 D t)) * exp(-k_d t).
"""

from __future__ import annotations

import mpmath as mp

mp.mp.dps = 80


def series_j(nu: float, x: float) -> float:
    """Power-series J_nu(x), evaluated in high precision (x up to ~60)."""
    nu_mp = mp.mpf(nu)
    x_mp = mp.mpf(x)
    if x_mp == 0:
        return 1.0 if nu == 0 else 0.0
    half = x_mp / 2
    total = mp.mpf(0)
    term_base = half**nu_mp
    for k in range(0, 400):
        term = (-1) ** k * half ** (2 * k) / (mp.factorial(k) * mp.gamma(nu_mp + k + 1))
        total += term
        if k > 10 and abs(term) < mp.mpf(10) ** (-70) * (abs(total) + 1):
            break
    return float(term_base * total)


def series_j_prime(nu: float, x: float) -> float:
    """J'_nu(x) from the series evaluator via the standard recurrence."""
    if nu == 0.0:
        return -series_j(1.0, x)
    return 0.5 * (series_j(nu - 1.0, x) - series_j(nu + 1.0, x))


def bisect_root(func, lo: float, hi: float, tol: float = 1e-13) -> float:
    """Bisection root of ``func`` on [lo, hi]; requires a sign change."""
    flo, fhi = func(lo), func(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fmid = func(mid)
        if fmid == 0.0:
            return mid
        if flo * fmid < 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def j_prime_zeros(nu: float, count: int, scan_step: float = 0.05) -> list[float]:
    """First ``count`` strictly positive zeros of J'_nu by scan + bisection."""
    func = lambda x: series_j_prime(nu, x)
    zeros: list[float] = []
    lo = 1e-6
    flo = func(lo)
    while len(zeros) < count:
        hi = lo + scan_step
        fhi = func(hi)
        if flo * fhi < 0.0:
            zeros.append(bisect_root(func, lo, hi))
        lo, flo = hi, fhi
        if lo > 60.0:
            raise RuntimeError("scan bound exceeded")
    return zeros


def free_space_concentration(d: float, diffusivity: float, k_d: float, t: float) -> float:
    """Unbounded 2D impulse response at distance d, with degradation."""
    import math

    return (
        1.0 / (4.0 * math.pi * diffusivity * t)
        * math.exp(-d * d / (4.0 * diffusivity * t))
        * math.exp(-k_d * t)
    )
