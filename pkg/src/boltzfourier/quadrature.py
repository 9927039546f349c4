"""Dyadic panel quadrature for integrands singular at the origin.

The angular kernel behaves like theta^-2 * (log(2/theta))^(2/s-1) near
theta = 0, so every integral in this package is taken on panels graded
geometrically toward 0 (edges upper * 2^-j) with a fixed-order Gauss rule
per panel. On each such panel the integrand is analytic and the panel sums
decay geometrically, which gives a reliable tail estimate; panels are
added past the configured minimum until the estimated tail drops below
the requested relative tolerance.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import NonConvergenceError

DEFAULT_ORDER = 16
DEFAULT_MIN_PANELS = 40
DEFAULT_MAX_PANELS = 4000
DEFAULT_RTOL = 1e-11

# panel-sum ratio above which geometric extrapolation of the tail is
# considered unreliable and refinement continues
_RATIO_CAP = 0.995


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_integral(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                   order: int = DEFAULT_ORDER) -> float:
    """Gauss-Legendre integral of f over [a, b]; f must accept arrays."""
    nodes, weights = gauss_legendre(order)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.dot(weights, f(mid + half * nodes)))


def graded_integral(f: Callable[[np.ndarray], np.ndarray], upper: float, *,
                    lower: float = 0.0,
                    order: int = DEFAULT_ORDER,
                    min_panels: int = DEFAULT_MIN_PANELS,
                    max_panels: int = DEFAULT_MAX_PANELS,
                    rtol: float = DEFAULT_RTOL) -> float:
    """Integral of f over (lower, upper] with panels graded toward 0.

    With lower > 0 the dyadic panels are clipped at the lower limit and the
    result is exact panel-wise Gauss (no tail to estimate). With lower == 0
    panels are appended until the geometric tail estimate is below
    rtol * |total|; if that never happens within max_panels a
    NonConvergenceError carrying the partial value is raised.
    """
    if upper <= lower:
        return 0.0
    total = 0.0
    hi = upper
    prev_abs = np.inf
    last_abs = np.inf
    for j in range(max_panels):
        lo = upper * 0.5 ** (j + 1)
        if lower > 0.0 and lo <= lower:
            return total + panel_integral(f, lower, hi, order)
        s = panel_integral(f, lo, hi, order)
        total += s
        prev_abs, last_abs = last_abs, abs(s)
        if lower == 0.0 and j + 1 >= min_panels:
            if last_abs < 1e-250:
                return total
            ratio = last_abs / prev_abs if prev_abs > 0.0 else 1.0
            if ratio < _RATIO_CAP:
                tail = last_abs * ratio / (1.0 - ratio)
                if tail <= rtol * max(abs(total), 1e-300):
                    return total
        hi = lo
    raise NonConvergenceError(
        f"panel refinement exhausted after {max_panels} panels "
        f"(last panel {last_abs:.3e}, total {total:.6e})",
        value=total, estimate=last_abs)
