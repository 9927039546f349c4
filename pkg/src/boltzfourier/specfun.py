"""Gamma and upper incomplete gamma for positive real arguments.

Self-contained Lanczos approximation plus the usual series / continued
fraction pair for the incomplete function. Accuracy is ~1e-14 relative on
the parameter ranges used here (shape 2/s with s in (0, 10], arguments up
to a few hundred), which the test suite pins against analytic cases.
"""

from __future__ import annotations

import math

from .errors import DomainError

# Lanczos coefficients, g = 7, n = 9 (Godfrey's tabulation).
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_SQRT_TWO_PI = math.sqrt(2.0 * math.pi)
_MAX_ITER = 500
_EPS = 1e-16
_TINY = 1e-300


def gamma_fn(x: float) -> float:
    """Gamma(x) for x > 0."""
    if x <= 0.0:
        raise DomainError(f"gamma_fn requires x > 0, got {x}")
    if x < 0.5:
        # reflection keeps the Lanczos sum well conditioned near 0
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    z = x - 1.0
    acc = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        acc += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _SQRT_TWO_PI * t ** (z + 0.5) * math.exp(-t) * acc


def _lower_regularized_series(a: float, x: float) -> float:
    """P(a, x) by series; valid and fast for x < a + 1."""
    term = 1.0 / a
    total = term
    n = a
    for _ in range(_MAX_ITER):
        n += 1.0
        term *= x / n
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.log(gamma_fn(a)))


def _upper_regularized_cf(a: float, x: float) -> float:
    """Q(a, x) by Lentz continued fraction; valid for x >= a + 1."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.log(gamma_fn(a)))


def upper_gamma(a: float, x: float) -> float:
    """Upper incomplete gamma integral from x to infinity of t^(a-1) e^-t."""
    if a <= 0.0:
        raise DomainError(f"upper_gamma requires a > 0, got {a}")
    if x < 0.0:
        raise DomainError(f"upper_gamma requires x >= 0, got {x}")
    g = gamma_fn(a)
    if x == 0.0:
        return g
    if x < a + 1.0:
        return g * (1.0 - _lower_regularized_series(a, x))
    return g * _upper_regularized_cf(a, x)
