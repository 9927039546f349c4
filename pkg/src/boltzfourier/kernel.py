"""Debye-Yukawa angular cross section and the scalar integrals built on it.

The reference kernel is the exact closed form

    b(cos theta) = K * theta^-2 * (log(2/theta))^(2/s - 1),   theta in (0, pi/2],

together with its Grad-cutoff family b_n = min(b, n). Everything else in
the module is a one-dimensional integral of b against explicit angular
weights: moments, the contraction/expansion rate lambda_alpha, the
near-singular masses a_eps and lambda_eps_alpha, the coercive weight, and
the incomplete-gamma tail bound for the remainder of the grazing cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .quadrature import (DEFAULT_MAX_PANELS, DEFAULT_MIN_PANELS,
                         DEFAULT_ORDER, DEFAULT_RTOL, graded_integral)
from .specfun import gamma_fn, upper_gamma

THETA_MAX = math.pi / 2.0
# largest eps for which the band [2 arcsin(eps/pi), pi/2] is nonempty
EPS_MAX = math.pi / math.sqrt(2.0)

_THETA_SLACK = 1e-12


@dataclass(frozen=True)
class QuadratureOptions:
    """Knobs for the dyadic panel quadratures; doubled by oracle runs."""

    order: int = DEFAULT_ORDER
    min_panels: int = DEFAULT_MIN_PANELS
    max_panels: int = DEFAULT_MAX_PANELS
    rtol: float = DEFAULT_RTOL

    def doubled(self) -> "QuadratureOptions":
        return QuadratureOptions(order=2 * self.order,
                                 min_panels=2 * self.min_panels,
                                 max_panels=2 * self.max_panels,
                                 rtol=self.rtol)


_DEFAULT_OPTS = QuadratureOptions()


@dataclass(frozen=True)
class AngularKernel:
    """Angular cross section with singularity exponent s and strength K."""

    s: float
    strength: float = 1.0

    def __post_init__(self):
        if not self.s > 0.0:
            raise DomainError(f"singularity exponent s must be positive, got {self.s}")
        if not self.strength > 0.0:
            raise DomainError(f"kernel strength must be positive, got {self.strength}")

    @property
    def log_exponent(self) -> float:
        return 2.0 / self.s - 1.0

    def eval_b(self, theta):
        """b(cos theta) on the support (0, pi/2]."""
        arr = np.asarray(theta, dtype=float)
        if arr.size and (np.any(arr <= 0.0) or np.any(arr > THETA_MAX + _THETA_SLACK)):
            raise DomainError("theta outside the kernel support (0, pi/2]")
        out = self.strength * arr ** -2.0 * np.log(2.0 / arr) ** self.log_exponent
        return float(out) if np.isscalar(theta) else out

    # same entry point as CutoffKernel so the collision module can take either
    def evaluate(self, theta):
        return self.eval_b(theta)

    def cutoff(self, level: float) -> "CutoffKernel":
        return CutoffKernel(base=self, level=float(level))

    def clamp_angle(self) -> float | None:
        """Interior stationary point of b, if it lies inside the support.

        b is monotone decreasing unless 2/s - 1 < 0, in which case it has a
        single interior minimum at theta = 2*exp((2/s - 1)/2).
        """
        c = self.log_exponent
        if c >= 0.0:
            return None
        theta_c = 2.0 * math.exp(c / 2.0)
        return theta_c if theta_c < THETA_MAX else None


@dataclass(frozen=True)
class CutoffKernel:
    """Grad cutoff b_n = min(b, n) of an angular kernel."""

    base: AngularKernel
    level: float

    def __post_init__(self):
        if not self.level > 0.0:
            raise DomainError(f"cutoff level must be positive, got {self.level}")

    def evaluate(self, theta):
        return np.minimum(self.base.eval_b(theta), self.level)

    def clamp_crossings(self) -> tuple[float, ...]:
        """Angles where b crosses the cutoff level, ascending.

        b diverges at 0, so there is always one crossing on the decreasing
        branch; a second can appear on the increasing branch when s > 2.
        """
        segments = []
        theta_c = self.base.clamp_angle()
        lo = 1e-12
        if theta_c is None:
            segments.append((lo, THETA_MAX))
        else:
            segments.append((lo, theta_c))
            segments.append((theta_c, THETA_MAX))
        crossings = []
        for a, b in segments:
            fa = self.base.eval_b(a) - self.level
            fb = self.base.eval_b(b) - self.level
            if fa == 0.0:
                crossings.append(a)
            elif fa * fb < 0.0:
                crossings.append(brentq(lambda t: self.base.eval_b(t) - self.level,
                                        a, b, xtol=1e-15, rtol=1e-14))
        return tuple(sorted(crossings))


@dataclass(frozen=True)
class MomentTable:
    """Rows of (alpha, s, quadrature, analytic, rel_err) for the moment identity."""

    entries: tuple[tuple[float, float, float, float, float], ...] = field(default=())

    HEADER = "alpha,s,quadrature,analytic,rel_err"

    def to_csv(self) -> str:
        lines = [self.HEADER]
        for alpha, s, quad, ana, err in self.entries:
            lines.append(f"{alpha:.17g},{s:.17g},{quad:.17g},{ana:.17g},{err:.17g}")
        return "\n".join(lines) + "\n"


def analytic_moment(alpha: float, s: float) -> float:
    """alpha^(-2/s) * Gamma(2/s), the closed form of the model moment."""
    return alpha ** (-2.0 / s) * gamma_fn(2.0 / s)


def model_moment_integral(alpha: float, s: float,
                          opts: QuadratureOptions = _DEFAULT_OPTS) -> float:
    """Quadrature of the model moment integral over u in (0, 1).

    The integrand u^(alpha-1) * (log 1/u)^(2/s-1) is singular at u = 0 for
    alpha < 1 and at u = 1 for s > 2, so the domain is split at 1/2 and each
    half is integrated on panels graded toward its singular endpoint.
    """
    if alpha <= 0.0 or s <= 0.0:
        raise DomainError("model moment requires alpha > 0 and s > 0")
    c = 2.0 / s - 1.0

    def near_zero(u):
        return u ** (alpha - 1.0) * (-np.log(u)) ** c

    def near_one(w):
        # u = 1 - w; log(1/u) = -log1p(-w)
        return (1.0 - w) ** (alpha - 1.0) * (-np.log1p(-w)) ** c

    kw = dict(order=opts.order, min_panels=opts.min_panels,
              max_panels=opts.max_panels, rtol=opts.rtol)
    return graded_integral(near_zero, 0.5, **kw) + graded_integral(near_one, 0.5, **kw)


def moment_table(s: float, alphas, opts: QuadratureOptions = _DEFAULT_OPTS) -> MomentTable:
    rows = []
    for alpha in alphas:
        quad = model_moment_integral(alpha, s, opts)
        ana = analytic_moment(alpha, s)
        rows.append((float(alpha), float(s), quad, ana, abs(quad - ana) / abs(ana)))
    return MomentTable(entries=tuple(rows))


def angular_moment(kernel: AngularKernel, alpha: float,
                   opts: QuadratureOptions = _DEFAULT_OPTS) -> float:
    """Integral of sin^alpha(theta/2) * b(cos theta) * sin(theta) over the support."""
    if alpha <= 0.0:
        raise DomainError("angular moment requires alpha > 0")

    def f(theta):
        return np.sin(0.5 * theta) ** alpha * kernel.eval_b(theta) * np.sin(theta)

    return graded_integral(f, THETA_MAX, order=opts.order, min_panels=opts.min_panels,
                           max_panels=opts.max_panels, rtol=opts.rtol)


def lambda_alpha(kernel: AngularKernel, alpha: float,
                 opts: QuadratureOptions = _DEFAULT_OPTS) -> float:
    """Growth rate 2*pi*int b sin(theta) (cos^a(t/2) + sin^a(t/2) - 1) dtheta.

    Split into the sin^alpha part (positive) and the cos^alpha - 1 part
    (negative, evaluated via expm1 of alpha*log(cos) to avoid cancellation
    near theta = 0); for alpha = 2 the two quadratures agree to roundoff and
    the result is zero at the 1e-12 level.
    """
    if alpha <= 0.0:
        raise DomainError("lambda_alpha requires alpha > 0")
    kw = dict(order=opts.order, min_panels=opts.min_panels,
              max_panels=opts.max_panels, rtol=opts.rtol)

    def sin_part(theta):
        return kernel.eval_b(theta) * np.sin(theta) * np.sin(0.5 * theta) ** alpha

    def cos_part(theta):
        return kernel.eval_b(theta) * np.sin(theta) * np.expm1(
            alpha * np.log(np.cos(0.5 * theta)))

    return 2.0 * math.pi * (graded_integral(sin_part, THETA_MAX, **kw)
                            + graded_integral(cos_part, THETA_MAX, **kw))


def theta_lower(eps: float) -> float:
    """Polar opening angle 2*arcsin(eps/pi) of the grazing cap Omega_eps."""
    if eps <= 0.0 or eps > EPS_MAX:
        raise DomainError(f"eps must lie in (0, pi/sqrt(2)], got {eps}")
    return 2.0 * math.asin(eps / math.pi)


def a_eps(kernel: AngularKernel, eps: float,
          opts: QuadratureOptions = _DEFAULT_OPTS) -> float:
    """Cutoff mass 2*pi*int_{2 arcsin(eps/pi)}^{pi/2} b sin(theta) dtheta."""
    lo = theta_lower(eps)
    if lo >= THETA_MAX:
        return 0.0

    def f(theta):
        return kernel.eval_b(theta) * np.sin(theta)

    return 2.0 * math.pi * graded_integral(f, THETA_MAX, lower=lo, order=opts.order,
                                           max_panels=opts.max_panels)


def lambda_eps_alpha(kernel: AngularKernel, eps: float, alpha: float,
                     opts: QuadratureOptions = _DEFAULT_OPTS) -> float:
    """Banded rate 2*pi*int_{theta_eps}^{pi/2} b sin(t)(cos^a(t/2)+sin^a(t/2)) dt."""
    if alpha <= 0.0:
        raise DomainError("lambda_eps_alpha requires alpha > 0")
    lo = theta_lower(eps)
    if lo >= THETA_MAX:
        return 0.0

    def f(theta):
        return kernel.eval_b(theta) * np.sin(theta) * (
            np.cos(0.5 * theta) ** alpha + np.sin(0.5 * theta) ** alpha)

    return 2.0 * math.pi * graded_integral(f, THETA_MAX, lower=lo, order=opts.order,
                                           max_panels=opts.max_panels)


def coercive_weight(kernel: AngularKernel, r: float,
                    opts: QuadratureOptions = _DEFAULT_OPTS) -> float:
    """Sphere integral of b * min(1, r^2 sin^2(theta/2)).

    For r <= sqrt(2) the min never saturates and the weight is exactly
    r^2 times the alpha = 2 angular moment; beyond that the domain is split
    at the saturation angle so each piece stays Gauss-smooth.
    """
    if r < 0.0:
        raise DomainError("coercive weight requires r >= 0")
    if r == 0.0:
        return 0.0
    kw = dict(order=opts.order, min_panels=opts.min_panels,
              max_panels=opts.max_panels, rtol=opts.rtol)

    def quadratic(theta):
        return kernel.eval_b(theta) * np.sin(theta) * np.sin(0.5 * theta) ** 2

    if r <= math.sqrt(2.0):
        return 2.0 * math.pi * r * r * graded_integral(quadratic, THETA_MAX, **kw)

    theta_star = 2.0 * math.asin(1.0 / r)

    def flat(theta):
        return kernel.eval_b(theta) * np.sin(theta)

    inner = r * r * graded_integral(quadratic, theta_star, **kw)
    outer = graded_integral(flat, THETA_MAX, lower=theta_star, order=opts.order,
                            max_panels=opts.max_panels)
    return 2.0 * math.pi * (inner + outer)


def remainder_tail_bound(s: float, eps: float, alpha: float) -> float:
    """alpha^(-2/s) * Gamma_upper(2/s, log(1/eps)), the grazing-cap tail."""
    if s <= 0.0 or alpha <= 0.0:
        raise DomainError("tail bound requires s > 0 and alpha > 0")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"tail bound requires 0 < eps < 1, got {eps}")
    return alpha ** (-2.0 / s) * upper_gamma(2.0 / s, math.log(1.0 / eps))


def cutoff_mass(kernel: CutoffKernel,
                opts: QuadratureOptions = _DEFAULT_OPTS) -> float:
    """Total mass 2*pi*int_0^{pi/2} min(b, n) sin(theta) dtheta.

    The clamp boundaries are located exactly and the clamped stretches are
    integrated in closed form, so the result is panel-accurate despite the
    kink in the integrand.
    """
    crossings = kernel.clamp_crossings()
    n = kernel.level

    def f(theta):
        return kernel.base.eval_b(theta) * np.sin(theta)

    kw = dict(order=opts.order, max_panels=opts.max_panels)
    if not crossings:
        # level above or below b on the whole support
        if kernel.base.eval_b(THETA_MAX) >= n:
            return 2.0 * math.pi * n  # b_n == n, integral of sin over (0, pi/2]
        return 2.0 * math.pi * graded_integral(f, THETA_MAX,
                                               min_panels=opts.min_panels,
                                               rtol=opts.rtol, **kw)
    if len(crossings) == 1:
        x1 = crossings[0]
        clamped = n * (1.0 - math.cos(x1))
        smooth = graded_integral(f, THETA_MAX, lower=x1, **kw)
        return 2.0 * math.pi * (clamped + smooth)
    x1, x2 = crossings
    clamped = n * (1.0 - math.cos(x1)) + n * math.cos(x2)
    smooth = graded_integral(f, x2, lower=x1, **kw)
    return 2.0 * math.pi * (clamped + smooth)
