"""Fourier-side collision operator and its near-grazing decompositions.

The spherical integral is discretized as a product rule: dyadic theta
panels with a fixed-order Gauss rule (graded into the grazing singularity)
times a uniform, even-count azimuth rule in the plane orthogonal to xi.
The azimuth tables carry exact phi -> phi + pi antisymmetry and the frame
depends only on the line through xi, which makes Hermitian symmetry of the
evaluated operator exact up to roundoff and makes the mirror-image point
in the symmetric decomposition land exactly on another quadrature node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .charfn import AnalyticCharFn, CharGrid, MeasureSpec, evaluate_state
from .errors import DomainError
from .kernel import THETA_MAX, AngularKernel, CutoffKernel, theta_lower
from .quadrature import gauss_legendre

DEFAULT_PANELS = 24
DEFAULT_ORDER = 8
DEFAULT_AZIMUTH = 16
DEFAULT_THETA_MIN = THETA_MAX * 2.0 ** -40


@dataclass(frozen=True)
class SphereQuadrature:
    """Product rule on the spherical band theta in (theta_min, pi/2]."""

    theta: np.ndarray
    theta_weight: np.ndarray
    cos_phi: np.ndarray
    sin_phi: np.ndarray
    theta_min: float
    panels: int
    order: int
    azimuth: int

    @classmethod
    def build(cls, panels: int = DEFAULT_PANELS, order: int = DEFAULT_ORDER,
              azimuth: int = DEFAULT_AZIMUTH, theta_min: float | None = None,
              breaks: tuple[float, ...] = ()) -> "SphereQuadrature":
        """Dyadic panels from pi/2 down to theta_min, order-point Gauss each.

        Extra break angles (cutoff clamp kinks, cap boundaries) are inserted
        as panel edges so integrands stay smooth panel-wise. Azimuth count
        must be even: the node set is closed under phi -> phi + pi, which the
        symmetric-decomposition identities rely on.
        """
        if azimuth % 2:
            raise DomainError("azimuth count must be even")
        lo = THETA_MAX * 2.0 ** -panels if theta_min is None else theta_min
        if not 0.0 < lo < THETA_MAX:
            raise DomainError("theta_min must lie in (0, pi/2)")
        edges = {lo, THETA_MAX}
        j = 1
        while THETA_MAX * 2.0 ** -j > lo:
            edges.add(THETA_MAX * 2.0 ** -j)
            j += 1
        for b in breaks:
            if lo < b < THETA_MAX:
                edges.add(float(b))
        edge_list = sorted(edges)
        nodes, weights = gauss_legendre(order)
        theta = []
        theta_w = []
        for a, b in zip(edge_list[:-1], edge_list[1:]):
            mid = 0.5 * (a + b)
            half = 0.5 * (b - a)
            theta.append(mid + half * nodes)
            theta_w.append(half * weights)
        m = np.arange(azimuth)
        phi = 2.0 * math.pi * m / azimuth
        cp = np.cos(phi)
        sp = np.sin(phi)
        # enforce exact antisymmetry of the phi + pi half
        half_az = azimuth // 2
        cp[half_az:] = -cp[:half_az]
        sp[half_az:] = -sp[:half_az]
        return cls(theta=np.concatenate(theta), theta_weight=np.concatenate(theta_w),
                   cos_phi=cp, sin_phi=sp, theta_min=lo,
                   panels=panels, order=order, azimuth=azimuth)

    def doubled(self) -> "SphereQuadrature":
        return SphereQuadrature.build(panels=2 * self.panels, order=2 * self.order,
                                      azimuth=2 * self.azimuth, theta_min=self.theta_min)

    def with_breaks(self, breaks: tuple[float, ...]) -> "SphereQuadrature":
        return SphereQuadrature.build(panels=self.panels, order=self.order,
                                      azimuth=self.azimuth, theta_min=self.theta_min,
                                      breaks=breaks)

    def band_node_weights(self, kernel) -> np.ndarray:
        """Per-theta-node weight b(theta) sin(theta) w_theta * (2 pi / M)."""
        b_vals = kernel.evaluate(self.theta)
        return b_vals * np.sin(self.theta) * self.theta_weight * (
            2.0 * math.pi / self.azimuth)

    def band_area(self) -> float:
        """Quadrature of 1 over the band; equals 2*pi*cos(theta_min) exactly."""
        return float(np.sum(np.sin(self.theta) * self.theta_weight)
                     * 2.0 * math.pi)


def quadrature_for(kernel, spec_or_quad=None, *, eps: float | None = None) -> SphereQuadrature:
    """Quadrature with panel edges at the kernel clamp kinks and cap boundary."""
    quad = spec_or_quad if isinstance(spec_or_quad, SphereQuadrature) \
        else SphereQuadrature.build()
    breaks = []
    if isinstance(kernel, CutoffKernel):
        breaks.extend(kernel.clamp_crossings())
    if eps is not None:
        breaks.append(theta_lower(eps))
    return quad.with_breaks(tuple(breaks)) if breaks else quad


def orthonormal_frame(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pair (e1, e2) orthogonal to u, canonical on the line through u."""
    sign = 1.0
    for c in u:
        if abs(c) > 1e-14:
            sign = 1.0 if c > 0.0 else -1.0
            break
    v = sign * u
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(u)))] = 1.0
    e1 = np.cross(axis, v)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(v, e1)
    return e1, e2


def xi_plus_minus(xi, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Post-collisional frequency pair xi/2 +- |xi| sigma / 2."""
    xi = np.asarray(xi, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    r = np.linalg.norm(xi, axis=-1, keepdims=True)
    half = 0.5 * r * sigma
    return 0.5 * xi + half, 0.5 * xi - half


def _sigma_nodes(xi: np.ndarray, quad: SphereQuadrature) -> np.ndarray:
    """sigma(theta_k, phi_m) array of shape (n_theta, M, 3) for this xi."""
    r = np.linalg.norm(xi)
    u = xi / r
    e1, e2 = orthonormal_frame(u)
    ct = np.cos(quad.theta)[:, None, None]
    st = np.sin(quad.theta)[:, None, None]
    circ = (quad.cos_phi[:, None] * e1[None, :]
            + quad.sin_phi[:, None] * e2[None, :])[None, :, :]
    return ct * u[None, None, :] + st * circ


def _state_arrays(state):
    """(atoms, gaussians, correction grid) triple driving both evaluators."""
    if isinstance(state, MeasureSpec):
        state = AnalyticCharFn(state)
    if isinstance(state, AnalyticCharFn):
        ax, aw = state.spec.atom_arrays()
        gm, gv, gw = state.spec.gaussian_arrays()
        return ax, aw, gm, gv, gw, np.zeros((2, 2, 2), dtype=complex), 1.0, 2, 1.0, False
    if isinstance(state, CharGrid):
        if state.base is None:
            ax, aw = np.zeros((0, 3)), np.zeros(0)
            gm, gv, gw = np.zeros((0, 3)), np.zeros(0), np.zeros(0)
            corr = np.ascontiguousarray(state.values)
        else:
            ax, aw = state.base.spec.atom_arrays()
            gm, gv, gw = state.base.spec.gaussian_arrays()
            corr = np.ascontiguousarray(state.values - state.base(state.nodes()))
        return ax, aw, gm, gv, gw, corr, state.radius, state.points, state.spacing, True
    raise TypeError(f"cannot evaluate state of type {type(state)!r}")


def rhs_at_points(state, pts: np.ndarray, kernel, quad: SphereQuadrature) -> np.ndarray:
    """Collision RHS at an (n, 3) array of frequencies (jitted inner loop)."""
    ax, aw, gm, gv, gw, corr, rad, npts, delta, use_corr = _state_arrays(state)
    pts = np.ascontiguousarray(pts, dtype=float)
    vals = np.ascontiguousarray(evaluate_state(state, pts), dtype=complex)
    bw = np.ascontiguousarray(quad.band_node_weights(kernel))
    out = np.empty(pts.shape[0], dtype=complex)
    _kernels.rhs_batch(pts, vals,
                       np.ascontiguousarray(np.cos(quad.theta)),
                       np.ascontiguousarray(np.sin(quad.theta)),
                       bw,
                       np.ascontiguousarray(quad.cos_phi),
                       np.ascontiguousarray(quad.sin_phi),
                       ax, aw, gm, gv, gw, corr, rad, npts, delta, use_corr, out)
    return out


def collision_rhs(state, xi, kernel, quad: SphereQuadrature | None = None) -> complex:
    """Spherical collision integral at a single frequency (reference path).

    Evaluated in plain numpy, independent of the jitted batch kernel; the
    two are cross-checked in the tests. psi(t, 0) is read from the
    representation and equals 1 for any valid characteristic function.
    """
    xi = np.asarray(xi, dtype=float)
    r = float(np.linalg.norm(xi))
    if r == 0.0:
        return 0.0 + 0.0j
    if isinstance(state, CharGrid) and r > state.eval_radius * (1.0 + 1e-12):
        raise DomainError("collision operator only evaluable inside the inscribed ball")
    quad = quadrature_for(kernel, quad)
    sigma = _sigma_nodes(xi, quad)
    xp, xm = xi_plus_minus(xi[None, None, :], sigma)
    try:
        pp = evaluate_state(state, xp)
        pm = evaluate_state(state, xm)
    except DomainError as exc:  # pragma: no cover - unreachable for |xi| <= R
        raise DomainError(f"interpolation failed for a sigma node of xi={xi}: {exc}")
    psi_xi = evaluate_state(state, xi)
    w = quad.band_node_weights(kernel)
    return complex(np.sum(w[:, None] * (pp * pm - psi_xi)))


@dataclass(frozen=True)
class SplitResult:
    """Symmetric decomposition of the collision integrand plus cap remainder.

    i1/i2/i3 are the full-band parts built from the mirror point
    xi~+ = 2 zeta - xi+ (zeta the projection of xi+ on xi); r_eps is the
    grazing-cap integral divided by |xi|^alpha and loss_eps the band loss
    a_eps_quadrature * psi(xi). band_total collects the band integrand so
    that band_total + |xi|^alpha * r_eps recombines the full operator.
    """

    xi: tuple[float, float, float]
    eps: float
    alpha: float
    i1: complex
    i2: complex
    i3: complex
    r_eps: complex
    loss_eps: complex
    band_total: complex
    a_eps_quadrature: float

    def total(self) -> complex:
        return self.i1 + self.i2 + self.i3

    def recombined(self) -> complex:
        r = np.linalg.norm(self.xi)
        return self.band_total + self.r_eps * r ** self.alpha

    def to_dict(self) -> dict:
        def c(z):
            return [z.real, z.imag]
        return {"xi": list(self.xi), "eps": self.eps, "alpha": self.alpha,
                "i1": c(self.i1), "i2": c(self.i2), "i3": c(self.i3),
                "r_eps": c(self.r_eps), "loss_eps": c(self.loss_eps),
                "band_total": c(self.band_total),
                "a_eps_quadrature": self.a_eps_quadrature,
                "total": c(self.total()), "recombined": c(self.recombined())}


def split_components(state, xi, kernel, eps: float, alpha: float,
                     quad: SphereQuadrature | None = None) -> SplitResult:
    """Evaluate I1, I2, I3, the cap remainder and the band loss at xi."""
    xi = np.asarray(xi, dtype=float)
    r = float(np.linalg.norm(xi))
    if r == 0.0:
        raise DomainError("splitting requires xi != 0")
    quad = quadrature_for(kernel, quad, eps=eps)
    theta_cap = theta_lower(eps)
    sigma = _sigma_nodes(xi, quad)
    xp, xm = xi_plus_minus(xi[None, None, :], sigma)
    u = xi / r
    # zeta depends on theta only: |xi| cos^2(theta/2) along u
    zeta = (r * np.cos(0.5 * quad.theta) ** 2)[:, None] * u[None, :]
    xp_mirror = 2.0 * zeta[:, None, :] - xp

    pp = evaluate_state(state, xp)
    pm = evaluate_state(state, xm)
    p_mirror = evaluate_state(state, xp_mirror)
    p_zeta = evaluate_state(state, zeta)
    psi_xi = complex(evaluate_state(state, xi))

    w = quad.band_node_weights(kernel)
    cap = quad.theta <= theta_cap + 1e-15
    band = ~cap

    i1 = complex(np.sum(w[:, None] * 0.5 * (pp + p_mirror - 2.0 * p_zeta[:, None])))
    # the I2 integrand is azimuth-independent: one azimuth circle sums to M * w
    i2 = complex(np.sum(w * (p_zeta - psi_xi)) * quad.azimuth)
    i3 = complex(np.sum(w[:, None] * pp * (pm - 1.0)))

    cap_integral = complex(np.sum(w[cap][:, None] * (pp * pm - psi_xi)[cap]))
    band_total = complex(np.sum(w[band][:, None] * (pp * pm - psi_xi)[band]))
    a_quad = float(np.sum(w[band]) * quad.azimuth)
    return SplitResult(xi=tuple(float(c) for c in xi), eps=eps, alpha=alpha,
                       i1=i1, i2=i2, i3=i3,
                       r_eps=cap_integral / r ** alpha,
                       loss_eps=a_quad * psi_xi,
                       band_total=band_total,
                       a_eps_quadrature=a_quad)


def remainder_r_eps(state, xi, kernel, eps: float, alpha: float,
                    quad: SphereQuadrature | None = None) -> complex:
    """Grazing-cap integral of b (psi+ psi- - psi) / |xi|^alpha."""
    return split_components(state, xi, kernel, eps, alpha, quad).r_eps


def rhs_on_grid(grid: CharGrid, kernel, quad: SphereQuadrature) -> np.ndarray:
    """Collision RHS at every grid node (corner nodes use clamped lookups)."""
    pts = grid.nodes().reshape(-1, 3)
    out = rhs_at_points(grid, pts, kernel, quad)
    return out.reshape(grid.values.shape)
