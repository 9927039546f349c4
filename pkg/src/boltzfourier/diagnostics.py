"""Coercivity and smoothing-effect diagnostics on recorded states.

The weighted norms use the time-dependent weight
M_delta(t, xi) = <xi>^(N t - 4) <delta xi>^(-2 N0) with N0 = N T / 2 + 2.
Because the weight gains N/2 powers of <xi> per unit time, a bounded
weighted trace along a trajectory certifies a corresponding derivative
gain on the grid domain; a finite grid cannot witness more.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .charfn import CharGrid
from .errors import DomainError

COERCIVITY_EXAMPLE_SMALL = 1.0 / (3.0 * math.pi ** 2)
COERCIVITY_EXAMPLE_LARGE = 0.5 * (1.0 - math.exp(-0.5))


@dataclass(frozen=True)
class SmoothingWeight:
    """Parameters (N, T, delta) of the weight; N0 is fixed by N and T."""

    n: int = 4
    horizon: float = 1.0
    delta: float = 1e-2

    def __post_init__(self):
        if self.n < 1 or self.horizon <= 0.0 or self.delta <= 0.0:
            raise DomainError("smoothing weight needs n >= 1, horizon > 0, delta > 0")

    @property
    def n0(self) -> float:
        return 0.5 * self.n * self.horizon + 2.0


def m_delta(w: SmoothingWeight, t: float, xi) -> float | np.ndarray:
    """Weight <xi>^(N t - 4) * <delta xi>^(-2 N0) at time t."""
    if not 0.0 <= t <= w.horizon + 1e-12:
        raise DomainError(f"time {t} outside [0, {w.horizon}]")
    pts = np.asarray(xi, dtype=float)
    r2 = np.einsum("...i,...i->...", pts, pts)
    bracket = 1.0 + r2
    bracket_delta = 1.0 + w.delta ** 2 * r2
    out = bracket ** (0.5 * (w.n * t - 4.0)) * bracket_delta ** (-w.n0)
    return float(out) if np.asarray(xi).ndim == 1 else out


@dataclass(frozen=True)
class CoercivityReport:
    d_t: float
    witness_time: float
    witness_xi: tuple[float, float, float]
    r_min: float
    domain_radius: float

    def to_dict(self) -> dict:
        return {"D_T": self.d_t, "witness_time": self.witness_time,
                "witness_xi": list(self.witness_xi), "r_min": self.r_min,
                "domain_radius": self.domain_radius}


def coercivity_margin(states: list[tuple[float, CharGrid]],
                      r_min: float | None = None) -> CoercivityReport:
    """Largest D with 1 - |psi(t, xi)| >= D * min(1, |xi|^2) over the records."""
    if not states:
        raise DomainError("coercivity margin needs at least one recorded state")
    best = math.inf
    witness = (0.0, (0.0, 0.0, 0.0))
    domain_radius = states[0][1].radius
    used_r_min = states[0][1].spacing if r_min is None else r_min
    for t, grid in states:
        mask = grid.admissible_mask(used_r_min)
        radii = grid.node_radii()
        denom = np.minimum(1.0, radii[mask] ** 2)
        ratio = (1.0 - np.abs(grid.values[mask])) / denom
        idx = int(np.argmin(ratio))
        if ratio[idx] < best:
            best = float(ratio[idx])
            where = grid.nodes()[mask][idx]
            witness = (t, tuple(float(c) for c in where))
    return CoercivityReport(d_t=max(best, 0.0) if best != math.inf else 0.0,
                            witness_time=witness[0], witness_xi=witness[1],
                            r_min=used_r_min, domain_radius=domain_radius)


def weighted_l2(state: CharGrid, w: SmoothingWeight, t: float) -> float:
    """Riemann sum of |M_delta(t, xi) psi(t, xi)|^2 over the inscribed ball."""
    mask = state.ball_mask()
    nodes = state.nodes()[mask]
    weights = m_delta(w, t, nodes)
    vals = np.abs(state.values[mask])
    return float(np.sum((weights * vals) ** 2) * state.spacing ** 3)


@dataclass(frozen=True)
class SmoothingTrace:
    times: np.ndarray
    weighted: np.ndarray
    baseline: np.ndarray
    envelope: np.ndarray
    fitted_c: float

    CSV_HEADER = "t,weighted_l2,baseline,envelope"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for t, y, b, e in zip(self.times, self.weighted, self.baseline, self.envelope):
            lines.append(f"{t:.17g},{y:.17g},{b:.17g},{e:.17g}")
        return "\n".join(lines) + "\n"


def smoothing_trace(states: list[tuple[float, CharGrid]],
                    w: SmoothingWeight, *, slack: float = 0.1) -> SmoothingTrace:
    """Weighted trace y(t) with the tight envelope constant C.

    C is the smallest rate with y(t) <= y(0) e^(C t) at every record; the
    baseline column is the same trace on the constant-1 state (pure weight
    growth, i.e. the no-smoothing reference). The envelope check with the
    configured slack guards against non-finite records.
    """
    if not states:
        raise DomainError("smoothing trace needs at least one recorded state")
    times = np.array([t for t, _ in states])
    ys = np.array([weighted_l2(g, w, t) for t, g in states])
    if not np.all(np.isfinite(ys)):
        raise DomainError("weighted trace is not finite along the trajectory")
    ones = [(t, _constant_one_like(g)) for t, g in states]
    baseline = np.array([weighted_l2(g, w, t) for t, g in ones])
    positive = times > 0.0
    if np.any(positive) and ys[0] > 0.0:
        fitted = float(np.max(np.log(ys[positive] / ys[0]) / times[positive]))
    else:
        fitted = 0.0
    envelope = ys[0] * np.exp(fitted * times)
    if np.any(ys > envelope * (1.0 + slack)):
        raise DomainError("fitted envelope failed its own validity check")
    return SmoothingTrace(times=times, weighted=ys, baseline=baseline,
                          envelope=envelope, fitted_c=fitted)


def _constant_one_like(grid: CharGrid) -> CharGrid:
    from dataclasses import replace
    return replace(grid, values=np.ones_like(grid.values), base=None)


@dataclass(frozen=True)
class DecayProfile:
    shell_edges: np.ndarray
    shell_sups: np.ndarray
    decay_order: int

    MAX_ORDER = 64


def decay_profile(state: CharGrid, n_shells: int = 8,
                  outer_fraction: float = 0.5) -> DecayProfile:
    """Shell sups of |psi| and the empirical polynomial decay order.

    The order is the greatest k <= MAX_ORDER with sup_j * <r_j>^k <= 1 over
    the outer shells (r_j the shell midpoint); constant 1 gives 0,
    super-polynomially decaying states saturate at MAX_ORDER.
    """
    edges = np.linspace(0.0, state.radius, n_shells + 1)
    radii = state.node_radii()
    sups = np.zeros(n_shells)
    for j in range(n_shells):
        m = (radii > edges[j]) & (radii <= edges[j + 1])
        sups[j] = float(np.max(np.abs(state.values[m]))) if np.any(m) else 0.0
    outer_start = int(math.floor(n_shells * outer_fraction))
    mids = 0.5 * (edges[:-1] + edges[1:])
    order = 0
    for k in range(DecayProfile.MAX_ORDER + 1):
        brackets = np.sqrt(1.0 + mids[outer_start:] ** 2) ** k
        if np.all(sups[outer_start:] * brackets <= 1.0 + 1e-12):
            order = k
        else:
            break
    return DecayProfile(shell_edges=edges, shell_sups=sups, decay_order=order)
