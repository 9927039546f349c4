"""Time integration of the Fourier-side equation on grid states.

States evolve as corrections on top of the analytic initial characteristic
function: the classical 4-stage explicit step updates the correction field,
the value at xi = 0 is carried separately (its right-hand side vanishes
identically) and is pinned to 1 after every step. No other projection onto
the characteristic-function class is applied; modulus and Hermitian
deviations are monitored instead so quadrature bugs stay visible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .charfn import (FORMAT_VERSION, AnalyticCharFn, CharGrid, MeasureSpec,
                     fourier_of_measure, k_alpha_norm, read_grid,
                     small_xi_limit, write_grid)
from .collision import SphereQuadrature, quadrature_for
from .errors import DomainError, InstabilityError
from .kernel import AngularKernel, CutoffKernel, cutoff_mass, lambda_alpha

EVOLVE_PANELS = 16
EVOLVE_ORDER = 6
EVOLVE_AZIMUTH = 12

_MODULUS_ABORT = 1e-6


@dataclass(frozen=True)
class QuadratureSpec:
    """Sphere-rule resolution used by a run; evolution default is lighter
    than the single-point probe default for desk-scale runtimes."""

    panels: int = EVOLVE_PANELS
    order: int = EVOLVE_ORDER
    azimuth: int = EVOLVE_AZIMUTH

    def build(self) -> SphereQuadrature:
        return SphereQuadrature.build(panels=self.panels, order=self.order,
                                      azimuth=self.azimuth)

    def doubled(self) -> "QuadratureSpec":
        return QuadratureSpec(panels=2 * self.panels, order=2 * self.order,
                              azimuth=2 * self.azimuth)

    def to_dict(self) -> dict:
        return {"panels": self.panels, "order": self.order, "azimuth": self.azimuth}

    @classmethod
    def from_dict(cls, d: dict) -> "QuadratureSpec":
        return cls(panels=int(d.get("panels", EVOLVE_PANELS)),
                   order=int(d.get("order", EVOLVE_ORDER)),
                   azimuth=int(d.get("azimuth", EVOLVE_AZIMUTH)))


@dataclass(frozen=True)
class EvolveConfig:
    s: float = 1.0
    strength: float = 1.0
    cutoff: float = 16.0
    radius: float = 4.0
    points: int = 16
    dt: float | None = None
    horizon: float = 1.0
    cadence: float = 10.0
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    alphas: tuple[float, ...] = (2.0,)
    n_shells: int = 8
    safety: float = 0.5

    def kernel(self) -> AngularKernel:
        return AngularKernel(s=self.s, strength=self.strength)

    def cutoff_kernel(self) -> CutoffKernel:
        return self.kernel().cutoff(self.cutoff)

    def mass(self) -> float:
        return cutoff_mass(self.cutoff_kernel())

    def dt_bound(self) -> float:
        """Explicit-step limit safety / (2 * cutoff mass)."""
        return self.safety / (2.0 * self.mass())

    def record_count(self) -> int:
        n = self.horizon * self.cadence
        if abs(n - round(n)) > 1e-9 or round(n) < 1:
            raise DomainError("horizon * cadence must be a positive integer")
        return int(round(n))

    def resolve_dt(self) -> tuple[float, int]:
        """(dt, steps per record interval) meeting the bound and the cadence."""
        interval = 1.0 / self.cadence
        bound = self.dt_bound()
        target = bound if self.dt is None else self.dt
        if target > bound * (1.0 + 1e-12):
            raise DomainError(
                f"dt={target} violates the stability rule dt <= {bound:.3e}")
        per = max(1, math.ceil(interval / target - 1e-12))
        return interval / per, per

    def validate(self) -> "EvolveConfig":
        self.record_count()
        self.resolve_dt()
        return self

    def to_dict(self) -> dict:
        return {
            "kernel": {"s": self.s, "strength": self.strength, "cutoff": self.cutoff},
            "grid": {"radius": self.radius, "points": self.points},
            "quadrature": self.quadrature.to_dict(),
            "time": {"dt": self.dt, "horizon": self.horizon, "cadence": self.cadence},
            "alphas": list(self.alphas),
            "shells": self.n_shells,
            "safety": self.safety,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvolveConfig":
        known = {"kernel", "grid", "quadrature", "time", "alphas", "shells", "safety"}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown config fields: {sorted(unknown)}")
        kern = d.get("kernel", {})
        grid = d.get("grid", {})
        time = d.get("time", {})
        return cls(
            s=float(kern.get("s", 1.0)),
            strength=float(kern.get("strength", 1.0)),
            cutoff=float(kern.get("cutoff", 16.0)),
            radius=float(grid.get("radius", 4.0)),
            points=int(grid.get("points", 16)),
            quadrature=QuadratureSpec.from_dict(d.get("quadrature", {})),
            dt=None if time.get("dt") is None else float(time["dt"]),
            horizon=float(time.get("horizon", 1.0)),
            cadence=float(time.get("cadence", 10.0)),
            alphas=tuple(float(a) for a in d.get("alphas", (2.0,))),
            n_shells=int(d.get("shells", 8)),
            safety=float(d.get("safety", 0.5)),
        ).validate()


@dataclass
class TrajectoryRecord:
    """Per-record diagnostics of one evolution run."""

    times: np.ndarray
    alphas: tuple[float, ...]
    knorms: np.ndarray            # (n_times, n_alphas)
    shell_edges: np.ndarray
    shell_sups: np.ndarray        # (n_times, n_shells)
    conservation_residual: np.ndarray
    hermitian_defect: np.ndarray
    modulus_excess: np.ndarray
    grids: list[CharGrid]

    CSV_HEADER = "t,alpha,knorm,shell_sup,conservation_residual"

    def outer_shell_sup(self) -> np.ndarray:
        return self.shell_sups[:, -1]

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for it, t in enumerate(self.times):
            for ia, alpha in enumerate(self.alphas):
                lines.append(
                    f"{t:.17g},{alpha:.17g},{self.knorms[it, ia]:.17g},"
                    f"{self.shell_sups[it, -1]:.17g},"
                    f"{self.conservation_residual[it]:.17g}")
        return "\n".join(lines) + "\n"


class _Runner:
    """Precomputed geometry + quadrature for repeated RHS evaluation."""

    def __init__(self, spec: MeasureSpec, cfg: EvolveConfig):
        self.spec = spec
        self.cfg = cfg
        self.kernel = cfg.cutoff_kernel()
        self.quad = quadrature_for(self.kernel, cfg.quadrature.build())
        self.bw = np.ascontiguousarray(self.quad.band_node_weights(self.kernel))
        self.ct = np.ascontiguousarray(np.cos(self.quad.theta))
        self.st = np.ascontiguousarray(np.sin(self.quad.theta))
        self.cp = np.ascontiguousarray(self.quad.cos_phi)
        self.sp = np.ascontiguousarray(self.quad.sin_phi)

        template = CharGrid(radius=cfg.radius, points=cfg.points,
                            values=np.zeros((cfg.points,) * 3, dtype=complex))
        self.template = template
        self.nodes = template.nodes()
        self.pts = np.ascontiguousarray(self.nodes.reshape(-1, 3))
        self.base = AnalyticCharFn(spec)
        self.base_nodes = np.ascontiguousarray(fourier_of_measure(spec, self.nodes))
        self.ax, self.aw = spec.atom_arrays()
        self.gm, self.gv, self.gw = spec.gaussian_arrays()
        self.shape = self.base_nodes.shape

    def rhs(self, corr: np.ndarray) -> np.ndarray:
        corr = np.ascontiguousarray(corr)
        vals = np.ascontiguousarray((self.base_nodes + corr).reshape(-1))
        out = np.empty(vals.shape[0], dtype=complex)
        _kernels.rhs_batch(self.pts, vals, self.ct, self.st, self.bw,
                           self.cp, self.sp, self.ax, self.aw,
                           self.gm, self.gv, self.gw, corr,
                           self.cfg.radius, self.cfg.points,
                           self.template.spacing, True, out)
        return out.reshape(self.shape)

    def grid(self, corr: np.ndarray, t: float) -> CharGrid:
        return CharGrid(radius=self.cfg.radius, points=self.cfg.points,
                        values=self.base_nodes + corr, base=self.base,
                        time=t, psi_zero=1.0 + 0.0j)


def step(state: CharGrid, cfg: EvolveConfig) -> CharGrid:
    """One classical 4-stage explicit step of the collision flow.

    Grids without an analytic base evolve their raw values (the correction
    is the whole state); grids sampled from a measure keep the base fixed
    and evolve only the correction on top of it.
    """
    placeholder = state.base.spec if state.base is not None \
        else MeasureSpec(atoms=(((0.0, 0.0, 0.0), 1.0),))
    runner = _Runner(placeholder, cfg)
    if state.base is None:
        runner.base_nodes = np.zeros_like(state.values)
        runner.ax, runner.aw = np.zeros((0, 3)), np.zeros(0)
        runner.gm = np.zeros((0, 3))
        runner.gv = np.zeros(0)
        runner.gw = np.zeros(0)
    corr = np.ascontiguousarray(state.values - runner.base_nodes)
    dt, _ = cfg.resolve_dt()
    new_corr = _rk4(runner, corr, dt)
    values = runner.base_nodes + new_corr
    _check_modulus(values)
    return replace(state, values=values, time=state.time + dt, psi_zero=1.0 + 0.0j)


def _rk4(runner: _Runner, corr: np.ndarray, dt: float) -> np.ndarray:
    k1 = runner.rhs(corr)
    k2 = runner.rhs(corr + 0.5 * dt * k1)
    k3 = runner.rhs(corr + 0.5 * dt * k2)
    k4 = runner.rhs(corr + dt * k3)
    return corr + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_modulus(values: np.ndarray):
    excess = float(np.max(np.abs(values)) - 1.0)
    if excess > _MODULUS_ABORT:
        raise InstabilityError(
            f"|psi| exceeded 1 + {_MODULUS_ABORT:g} (excess {excess:.3e}); "
            "reduce dt or raise the quadrature / cutoff resolution")


def evolve(init: MeasureSpec, cfg: EvolveConfig) -> tuple[TrajectoryRecord, CharGrid]:
    """Integrate from the measure's characteristic function over [0, horizon]."""
    cfg.validate()
    runner = _Runner(init, cfg)
    dt, per = cfg.resolve_dt()
    n_rec = cfg.record_count()

    shell_edges = np.linspace(0.0, cfg.radius, cfg.n_shells + 1)
    radii = runner.template.node_radii()
    shell_masks = [(radii > shell_edges[i]) & (radii <= shell_edges[i + 1])
                   for i in range(cfg.n_shells)]
    admissible = runner.template.admissible_mask()
    origin_limits = [small_xi_limit(init, None, a) for a in cfg.alphas]

    times = [0.0]
    grids = [runner.grid(np.zeros(runner.shape, dtype=complex), 0.0)]
    corr = np.zeros(runner.shape, dtype=complex)
    t = 0.0
    for _ in range(n_rec):
        for _ in range(per):
            corr = _rk4(runner, corr, dt)
            t += dt
            _check_modulus(runner.base_nodes + corr)
        times.append(t)
        grids.append(runner.grid(corr.copy(), t))

    knorms = np.zeros((len(times), len(cfg.alphas)))
    shell_sups = np.zeros((len(times), cfg.n_shells))
    residual = np.zeros(len(times))
    hermit = np.zeros(len(times))
    modexc = np.zeros(len(times))
    for it, g in enumerate(grids):
        absvals = np.abs(g.values)
        ratios = np.abs(g.values - 1.0)
        for ia, alpha in enumerate(cfg.alphas):
            r = radii[admissible] ** alpha
            sup = float(np.max(ratios[admissible] / r)) if np.any(admissible) else 0.0
            knorms[it, ia] = max(sup, origin_limits[ia]) \
                if math.isfinite(origin_limits[ia]) else math.inf
        for j, m in enumerate(shell_masks):
            shell_sups[it, j] = float(np.max(absvals[m])) if np.any(m) else 0.0
        residual[it] = abs(g.psi_zero - 1.0)
        hermit[it] = g.hermitian_defect()
        modexc[it] = g.modulus_excess()

    record = TrajectoryRecord(times=np.array(times), alphas=cfg.alphas,
                              knorms=knorms, shell_edges=shell_edges,
                              shell_sups=shell_sups,
                              conservation_residual=residual,
                              hermitian_defect=hermit, modulus_excess=modexc,
                              grids=grids)
    return record, grids[-1]


# --------------------------------------------------------------------------
# experiments

@dataclass(frozen=True)
class StabilityReport:
    alpha: float
    lambda_rate: float
    times: np.ndarray
    distance: np.ndarray
    envelope: np.ndarray
    ratio: np.ndarray
    slack: float
    worst_ratio: float
    worst_time: float
    passed: bool

    CSV_HEADER = "t,distance,envelope,ratio"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for t, d, e, q in zip(self.times, self.distance, self.envelope, self.ratio):
            lines.append(f"{t:.17g},{d:.17g},{e:.17g},{q:.17g}")
        return "\n".join(lines) + "\n"


def pair_distance(grid_a: CharGrid, grid_b: CharGrid, alpha: float,
                  origin_limit: float | None = None) -> float:
    """K^alpha distance between two grids sharing geometry.

    The sup runs over admissible nodes; the analytic xi -> 0 limit of the
    initial pair may be folded in, which is legitimate along the flow
    because first and second moments are collision invariants.
    """
    if grid_a.radius != grid_b.radius or grid_a.points != grid_b.points:
        raise DomainError("paired grids must share geometry")
    mask = grid_a.admissible_mask()
    radii = grid_a.node_radii()
    diff = np.abs(grid_a.values - grid_b.values)
    sup = float(np.max(diff[mask] / radii[mask] ** alpha)) if np.any(mask) else 0.0
    if origin_limit is not None and math.isfinite(origin_limit):
        sup = max(sup, origin_limit)
    return sup


def stability_experiment(init_a: MeasureSpec, init_b: MeasureSpec, alpha: float,
                         cfg: EvolveConfig, *, slack: float = 0.05,
                         trajectories: tuple[TrajectoryRecord, TrajectoryRecord] | None = None
                         ) -> StabilityReport:
    """Paired run checking the exponential stability envelope.

    Both trajectories run on identical node and quadrature sets; the
    envelope rate lambda_alpha comes from the non-cutoff kernel quadrature
    (the cutoff dynamics contract at least as fast for alpha <= 2).
    """
    cfg.validate()
    if trajectories is None:
        rec_a, _ = evolve(init_a, cfg)
        rec_b, _ = evolve(init_b, cfg)
    else:
        rec_a, rec_b = trajectories
    rate = lambda_alpha(cfg.kernel(), alpha)
    limit = small_xi_limit(init_a, init_b, alpha)
    if not math.isfinite(limit):
        raise DomainError("pair is not at finite K^alpha distance (moment mismatch)")
    times = rec_a.times
    dist = np.array([pair_distance(ga, gb, alpha, limit)
                     for ga, gb in zip(rec_a.grids, rec_b.grids)])
    d0 = dist[0]
    envelope = d0 * np.exp(rate * times)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(envelope > 0.0, dist / envelope, 0.0)
    worst = int(np.argmax(ratio))
    return StabilityReport(alpha=alpha, lambda_rate=rate, times=times,
                           distance=dist, envelope=envelope, ratio=ratio,
                           slack=slack, worst_ratio=float(ratio[worst]),
                           worst_time=float(times[worst]),
                           passed=bool(np.all(ratio <= 1.0 + slack)))


@dataclass(frozen=True)
class ContinuationTable:
    levels: tuple[float, ...]
    sup_diffs: tuple[float, ...]
    tail_monotone: bool

    CSV_HEADER = "n_low,n_high,sup_diff"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for lo, hi, d in zip(self.levels[:-1], self.levels[1:], self.sup_diffs):
            lines.append(f"{lo:.17g},{hi:.17g},{d:.17g}")
        return "\n".join(lines) + "\n"


def cutoff_continuation(init: MeasureSpec, cfg: EvolveConfig,
                        schedule: tuple[float, ...] = tuple(2.0 ** k for k in range(4, 13)),
                        ) -> ContinuationTable:
    """Evolve once per cutoff level and difference consecutive solutions.

    sup_diffs[k] = sup over ball nodes and record times of
    |psi_{n_{k+1}} - psi_{n_k}|; a decreasing tail witnesses convergence of
    the cutoff approximations.
    """
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise DomainError("cutoff schedule must be increasing")
    runs = []
    for n in schedule:
        rec, _ = evolve(init, replace(cfg, cutoff=float(n)))
        runs.append(rec)
    if len(runs) < 2:
        return ContinuationTable(levels=tuple(schedule), sup_diffs=(), tail_monotone=True)
    ball = runs[0].grids[0].ball_mask()
    diffs = []
    for ra, rb in zip(runs[:-1], runs[1:]):
        d = max(float(np.max(np.abs(ga.values - gb.values)[ball]))
                for ga, gb in zip(ra.grids, rb.grids))
        diffs.append(d)
    tail = diffs[-3:]
    monotone = all(b < a for a, b in zip(tail, tail[1:]))
    return ContinuationTable(levels=tuple(float(n) for n in schedule),
                             sup_diffs=tuple(diffs), tail_monotone=monotone)


# --------------------------------------------------------------------------
# persistence

def write_trajectory(record: TrajectoryRecord, cfg: EvolveConfig,
                     out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trajectory.csv").write_text(record.to_csv())
    meta = {"config": cfg.to_dict(), "format_version": FORMAT_VERSION,
            "records": len(record.grids),
            "shell_edges": [float(e) for e in record.shell_edges]}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    for i, g in enumerate(record.grids):
        write_grid(g, out / f"record_{i:04d}", s=cfg.s, alpha=cfg.alphas[0],
                   strength=cfg.strength, cutoff=cfg.cutoff)
    write_grid(record.grids[-1], out / "final", s=cfg.s, alpha=cfg.alphas[0],
               strength=cfg.strength, cutoff=cfg.cutoff)
    return out


def read_trajectory(dir_path: str | Path) -> tuple[list[tuple[float, CharGrid]], dict]:
    out = Path(dir_path)
    meta = json.loads((out / "meta.json").read_text())
    entries = []
    for i in range(int(meta["records"])):
        grid, _ = read_grid(out / f"record_{i:04d}")
        entries.append((grid.time, grid))
    return entries, meta
