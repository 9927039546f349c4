"""Probability measures, their characteristic functions, and K^alpha metrics.

A measure is a finite mixture of point masses and isotropic Gaussians; its
characteristic function is available in closed form everywhere, which is
what makes desk-scale verification of the Fourier-side estimates possible.
Grid states sample those values on a uniform cube and may keep a reference
to the analytic initial state: time evolution then only has to interpolate
the correction, not the full value (see evolve module).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import CharacteristicViolation, DomainError

FORMAT_VERSION = 1

_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class MeasureSpec:
    """Mixture of atoms and isotropic Gaussians with unit total mass."""

    atoms: tuple[tuple[tuple[float, float, float], float], ...] = ()
    gaussians: tuple[tuple[tuple[float, float, float], float, float], ...] = ()

    def __post_init__(self):
        total = math.fsum([w for _, w in self.atoms]
                          + [w for _, _, w in self.gaussians])
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise DomainError(f"weights must sum to 1, got {total!r}")
        if any(w <= 0.0 for _, w in self.atoms):
            raise DomainError("atom weights must be positive")
        if any(w <= 0.0 or v <= 0.0 for _, v, w in self.gaussians):
            raise DomainError("gaussian weights and variances must be positive")

    # arrays for the evaluators; empty (0, 3)/(0,) shapes when absent
    def atom_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.atoms:
            return np.zeros((0, 3)), np.zeros(0)
        locs = np.array([x for x, _ in self.atoms], dtype=float)
        ws = np.array([w for _, w in self.atoms], dtype=float)
        return locs, ws

    def gaussian_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.gaussians:
            return np.zeros((0, 3)), np.zeros(0), np.zeros(0)
        means = np.array([m for m, _, _ in self.gaussians], dtype=float)
        variances = np.array([v for _, v, _ in self.gaussians], dtype=float)
        ws = np.array([w for _, _, w in self.gaussians], dtype=float)
        return means, variances, ws

    def mean(self) -> np.ndarray:
        ax, aw = self.atom_arrays()
        gm, _, gw = self.gaussian_arrays()
        return aw @ ax + gw @ gm

    def second_moment(self) -> np.ndarray:
        """3x3 matrix of E[v v^T]."""
        ax, aw = self.atom_arrays()
        gm, gv, gw = self.gaussian_arrays()
        m = np.einsum("a,ai,aj->ij", aw, ax, ax)
        m += np.einsum("g,gi,gj->ij", gw, gm, gm)
        m += np.eye(3) * float(gw @ gv)
        return m

    def abs_mean_bound(self) -> float:
        """Upper bound on E|v|, used for near-origin value tolerances."""
        ax, aw = self.atom_arrays()
        gm, gv, gw = self.gaussian_arrays()
        atom_part = float(aw @ np.linalg.norm(ax, axis=1)) if len(aw) else 0.0
        gauss_part = float(gw @ (np.linalg.norm(gm, axis=1) + np.sqrt(3.0 * gv))) if len(gw) else 0.0
        return atom_part + gauss_part

    def to_dict(self) -> dict:
        return {
            "atoms": [{"x": list(x), "w": w} for x, w in self.atoms],
            "gaussians": [{"mean": list(m), "var": v, "w": w}
                          for m, v, w in self.gaussians],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MeasureSpec":
        atoms = tuple((tuple(float(c) for c in a["x"]), float(a["w"]))
                      for a in data.get("atoms", []))
        gaussians = tuple((tuple(float(c) for c in g["mean"]), float(g["var"]),
                           float(g["w"])) for g in data.get("gaussians", []))
        return cls(atoms=atoms, gaussians=gaussians)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MeasureSpec":
        return cls.from_dict(json.loads(text))


def fourier_of_measure(spec: MeasureSpec, xi) -> complex | np.ndarray:
    """Characteristic function of the measure at xi (a 3-vector or (..., 3))."""
    pts = np.asarray(xi, dtype=float)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    ax, aw = spec.atom_arrays()
    gm, gv, gw = spec.gaussian_arrays()
    out = np.zeros(pts.shape[:-1], dtype=complex)
    if len(aw):
        out += np.exp(-1j * (pts @ ax.T)) @ aw
    if len(gw):
        r2 = np.einsum("...i,...i->...", pts, pts)
        out += (np.exp(-1j * (pts @ gm.T) - 0.5 * r2[..., None] * gv)) @ gw
    return complex(out[0]) if scalar else out


@dataclass(frozen=True)
class AnalyticCharFn:
    """Closed-form characteristic function of a MeasureSpec."""

    spec: MeasureSpec

    def __call__(self, xi):
        return fourier_of_measure(self.spec, xi)

    def mean(self) -> np.ndarray:
        return self.spec.mean()

    def second_moment(self) -> np.ndarray:
        return self.spec.second_moment()


# --------------------------------------------------------------------------
# catalog

def dirac_at_origin() -> MeasureSpec:
    return MeasureSpec(atoms=(((0.0, 0.0, 0.0), 1.0),))


def maxwellian() -> MeasureSpec:
    """Standard Gaussian: characteristic function exp(-|xi|^2 / 2)."""
    return MeasureSpec(gaussians=(((0.0, 0.0, 0.0), 1.0, 1.0),))


def example_initial_datum() -> MeasureSpec:
    """Half a standard Gaussian plus six lattice atoms of weight 1/12 each."""
    w = 1.0 / 12.0
    atoms = []
    for k in range(3):
        e = [0.0, 0.0, 0.0]
        e[k] = 1.0
        atoms.append((tuple(e), w))
        atoms.append((tuple(-c for c in e), w))
    return MeasureSpec(atoms=tuple(atoms),
                       gaussians=(((0.0, 0.0, 0.0), 1.0, 0.5),))


def perturbed_example_datum() -> MeasureSpec:
    """Weight-perturbed variant of the example datum (dyadic weights).

    The +-e1 pair carries 1/8 per atom, the other two pairs 1/16 per atom;
    means still vanish and all weights are exact binary fractions.
    """
    atoms = [((1.0, 0.0, 0.0), 0.125), ((-1.0, 0.0, 0.0), 0.125),
             ((0.0, 1.0, 0.0), 0.0625), ((0.0, -1.0, 0.0), 0.0625),
             ((0.0, 0.0, 1.0), 0.0625), ((0.0, 0.0, -1.0), 0.0625)]
    return MeasureSpec(atoms=tuple(atoms),
                       gaussians=(((0.0, 0.0, 0.0), 1.0, 0.5),))


def catalog() -> dict[str, MeasureSpec]:
    return {
        "dirac": dirac_at_origin(),
        "maxwellian": maxwellian(),
        "example": example_initial_datum(),
        "perturbed_example": perturbed_example_datum(),
    }


# --------------------------------------------------------------------------
# grids

@dataclass(frozen=True)
class CharGrid:
    """Characteristic-function samples on the uniform cube {-R + k*delta}^3.

    N is even, so the origin is never a node; the value there is carried
    separately (it is a conserved quantity of the flow). The inscribed ball
    |xi| <= R is the evaluation domain of the collision operator: for
    queries inside it the post-collisional frequencies stay inside the cube.
    `base` optionally records the analytic state the grid was sampled from,
    which off-grid evaluation uses to avoid interpolating the smooth part.
    """

    radius: float
    points: int
    values: np.ndarray
    base: AnalyticCharFn | None = None
    time: float = 0.0
    psi_zero: complex = 1.0 + 0.0j
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.points < 8 or self.points % 2:
            raise DomainError("grid needs an even number of points >= 8 per axis")
        if self.radius <= 0.0:
            raise DomainError("grid radius must be positive")
        if self.values.shape != (self.points,) * 3:
            raise DomainError("values array does not match the grid shape")

    @property
    def spacing(self) -> float:
        return 2.0 * self.radius / (self.points - 1)

    @property
    def eval_radius(self) -> float:
        return self.radius

    def axis(self) -> np.ndarray:
        return np.linspace(-self.radius, self.radius, self.points)

    def nodes(self) -> np.ndarray:
        ax = self.axis()
        gx, gy, gz = np.meshgrid(ax, ax, ax, indexing="ij")
        return np.stack([gx, gy, gz], axis=-1)

    def node_radii(self) -> np.ndarray:
        return np.linalg.norm(self.nodes(), axis=-1)

    def ball_mask(self) -> np.ndarray:
        return self.node_radii() <= self.radius + 1e-12

    def admissible_mask(self, r_min: float | None = None) -> np.ndarray:
        """Nodes used for K^alpha ratios: one spacing away from 0, inside the ball."""
        r = self.node_radii()
        lo = self.spacing if r_min is None else r_min
        return (r >= lo - 1e-12) & (r <= self.radius + 1e-12)

    def hermitian_defect(self) -> float:
        mirrored = np.conj(self.values[::-1, ::-1, ::-1])
        return float(np.max(np.abs(self.values - mirrored)))

    def modulus_excess(self) -> float:
        return float(np.max(np.abs(self.values)) - 1.0)


def sample_to_grid(psi: AnalyticCharFn, radius: float, points: int) -> CharGrid:
    """Exact analytic samples of psi on the cube grid."""
    grid = CharGrid(radius=float(radius), points=int(points),
                    values=np.zeros((points,) * 3, dtype=complex), base=psi)
    values = psi(grid.nodes())
    return replace(grid, values=values)


def interpolate(grid: CharGrid, xi) -> complex | np.ndarray:
    """Trilinear interpolation of the stored grid values.

    Exact at nodes; raises DomainError for queries outside the cube. This is
    the plain public interpolant; evolution internally interpolates only the
    correction on top of the analytic base when one is available.
    """
    pts = np.asarray(xi, dtype=float)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if np.any(np.abs(pts) > grid.radius * (1.0 + 1e-12) + 1e-300):
        raise DomainError("interpolation query outside the grid cube")
    out = _trilinear(grid.values, grid.radius, grid.points, pts)
    return complex(out[0]) if scalar else out.reshape(np.asarray(xi, dtype=float).shape[:-1])


def _trilinear(values: np.ndarray, radius: float, points: int,
               pts: np.ndarray) -> np.ndarray:
    delta = 2.0 * radius / (points - 1)
    t = (pts.reshape(-1, 3) + radius) / delta
    idx = np.clip(t.astype(int), 0, points - 2)
    frac = np.clip(t - idx, 0.0, 1.0)
    i, j, k = idx[:, 0], idx[:, 1], idx[:, 2]
    fx, fy, fz = frac[:, 0], frac[:, 1], frac[:, 2]
    out = np.zeros(len(t), dtype=complex)
    for di in (0, 1):
        wx = fx if di else 1.0 - fx
        for dj in (0, 1):
            wy = fy if dj else 1.0 - fy
            for dk in (0, 1):
                wz = fz if dk else 1.0 - fz
                out += wx * wy * wz * values[i + di, j + dj, k + dk]
    return out


def evaluate_state(state, xi):
    """Evaluate a characteristic-function state at arbitrary frequencies.

    AnalyticCharFn and MeasureSpec evaluate in closed form. A CharGrid with
    an analytic base evaluates base + trilinear(correction); without one it
    falls back to plain trilinear interpolation of the stored values.
    """
    if isinstance(state, MeasureSpec):
        return fourier_of_measure(state, xi)
    if isinstance(state, AnalyticCharFn):
        return state(xi)
    if isinstance(state, CharGrid):
        if state.base is None:
            return interpolate(state, xi)
        base_vals = state.base(state.nodes())
        corr = state.values - base_vals
        corr_grid = replace(state, values=corr, base=None)
        return state.base(xi) + interpolate(corr_grid, xi)
    raise TypeError(f"cannot evaluate state of type {type(state)!r}")


# --------------------------------------------------------------------------
# K^alpha machinery

@dataclass(frozen=True)
class KAlphaReport:
    """Result of a K^alpha norm/distance evaluation on a bounded domain."""

    alpha: float
    norm: float  # math.inf flags an infinite norm
    argmax: tuple[float, float, float]
    r_min: float
    domain_radius: float
    origin_limit: float | None = None

    @property
    def finite(self) -> bool:
        return math.isfinite(self.norm)


def small_xi_limit(spec_a: MeasureSpec | None, spec_b: MeasureSpec | None,
                   alpha: float) -> float:
    """limsup of |psi_a - psi_b| / |xi|^alpha as xi -> 0, from moment data.

    A missing spec (None) stands for the constant function 1, i.e. the Dirac
    mass at the origin. Returns inf when the mean or second-moment mismatch
    makes the ratio blow up.
    """
    mean_a = spec_a.mean() if spec_a is not None else np.zeros(3)
    mean_b = spec_b.mean() if spec_b is not None else np.zeros(3)
    dm = mean_a - mean_b
    if np.linalg.norm(dm) > 1e-12:
        if alpha < 1.0:
            return 0.0
        if alpha == 1.0:
            return float(np.linalg.norm(dm))
        return math.inf
    m2_a = spec_a.second_moment() if spec_a is not None else np.zeros((3, 3))
    m2_b = spec_b.second_moment() if spec_b is not None else np.zeros((3, 3))
    dm2 = m2_a - m2_b
    if alpha < 2.0:
        return 0.0
    top = float(np.max(np.abs(np.linalg.eigvalsh(dm2))))
    if alpha == 2.0:
        return 0.5 * top
    return math.inf if top > 1e-12 else 0.0


def _specs_of(state):
    if isinstance(state, MeasureSpec):
        return state
    if isinstance(state, AnalyticCharFn):
        return state.spec
    if isinstance(state, CharGrid) and state.base is not None:
        return state.base.spec
    return None


def k_alpha_distance(psi, phi, alpha: float, *,
                     radius: float = 6.0, points: int = 32,
                     r_min: float | None = None,
                     origin_limit: float | None = None) -> KAlphaReport:
    """sup of |psi - phi| / |xi|^alpha over the sampling domain.

    Grid inputs fix the domain (both grids must share geometry); analytic
    inputs are sampled on a default cube. Radii below one grid spacing are
    excluded; for analytic pairs (or when the caller supplies one, e.g. a
    moment-conserving evolution) the xi -> 0 limit is folded into the sup.
    phi may be the literal constant 1.
    """
    if alpha <= 0.0:
        raise DomainError("k_alpha_distance requires alpha > 0")
    grids = [s for s in (psi, phi) if isinstance(s, CharGrid)]
    if len(grids) == 2:
        a, b = grids
        if a.radius != b.radius or a.points != b.points:
            raise DomainError("grids must share geometry for a K^alpha distance")
    if grids:
        domain = grids[0]
    else:
        ref = psi if not _is_constant_one(psi) else phi
        domain = sample_to_grid(_as_analytic(ref), radius, points)

    nodes = domain.nodes()
    vals_a = _values_on(psi, domain, nodes)
    vals_b = _values_on(phi, domain, nodes)
    mask = domain.admissible_mask(r_min)
    r = domain.node_radii()

    ratios = np.zeros_like(r)
    ratios[mask] = np.abs(vals_a - vals_b)[mask] / r[mask] ** alpha

    if origin_limit is None and not grids:
        sa = None if _is_constant_one(psi) else _specs_of(psi)
        sb = None if _is_constant_one(phi) else _specs_of(phi)
        if (sa is not None or _is_constant_one(psi)) and \
           (sb is not None or _is_constant_one(phi)):
            origin_limit = small_xi_limit(sa, sb, alpha)

    best = float(np.max(ratios)) if np.any(mask) else 0.0
    arg = np.unravel_index(int(np.argmax(ratios)), ratios.shape)
    argmax = tuple(float(c) for c in nodes[arg])
    if origin_limit is not None and origin_limit >= best:
        best = origin_limit
        argmax = (0.0, 0.0, 0.0)
    used_r_min = domain.spacing if r_min is None else r_min
    return KAlphaReport(alpha=alpha, norm=best, argmax=argmax, r_min=used_r_min,
                        domain_radius=domain.radius, origin_limit=origin_limit)


def _is_constant_one(state) -> bool:
    return isinstance(state, (int, float, complex)) and complex(state) == 1.0 + 0.0j


def _as_analytic(state) -> AnalyticCharFn:
    if isinstance(state, AnalyticCharFn):
        return state
    if isinstance(state, MeasureSpec):
        return AnalyticCharFn(state)
    if isinstance(state, CharGrid) and state.base is not None:
        return state.base
    raise DomainError("need an analytic state to build a sampling domain")


def _values_on(state, domain: CharGrid, nodes: np.ndarray) -> np.ndarray:
    if _is_constant_one(state):
        return np.ones(nodes.shape[:-1], dtype=complex)
    if isinstance(state, CharGrid):
        return state.values
    return evaluate_state(state, nodes)


def k_alpha_norm(state, alpha: float, **kw) -> KAlphaReport:
    """Distance to the constant function 1, i.e. the K^alpha norm of psi - 1."""
    return k_alpha_distance(state, 1.0, alpha, **kw)


# --------------------------------------------------------------------------
# characteristic-function inequality checks

@dataclass(frozen=True)
class VerificationReport:
    samples: int
    worst_product_margin: float
    worst_shift_margin: float
    witness_product: tuple
    witness_shift: tuple
    alpha: float
    norm_alpha: float


def verify_characteristic(psi, *, alpha: float = 2.0, samples: int = 10000,
                          seed: int = 0, box: float = 5.0,
                          slack: float = 1e-10) -> VerificationReport:
    """Sample (xi, eta) pairs and check the two pointwise inequalities.

    The product inequality |psi(xi)psi(eta) - psi(xi+eta)|^2 <=
    (1-|psi(xi)|^2)(1-|psi(eta)|^2) holds for every characteristic function;
    the shift inequality additionally uses the K^alpha norm of psi - 1, here
    taken as the max of the sampled sup and the analytic origin limit.
    Raises CharacteristicViolation on the first margin beyond the slack.
    """
    rng = np.random.default_rng(seed)
    xi = rng.uniform(-box, box, size=(samples, 3))
    eta = rng.uniform(-box, box, size=(samples, 3))
    p_xi = evaluate_state(psi, xi)
    p_eta = evaluate_state(psi, eta)
    p_sum = evaluate_state(psi, xi + eta)

    lhs = np.abs(p_xi * p_eta - p_sum) ** 2
    rhs = (1.0 - np.abs(p_xi) ** 2) * (1.0 - np.abs(p_eta) ** 2)
    product_margin = lhs - rhs
    worst_p = int(np.argmax(product_margin))
    if product_margin[worst_p] > slack:
        raise CharacteristicViolation(
            "product inequality violated",
            xi=tuple(xi[worst_p]), eta=tuple(eta[worst_p]),
            margin=float(product_margin[worst_p]))

    report = k_alpha_norm(psi, alpha)
    norm = report.norm
    r_xi = np.linalg.norm(xi, axis=1)
    r_eta = np.linalg.norm(eta, axis=1)
    shift_lhs = np.abs(p_xi - p_sum)
    shift_rhs = norm * (4.0 * r_xi ** (alpha / 2) * r_eta ** (alpha / 2)
                        + r_eta ** alpha)
    shift_margin = shift_lhs - shift_rhs
    worst_s = int(np.argmax(shift_margin))
    if math.isfinite(norm) and shift_margin[worst_s] > slack:
        raise CharacteristicViolation(
            "shift inequality violated",
            xi=tuple(xi[worst_s]), eta=tuple(eta[worst_s]),
            margin=float(shift_margin[worst_s]))

    return VerificationReport(
        samples=samples,
        worst_product_margin=float(product_margin[worst_p]),
        worst_shift_margin=float(shift_margin[worst_s]),
        witness_product=(tuple(xi[worst_p]), tuple(eta[worst_p])),
        witness_shift=(tuple(xi[worst_s]), tuple(eta[worst_s])),
        alpha=alpha, norm_alpha=norm)


# --------------------------------------------------------------------------
# persistence

def write_grid(grid: CharGrid, path_base: str | Path, *, s: float = math.nan,
               alpha: float = math.nan, strength: float = math.nan,
               cutoff: float = math.nan) -> tuple[Path, Path]:
    """Write values as little-endian complex doubles plus a JSON sidecar."""
    base = Path(path_base)
    bin_path = base.with_suffix(".bin")
    json_path = base.with_suffix(".json")
    bin_path.write_bytes(np.ascontiguousarray(grid.values.astype("<c16")).tobytes())
    sidecar = {
        "radius": grid.radius,
        "points": grid.points,
        "time": grid.time,
        "s": s,
        "alpha": alpha,
        "strength": strength,
        "cutoff": cutoff,
        "format_version": FORMAT_VERSION,
    }
    json_path.write_text(json.dumps(sidecar, indent=2) + "\n")
    return bin_path, json_path


def read_grid(path_base: str | Path) -> tuple[CharGrid, dict]:
    base = Path(path_base)
    sidecar = json.loads(base.with_suffix(".json").read_text())
    if sidecar.get("format_version") != FORMAT_VERSION:
        raise DomainError(f"unsupported grid format version {sidecar.get('format_version')}")
    n = int(sidecar["points"])
    raw = np.frombuffer(base.with_suffix(".bin").read_bytes(), dtype="<c16")
    values = raw.reshape((n, n, n)).astype(complex)
    grid = CharGrid(radius=float(sidecar["radius"]), points=n, values=values,
                    time=float(sidecar["time"]))
    return grid, sidecar
