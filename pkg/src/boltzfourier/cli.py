"""Command-line entry point binding configs, catalogs and experiment runners.

Exit codes: 0 all assertions passed, 1 an in-run assertion failed,
2 unusable input (bad flags, config parse errors, missing files),
3 quadrature non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .charfn import (FORMAT_VERSION, AnalyticCharFn, MeasureSpec, catalog,
                     example_initial_datum, k_alpha_norm, verify_characteristic)
from .collision import SphereQuadrature, split_components
from .diagnostics import (COERCIVITY_EXAMPLE_LARGE, COERCIVITY_EXAMPLE_SMALL,
                          SmoothingWeight, coercivity_margin, decay_profile,
                          smoothing_trace)
from .errors import (CharacteristicViolation, DomainError, InstabilityError,
                     NonConvergenceError)
from .evolve import (EvolveConfig, cutoff_continuation, evolve,
                     read_trajectory, stability_experiment, write_trajectory)
from .kernel import (AngularKernel, QuadratureOptions, a_eps, lambda_eps_alpha,
                     moment_table)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _load_config(path: str, oracle: bool) -> EvolveConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DomainError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise DomainError(f"config parse error at line {exc.lineno}, col {exc.colno}: {exc.msg}")
    cfg = EvolveConfig.from_dict(data)
    if oracle:
        cfg = EvolveConfig.from_dict({**data, "quadrature": cfg.quadrature.doubled().to_dict()})
    return cfg


def _load_measure(path: str) -> MeasureSpec:
    try:
        return MeasureSpec.from_json(Path(path).read_text())
    except FileNotFoundError:
        raise DomainError(f"measure file not found: {path}")
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DomainError(f"measure parse error in {path}: {exc}")


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_moments(args) -> int:
    opts = QuadratureOptions()
    if args.oracle:
        opts = opts.doubled()
    table = moment_table(args.s, _float_list(args.alpha_list), opts)
    extra = None
    if args.eps_list:
        kernel = AngularKernel(s=args.s)
        rows = []
        for eps in _float_list(args.eps_list):
            rows.append((eps, args.s, a_eps(kernel, eps, opts),
                         lambda_eps_alpha(kernel, eps, 2.0, opts)))
        extra = rows
    if args.json:
        payload = {"moments": [list(r) for r in table.entries]}
        if extra is not None:
            payload["eps"] = [list(r) for r in extra]
        print(json.dumps(payload, indent=2))
    else:
        sys.stdout.write(table.to_csv())
        if extra is not None:
            sys.stdout.write("\neps,s,a_eps,lambda_eps_2\n")
            for eps, s, a, lam in extra:
                sys.stdout.write(f"{eps:.17g},{s:.17g},{a:.17g},{lam:.17g}\n")
    worst = max(r[4] for r in table.entries)
    return EXIT_OK if worst <= 1e-8 else EXIT_ASSERTION


def cmd_probe(args) -> int:
    kernel = AngularKernel(s=args.s, strength=args.strength)
    k = kernel.cutoff(args.n) if args.n is not None else kernel
    quad = SphereQuadrature.build()
    if args.oracle:
        quad = quad.doubled()
    state = _load_measure(args.init) if args.init else example_initial_datum()
    xi = np.array(_float_list(args.xi))
    if xi.shape != (3,):
        raise DomainError("--xi needs three comma-separated components")
    result = split_components(AnalyticCharFn(state), xi, k, args.eps, args.alpha, quad)
    print(json.dumps(result.to_dict(), indent=2))
    return EXIT_OK


def cmd_evolve(args) -> int:
    cfg = _load_config(args.config, args.oracle)
    init = _load_measure(args.init) if args.init else example_initial_datum()
    record, _ = evolve(init, cfg)
    out = write_trajectory(record, cfg, args.out_dir)
    print(f"trajectory written to {out}")
    return EXIT_OK


def cmd_stability(args) -> int:
    cfg = _load_config(args.config, args.oracle)
    init_a = _load_measure(args.init_a)
    init_b = _load_measure(args.init_b)
    report = stability_experiment(init_a, init_b, args.alpha, cfg)
    out = Path(args.out) if args.out else None
    text = report.to_csv()
    if out:
        out.write_text(text)
    else:
        sys.stdout.write(text)
    print(f"worst ratio {report.worst_ratio:.6f} at t={report.worst_time:.4f} "
          f"(lambda_alpha={report.lambda_rate:.6f})", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_ASSERTION


def cmd_cutoff_sweep(args) -> int:
    cfg = _load_config(args.config, args.oracle)
    init = _load_measure(args.init) if args.init else example_initial_datum()
    schedule = tuple(_float_list(args.schedule)) if args.schedule \
        else tuple(2.0 ** k for k in range(4, 13))
    table = cutoff_continuation(init, cfg, schedule)
    text = table.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if not table.tail_monotone:
        print("warning: difference tail is not monotone "
              "(quadrature under-resolution)", file=sys.stderr)
    return EXIT_OK


def _load_states(traj_dir: str):
    try:
        return read_trajectory(traj_dir)
    except FileNotFoundError:
        raise DomainError(f"trajectory directory not usable: {traj_dir}")


def cmd_coercivity(args) -> int:
    states, _ = _load_states(args.trajectory_dir)
    report = coercivity_margin(states)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def cmd_smoothing(args) -> int:
    states, meta = _load_states(args.trajectory_dir)
    horizon = max(t for t, _ in states)
    w = SmoothingWeight(n=args.N, horizon=max(horizon, 1e-9), delta=args.delta)
    trace = smoothing_trace(states, w)
    text = trace.to_csv() + "# " + json.dumps({"fitted_C": trace.fitted_c}) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_example(args) -> int:
    """Full pipeline on the example datum; nonzero exit on any failed check."""
    failures = []

    def check(name, ok):
        print(f"  [{'ok' if ok else 'FAIL'}] {name}")
        if not ok:
            failures.append(name)

    spec = example_initial_datum()
    psi = AnalyticCharFn(spec)
    print("example datum checks:")

    norm2 = k_alpha_norm(psi, 2.0, radius=4.0, points=24)
    check("K^2 norm of psi0 - 1 equals 1/3", abs(norm2.norm - 1.0 / 3.0) < 1e-4)

    from .charfn import sample_to_grid
    grid = sample_to_grid(psi, 6.0, 32)
    radii = grid.node_radii()
    vals = np.abs(grid.values)
    small = (radii >= grid.spacing) & (radii <= 1.0)
    large = (radii > 1.0) & (radii <= grid.radius)
    check("small-frequency coercivity constant",
          bool(np.all((1.0 - vals[small]) / radii[small] ** 2
                      >= COERCIVITY_EXAMPLE_SMALL - 1e-6)))
    check("large-frequency coercivity floor",
          bool(np.all(1.0 - vals[large] >= COERCIVITY_EXAMPLE_LARGE - 1e-6)))

    try:
        verify_characteristic(psi, seed=args.seed)
        check("characteristic inequalities on sampled pairs", True)
    except CharacteristicViolation:
        check("characteristic inequalities on sampled pairs", False)

    cfg = EvolveConfig(s=1.0, cutoff=16.0, radius=4.0, points=args.points,
                       horizon=args.horizon, cadence=max(4.0, 2.0 / args.horizon),
                       alphas=(2.0, 1.0))
    record, final = evolve(spec, cfg)
    check("conservation residual is zero",
          bool(np.all(record.conservation_residual == 0.0)))
    check("modulus stays within 1 + 1e-8",
          bool(np.all(record.modulus_excess <= 1e-8)))
    outer = record.outer_shell_sup()
    check("outer-shell sup decreases", bool(np.all(np.diff(outer) < 0.0)))

    states = [(t, g) for t, g in zip(record.times, record.grids)]
    co = coercivity_margin(states)
    check("coercivity margin positive", co.d_t > 0.0)
    w = SmoothingWeight(n=4, horizon=max(record.times[-1], 1e-9), delta=1e-2)
    trace = smoothing_trace(states, w)
    check("weighted trace finite with fitted C",
          bool(np.all(np.isfinite(trace.weighted))) and math.isfinite(trace.fitted_c))
    profile = decay_profile(final)
    check("decay profile computed", profile.decay_order >= 0)

    if failures:
        print(f"{len(failures)} check(s) failed: {failures}", file=sys.stderr)
        return EXIT_ASSERTION
    print("all example checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boltzfourier",
                                description=__doc__.splitlines()[0])
    p.add_argument("--version", action="store_true",
                   help="print package and artifact format versions")
    p.add_argument("--workers", type=int, default=None,
                   help="numba thread count (also BOLTZFOURIER_WORKERS)")
    sub = p.add_subparsers(dest="command")

    m = sub.add_parser("moments", help="moment-identity table")
    m.add_argument("--s", type=float, required=True)
    m.add_argument("--alpha-list", default="0.5,1,2,4")
    m.add_argument("--eps-list", default=None)
    m.add_argument("--json", action="store_true")
    m.add_argument("--csv", dest="json", action="store_false")
    m.add_argument("--oracle", action="store_true")
    m.set_defaults(func=cmd_moments)

    pr = sub.add_parser("probe", help="collision split at one frequency")
    pr.add_argument("--xi", required=True)
    pr.add_argument("--eps", type=float, required=True)
    pr.add_argument("--alpha", type=float, default=2.0)
    pr.add_argument("--s", type=float, default=1.0)
    pr.add_argument("--strength", type=float, default=1.0)
    pr.add_argument("--n", type=float, default=None)
    pr.add_argument("--init", default=None)
    pr.add_argument("--oracle", action="store_true")
    pr.set_defaults(func=cmd_probe)

    ev = sub.add_parser("evolve", help="run one trajectory")
    ev.add_argument("--config", required=True)
    ev.add_argument("--init", default=None)
    ev.add_argument("--out-dir", required=True)
    ev.add_argument("--oracle", action="store_true")
    ev.set_defaults(func=cmd_evolve)

    st = sub.add_parser("stability", help="paired-run stability envelope")
    st.add_argument("--init-a", required=True)
    st.add_argument("--init-b", required=True)
    st.add_argument("--alpha", type=float, required=True)
    st.add_argument("--config", required=True)
    st.add_argument("--out", default=None)
    st.add_argument("--oracle", action="store_true")
    st.set_defaults(func=cmd_stability)

    cs = sub.add_parser("cutoff-sweep", help="cutoff-continuation differences")
    cs.add_argument("--config", required=True)
    cs.add_argument("--init", default=None)
    cs.add_argument("--schedule", default=None)
    cs.add_argument("--out", default=None)
    cs.add_argument("--oracle", action="store_true")
    cs.set_defaults(func=cmd_cutoff_sweep)

    co = sub.add_parser("coercivity", help="coercivity margin of a trajectory")
    co.add_argument("--trajectory-dir", required=True)
    co.set_defaults(func=cmd_coercivity)

    sm = sub.add_parser("smoothing", help="weighted-trace diagnostics")
    sm.add_argument("--trajectory-dir", required=True)
    sm.add_argument("--N", type=int, default=4)
    sm.add_argument("--delta", type=float, default=1e-2)
    sm.add_argument("--out", default=None)
    sm.set_defaults(func=cmd_smoothing)

    ex = sub.add_parser("example", help="full example-datum pipeline")
    ex.add_argument("--seed", type=int, default=0)
    ex.add_argument("--points", type=int, default=12)
    ex.add_argument("--horizon", type=float, default=0.3)
    ex.set_defaults(func=cmd_example)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers or os.environ.get("BOLTZFOURIER_WORKERS"):
        import numba
        numba.set_num_threads(int(args.workers or os.environ["BOLTZFOURIER_WORKERS"]))
    if args.version:
        print(f"boltzfourier {__version__} (artifact format {FORMAT_VERSION})")
        return EXIT_OK
    if not getattr(args, "command", None):
        parser.print_help()
        return EXIT_USAGE
    try:
        return args.func(args)
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        print(f"numerical non-convergence: {exc} "
              f"(achieved estimate {exc.estimate})", file=sys.stderr)
        return EXIT_NUMERICAL
    except (CharacteristicViolation, InstabilityError, AssertionError) as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return EXIT_ASSERTION


if __name__ == "__main__":
    sys.exit(main())
