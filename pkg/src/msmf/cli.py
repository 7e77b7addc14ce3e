"""Command-line driver: ``msmf {generate,fit,sweep,oracle}``.

Exit codes: 0 success, 1 an oracle check failed, 2 bad input or
configuration, 3 more than half of the fit queries had empty
neighbourhoods.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from . import geometry as geo
from .estimator import default_index, estimate_batch, resolve_workers
from .experiments import ExperimentConfig, oracle_checks, run_sweep, write_results
from .kernel import Cutoff, KernelConfig
from .sampling import (
    NoiseConfig,
    PointCloudFormatError,
    Provenance,
    SigmaTooLarge,
    add_noise,
    read_point_cloud,
    sample_on_manifold_test_points,
    sample_test_points,
    sample_uniform,
    write_point_cloud,
)

log = logging.getLogger("msmf")


class ConfigError(Exception):
    pass


def _manifold_args(p, repeat_radius=False):
    p.add_argument("--manifold", choices=["circle", "sphere", "torus", "quartic"], default="circle")
    if repeat_radius:
        p.add_argument("--radius", type=float, action="append",
                       help="circle/sphere radius (repeatable for curvature sweeps)")
    else:
        p.add_argument("--radius", type=float, default=None)
    p.add_argument("--major", type=float, default=2.0)
    p.add_argument("--minor", type=float, default=1.0)
    p.add_argument("--extent", type=float, default=1.25, help="quartic piece |x|,|y| <= extent")
    p.add_argument("--dim", type=int, default=None, help="ambient dimension override")


def _kernel_args(p):
    p.add_argument("--cutoff", choices=["hard", "smooth"], default="hard")
    p.add_argument("--rho0", type=float, default=0.9)
    p.add_argument("--threads", type=int, default=None, help="workers (default: $MSMF_THREADS or 1)")


def _manifold(args):
    radius = args.radius if args.radius is not None else (10.0 if args.manifold == "circle" else 5.0)
    try:
        if args.manifold == "circle":
            return geo.circle(radius, args.dim or 2)
        if args.manifold == "sphere":
            return geo.sphere(radius, args.dim or 3)
        if args.manifold == "torus":
            return geo.torus(args.major, args.minor, args.dim or 3)
        return geo.fermat_quartic(args.extent)
    except ValueError as exc:
        raise ConfigError(str(exc))


def cmd_generate(args) -> int:
    m = _manifold(args)
    noise = NoiseConfig(args.sigma)
    latent = sample_uniform(m, args.n, args.seed)
    observed = add_noise(latent, noise, args.seed)
    if args.test_points == "band":
        test = sample_test_points(m, noise, args.n0, args.seed)
    else:
        test = sample_on_manifold_test_points(m, args.n0, args.seed)
    write_point_cloud(args.cloud, observed)
    write_point_cloud(args.test, test)
    if args.latent:
        write_point_cloud(args.latent, latent)
    print(f"wrote {args.n} observations to {args.cloud} and {args.n0} test points to {args.test}")
    return 0


def cmd_fit(args) -> int:
    try:
        cloud = read_point_cloud(args.cloud, Provenance.NOISY)
        test = read_point_cloud(args.test, Provenance.TEST)
    except FileNotFoundError as exc:
        print(f"error: cannot read {exc.filename}", file=sys.stderr)
        return 2
    except PointCloudFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cloud.ambient_dim != test.ambient_dim:
        print("error: cloud and test points differ in dimension", file=sys.stderr)
        return 2
    if len(cloud) == 0 or len(test) == 0:
        print("error: empty input", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    cfg = KernelConfig(args.sigma, cloud.ambient_dim, Cutoff(args.cutoff), args.rho0)
    idx = default_index(cloud, cfg)
    results = estimate_batch(idx, test, cfg, resolve_workers(args.threads))
    fitted = [r.Fz for r in results if r.ok]
    empty = len(results) - len(fitted)
    write_point_cloud(args.out, np.array(fitted) if fitted else np.zeros((0, cloud.ambient_dim)))
    elapsed = time.perf_counter() - t0
    print(f"points={len(results)} estimated={len(fitted)} empty_neighborhoods={empty} "
          f"r={cfg.r:.6g} wall_s={elapsed:.3f}")
    if empty * 2 > len(results):
        print("error: more than half of the queries had empty neighborhoods", file=sys.stderr)
        return 3
    return 0


def cmd_sweep(args) -> int:
    radii = tuple(args.radius) if args.radius else ((10.0,) if args.manifold == "circle" else (5.0,))
    try:
        cfg = ExperimentConfig(
            manifold=args.manifold, radii=radii, major=args.major, minor=args.minor,
            extent=args.extent, ambient_dim=args.dim,
            sigmas=tuple(args.sigma or (0.1,)), ns=tuple(args.n or (30000,)),
            n0=args.n0, seeds=args.seeds, base_seed=args.base_seed,
            cutoff=Cutoff(args.cutoff), rho0=args.rho0, test_points=args.test_points,
            check_sigma=not args.no_sigma_check, fit_min_sigma=args.fit_min_sigma,
            timing=not args.no_timing, out=args.out,
        )
    except (ValueError, SigmaTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rows = run_sweep(cfg, resolve_workers(args.threads))
    write_results(args.out, rows, cfg.fit_min_sigma)
    print(f"wrote {len(rows)} cells to {args.out}")
    return 0


def cmd_oracle(args) -> int:
    m = _manifold(args)
    if m.kind is geo.Kind.FERMAT_QUARTIC:
        print("error: population oracles need a parametrized manifold", file=sys.stderr)
        return 2
    try:
        NoiseConfig(args.sigma).check(m)
    except SigmaTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    failed = 0
    for chk in oracle_checks(m, args.sigma, args.resolution):
        print(f"{'PASS' if chk.passed else 'FAIL'} {chk.name} {chk.detail}")
        failed += not chk.passed
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="msmf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a noisy cloud and test points")
    _manifold_args(p)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--n", type=int, default=30000)
    p.add_argument("--n0", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-points", choices=["band", "manifold"], default="band")
    p.add_argument("--cloud", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--latent", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="estimate F(z) for test points from an observed cloud")
    p.add_argument("--cloud", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--out", required=True)
    _kernel_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweep", help="run a sigma / N / curvature sweep")
    _manifold_args(p, repeat_radius=True)
    p.add_argument("--sigma", type=float, action="append")
    p.add_argument("--n", type=int, action="append")
    p.add_argument("--n0", type=int, default=100)
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--test-points", choices=["band", "manifold"], default="band")
    p.add_argument("--no-sigma-check", action="store_true",
                   help="allow sigmas above sigma_0 for the chosen manifold")
    p.add_argument("--fit-min-sigma", type=float, default=0.02,
                   help="sigmas below this are left out of the slope fit")
    p.add_argument("--no-timing", action="store_true", help="write runtime_ms as 0")
    p.add_argument("--out", required=True)
    _kernel_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="population-level oracle checks")
    _manifold_args(p)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--resolution", type=int, default=None)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
