"""Run the sigma, sample-size and curvature sweeps on the circle and write CSVs.

    python3 scripts/sweeps.py --out results/ --seeds 50 --workers 4

Each sweep writes one results file (fixed header plus ``# slope`` lines) and
prints the median sup error per cell.
"""

import argparse
import statistics
from pathlib import Path

from msmf.experiments import ExperimentConfig, run_sweep, write_results

SWEEPS = {
    "sigma": dict(radii=(10.0,), sigmas=(0.5, 0.2, 0.1, 0.05, 0.02, 0.01), ns=(300_000,)),
    "n": dict(radii=(10.0,), sigmas=(0.1,), ns=(3_000, 10_000, 30_000, 100_000, 300_000)),
    "curvature": dict(radii=(1.0, 3.0, 5.0, 7.0, 9.0, 11.0), sigmas=(0.2,), ns=(100_000,),
                      check_sigma=False),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--test-points", choices=["band", "manifold"], default="band")
    ap.add_argument("--only", choices=sorted(SWEEPS), action="append")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.only or SWEEPS:
        cfg = ExperimentConfig(manifold="circle", seeds=args.seeds,
                               test_points=args.test_points, **SWEEPS[name])
        rows = run_sweep(cfg, args.workers)
        write_results(out / f"sweep_{name}.csv", rows, cfg.fit_min_sigma)
        groups = {}
        for r in rows:
            groups.setdefault((r.manifold, r.sigma, r.n), []).append(r.sup_error)
        print(f"[{name}]")
        for (man, s, n), v in groups.items():
            print(f"  {man:18s} sigma={s:<6g} n={n:<7d} median_sup={statistics.median(v):.5f}")


if __name__ == "__main__":
    main()
