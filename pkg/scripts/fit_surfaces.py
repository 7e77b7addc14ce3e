"""Denoise clouds on the torus and the Fermat quartic piece; compare to the input noise.

    python3 scripts/fit_surfaces.py --seeds 10

For each sigma prints the median (over seeds) sup distance of the fitted test
points to the surface and of the noisy cloud itself.
"""

import argparse
import statistics

from msmf import geometry as geo
from msmf.estimator import default_index, estimate_batch
from msmf.kernel import KernelConfig
from msmf.metrics import sup_distance_to_manifold
from msmf.sampling import NoiseConfig, add_noise, sample_test_points, sample_uniform

CASES = {
    "torus": (lambda: geo.torus(2.0, 1.0), (0.1, 0.08, 0.06), 25_000),
    "quartic": (lambda: geo.fermat_quartic(), (0.04, 0.03, 0.02), 300_000),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--n0", type=int, default=100)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    for name, (make, sigmas, n) in CASES.items():
        m = make()
        for s in sigmas:
            fitted, noisy_sup = [], []
            for seed in range(args.seeds):
                noise = NoiseConfig(s)
                noisy = add_noise(sample_uniform(m, n, seed), noise, seed)
                test = sample_test_points(m, noise, args.n0, seed)
                cfg = KernelConfig(s, m.ambient_dim)
                res = estimate_batch(default_index(noisy, cfg), test, cfg, args.workers)
                fitted.append(sup_distance_to_manifold([r.Fz for r in res if r.ok], m))
                noisy_sup.append(sup_distance_to_manifold(noisy, m))
            print(f"{name:8s} sigma={s:<5g} n={n:<7d} fitted={statistics.median(fitted):.5f} "
                  f"input={statistics.median(noisy_sup):.5f} 5sigma^2={5 * s * s:.5f}")


if __name__ == "__main__":
    main()
