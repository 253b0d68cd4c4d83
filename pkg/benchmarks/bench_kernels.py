"""Time the numba kernel against the numpy fallback on the same workload.

    python3 benchmarks/bench_kernels.py --samples 2048 --k 2
"""

import argparse
import time

import numpy as np

from kolab import coefficients as cf
from kolab.hilbert import SpectralModel
from kolab.kernels import available_backends
from kolab.sde_engine import DerivativeRequest, simulate_samples


def workload(n, k, drift):
    model = SpectralModel.laplacian(n)
    F = {"smooth": cf.SmoothBoundedDrift(1.5, np.full(n, 0.8), np.linspace(1, 0.2, n)),
         "nemytskii": cf.NemytskiiPoly(n, 1.0, 2.0)}[drift]
    B = cf.SmoothBoundedDiffusion(0.5 * np.eye(n), 0.3, np.linspace(0.5, -0.5, n), np.eye(n))
    req = DerivativeRequest(np.full(n, 0.25), tuple(model.rough_directions(k)))
    return model, F, B, req


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--samples", type=int, default=2048)
    ap.add_argument("--steps", type=int, default=256)
    ap.add_argument("--drift", choices=["smooth", "nemytskii"], default="smooth")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    model, F, B, req = workload(args.n, args.k, args.drift)
    results = {}
    for backend in available_backends():
        simulate_samples(model, F, B, req, 1.0, args.steps, 0, 8, backend=backend)  # compile / warm up
        best = float("inf")
        for _ in range(args.repeat):
            start = time.perf_counter()
            out = simulate_samples(model, F, B, req, 1.0, args.steps, 0, args.samples, backend=backend)
            best = min(best, time.perf_counter() - start)
        results[backend] = (best, out)
        print(f"{backend:6s} {best:8.3f} s  ({args.samples} samples, {args.steps} steps, N={args.n}, k={args.k})")
    if len(results) == 2:
        (tn, a), (tb, b) = results["numpy"], results["numba"]
        print(f"speedup numba/numpy: {tn / tb:.1f}x, max abs difference {np.max(np.abs(a - b)):.1e}")


if __name__ == "__main__":
    main()
