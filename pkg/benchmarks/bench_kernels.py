"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py --size 128 --repeat 5

Prints one row per kernel with the best-of-``repeat`` time for each
backend, their ratio, and the largest relative difference in the outputs.
"""

import argparse
import time

import numpy as np

from wake_radon import _backend
from wake_radon.geometry import RadonGrid, _trig


def best_of(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def kernel_calls(k, grid, img, rad, nthreads):
    cos_t, sin_t = _trig(grid.n_theta)
    r = grid.r_values
    return {
        "forward_project": lambda: k.forward_project(img, cos_t, sin_t, r, grid.r_max, nthreads),
        "backproject": lambda: k.backproject(rad, cos_t, sin_t, r[0], grid.dr, grid.size, nthreads),
        "backproject_adjoint": lambda: k.backproject_adjoint(
            img, cos_t, sin_t, r[0], grid.dr, grid.n_r, nthreads),
        "cauchy_prox": lambda: k.cauchy_prox(40.0 * rad, 0.01, 39.4, nthreads),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    names = _backend.available()
    if "compiled" not in names:
        print("compiled extension not built; nothing to compare")
        return 1
    grid = RadonGrid(args.size)
    rng = np.random.default_rng(0)
    img = rng.standard_normal((args.size, args.size))
    rad = rng.standard_normal(grid.shape)

    timings = {}
    outputs = {}
    for name in ("compiled", "python"):
        calls = kernel_calls(_backend.get(name), grid, img, rad, args.threads)
        for kname, fn in calls.items():
            fn()  # warm caches
            timings[name, kname], outputs[name, kname] = best_of(fn, args.repeat)

    print(f"M={args.size}, n_theta={grid.n_theta}, n_r={grid.n_r}, threads={args.threads}")
    print(f"{'kernel':<22}{'compiled [ms]':>15}{'numpy [ms]':>13}{'speedup':>10}{'max rel diff':>15}")
    for kname in ("forward_project", "backproject", "backproject_adjoint", "cauchy_prox"):
        tc, tp = timings["compiled", kname], timings["python", kname]
        a, b = outputs["compiled", kname], outputs["python", kname]
        diff = float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
        print(f"{kname:<22}{1e3 * tc:15.2f}{1e3 * tp:13.2f}{tp / tc:10.1f}{diff:15.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
