"""Compare the compiled and numpy backends on the hot kernels.

    python3 benchmarks/bench_kernels.py [--n 20000] [--repeat 5]
"""
import argparse
import time

import numpy as np

from annulus_sle import _kernels_py

try:
    from annulus_sle import _core
except ImportError:  # extension not built
    _core = None


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--r", type=float, default=2.0)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    z = rng.uniform(-np.pi, np.pi, args.n) + 1j * rng.uniform(0.05, args.r - 0.05, args.n)
    xi = rng.normal(size=args.n)
    cases = {
        "theta_jet(nder=2)": lambda m: m.theta_jet(args.r, z, 0, 2, 1e-15, 200),
        "loewner_h": lambda m: m.loewner_h(args.r, z, 1e-15, 200),
        "rk4_step": lambda m: m.rk4_step(z, xi, args.r, 1e-4, 1e-15, 200),
    }
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}")
    for name, fn in cases.items():
        tp = _time(lambda: fn(_kernels_py), args.repeat) * 1e3
        if _core is None:
            print(f"{name:<20}{tp:>12.2f}{'n/a':>13}{'':>9}")
            continue
        tc = _time(lambda: fn(_core), args.repeat) * 1e3
        print(f"{name:<20}{tp:>12.2f}{tc:>13.2f}{tp / tc:>9.1f}")


if __name__ == "__main__":
    main()
