"""Time GBT training with the compiled and the pure-NumPy split kernels.

    python3 benchmarks/bench_kernels.py --rows 9000 --features 51 --trees 50

Both kernels must produce byte-identical models; the script checks that
before printing the timings.
"""

import argparse
import time

import numpy as np

from affectkit import _kernels
from affectkit.gbt import train_gbt


def make_data(rows, features, seed):
    rng = np.random.default_rng(seed)
    # frequency-like features: many zeros and repeated values, as in POS/lexicon blocks
    X = np.round(rng.random((rows, features)) * (rng.random((rows, features)) < 0.4), 2)
    w = rng.normal(size=features)
    y = (X @ w + rng.normal(scale=0.5, size=rows) > np.median(X @ w)).astype(int)
    return X, y


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=9000)
    ap.add_argument("--features", type=int, default=51)
    ap.add_argument("--trees", type=int, default=50)
    ap.add_argument("--depth", type=int, default=6)
    ap.add_argument("--repeat", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    X, y = make_data(args.rows, args.features, args.seed)
    backends = _kernels.backends()
    print(f"data: {args.rows} rows x {args.features} features; {args.trees} trees, depth {args.depth}")
    print(f"default backend: {_kernels.BACKEND}; available: {', '.join(sorted(backends))}")
    timings, dumps = {}, {}
    for name, kernel in sorted(backends.items()):
        best = float("inf")
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            model = train_gbt(X, y, args.trees, 0.05, args.depth, kernel=kernel)
            best = min(best, time.perf_counter() - t0)
        timings[name] = best
        dumps[name] = model.dumps()
    if len(set(dumps.values())) != 1:
        raise SystemExit("backends disagree: models differ")
    for name, t in timings.items():
        print(f"{name:8s} {t:8.3f} s  ({t / args.trees * 1000:.1f} ms/tree)")
    if "cython" in timings and "python" in timings:
        print(f"speedup  {timings['python'] / timings['cython']:.1f}x")


if __name__ == "__main__":
    main()
