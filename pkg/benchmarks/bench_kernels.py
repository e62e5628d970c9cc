"""Time the compiled kernels against the numpy fallback.

Each kernel is run on identical inputs under both backends; the script
checks that results agree and reports the best-of-N wall time and speedup.

    python benchmarks/bench_kernels.py --n 150 --p 50 --repeat 5
"""
import argparse
import time

import numpy as np

from arsk._backend import get_kernels
from arsk.simgen import SimConfig, gen_dataset
from arsk.solver import ArskOptions, fit


def best_time(func, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        func()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_cases(X, K, rng):
    n = X.shape[0]
    u = rng.random((20, K))
    C = X[rng.choice(n, K, replace=False)]
    codes = rng.integers(0, K, n).astype(np.int64)
    codes[:K] = np.arange(K)
    E0 = np.zeros_like(X)
    return {
        "lloyd": lambda k: k.lloyd(X, C.copy(), 100, 1e-8)[2],
        "kmeans_best (20 restarts)": lambda k: k.kmeans_best(X, K, u, 100, 1e-8)[2],
        "e_update (soft)": lambda k: k.e_update(X, codes, K, E0, 3.0, 3.7, False, 1e-6, 100)[0],
        "e_update (scad)": lambda k: k.e_update(X, codes, K, E0, 3.0, 3.7, True, 1e-6, 100)[0],
        "column_bcss": lambda k: k.column_bcss(X, codes, K),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=150, help="observations (K * n_per_cluster)")
    parser.add_argument("--p", type=int, default=50)
    parser.add_argument("--k", type=int, default=3)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--skip-fit", action="store_true", help="only time the kernels")
    args = parser.parse_args()

    try:
        cy = get_kernels("cython")
    except ImportError:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    py = get_kernels("python")

    cfg = SimConfig(K=args.k, n_per_cluster=args.n // args.k, p=args.p, q=min(5, args.p), pi=0.1, seed=args.seed)
    X = np.ascontiguousarray(gen_dataset(cfg).X.values)
    rng = np.random.default_rng(args.seed)
    print(f"n={X.shape[0]} p={X.shape[1]} K={args.k} best of {args.repeat}")
    print(f"{'kernel':28s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}  agree")
    for name, call in kernel_cases(X, args.k, rng).items():
        agree = np.allclose(call(py), call(cy), rtol=1e-9, atol=1e-9)
        tp = best_time(lambda: call(py), args.repeat)
        tc = best_time(lambda: call(cy), args.repeat)
        print(f"{name:28s} {tp * 1e3:10.2f} {tc * 1e3:10.2f} {tp / tc:8.1f}  {agree}")

    if not args.skip_fit:
        # a whole fit goes through the module-level backend, so swap it in place
        import arsk._backend as backend

        opts = ArskOptions(K=args.k).with_lambdas(3.0, 50.0)
        times = {}
        for name, kern in (("python", py), ("cython", cy)):
            backend.kernels = kern
            times[name] = best_time(lambda: fit(X, opts), max(1, args.repeat // 2))
        backend.kernels = cy
        print(f"{'fit (lambda1=3, lambda2=50)':28s} {times['python'] * 1e3:10.2f} "
              f"{times['cython'] * 1e3:10.2f} {times['python'] / times['cython']:8.1f}")


if __name__ == "__main__":
    main()
