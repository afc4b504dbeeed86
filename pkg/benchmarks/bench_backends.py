"""Time the numba kernels against the numpy fallback.

Usage: python3 benchmarks/bench_backends.py [--n 1000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lpci import ScenarioSpec, TestConfig, _accel, generate, run_test


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--d", type=int, default=5)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    a = rng.standard_normal((args.n, args.d))
    b = rng.standard_normal((args.n, args.d))
    data = generate(ScenarioSpec("illus_h0", args.n, d_z=args.d, rng_seed=1))
    cases = {
        "sq_dists (n x n)": lambda: _accel.sq_dists(a, b),
        "sq_dists_self (n x n)": lambda: _accel.sq_dists_self(a),
        "condensed_dists": lambda: _accel.condensed_dists(a),
        "gaussian_cross (n x n)": lambda: _accel.gaussian_cross(a, b, 1.3),
        "run_test (full pipeline)": lambda: run_test(data.x, data.y, data.z, TestConfig(seed=1)),
    }

    backends = ["numpy"] + (["numba"] if _accel.NUMBA_AVAILABLE else [])
    results = {}
    for name in backends:
        _accel.set_backend(name)
        for fn in cases.values():
            fn()  # warm-up (numba compilation)
        results[name] = {label: best_of(fn, args.repeat) for label, fn in cases.items()}

    print(f"n={args.n}, d={args.d}, best of {args.repeat}")
    header = f"{'case':<28}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else "")
    print(header)
    for label in cases:
        row = f"{label:<28}" + "".join(f"{results[b][label] * 1e3:>10.2f}ms" for b in backends)
        if len(backends) > 1:
            row += f"{results['numpy'][label] / results['numba'][label]:>11.2f}x"
        print(row)


if __name__ == "__main__":
    main()
