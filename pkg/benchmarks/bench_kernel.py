#!/usr/bin/env python3
"""Benchmark the compiled simulation kernel against the numpy fallback.

Both backends draw the identical pinned stream, so the comparison is purely
about throughput. Results are also cross-checked for bit-identity.

Usage:
    python benchmarks/bench_kernel.py
    python benchmarks/bench_kernel.py --images 20000000 --repeats 5
"""

import argparse
import time

from qapipe._kernel import get_backend, stream_key

CASES = (
    ("single classifier", 0.187, 0.25240641711229944, 0.08708487084870847),
    ("coin flip", 0.5, 0.5, 0.5),
    ("perfect filter", 0.187, 1.0, 0.0),
)


def _time_fixed(backend, key, images, params, repeats):
    p, a, b = params
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = backend.run_fixed(key, images, p, a, b)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--images", type=int, default=10_000_000)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    backends = {}
    try:
        backends["compiled"] = get_backend("compiled")
    except (ValueError, ImportError):
        print("compiled backend unavailable; benchmarking the fallback only")
    backends["numpy"] = get_backend("numpy")

    key = stream_key(args.seed, 0)
    print(f"{args.images:,} images per run, best of {args.repeats}\n")
    print(f"{'case':<18} {'backend':<9} {'seconds':>9} {'Mimg/s':>8}")
    for name, p, a, b in CASES:
        results = {}
        for backend_name, backend in backends.items():
            seconds, counts = _time_fixed(backend, key, args.images, (p, a, b), args.repeats)
            results[backend_name] = counts
            rate = args.images / seconds / 1e6
            print(f"{name:<18} {backend_name:<9} {seconds:>9.3f} {rate:>8.1f}")
        if len(results) == 2:
            assert results["compiled"] == results["numpy"], "backends diverged"
            print(f"{'':<18} identical counts: {results['numpy'][1:]}")
    if len(backends) == 2:
        print("\nbit-identity verified on every case")


if __name__ == "__main__":
    main()
