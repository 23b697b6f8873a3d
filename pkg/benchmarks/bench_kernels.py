"""Compare the compiled kernel against the NumPy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeats 5]

Times the two hot kernels on synthetic unit vectors at the shapes the
matcher and the refinement loop actually hit.
"""

import argparse
import time

import numpy as np

from dmner import _kernels


def unit_rows(rng, n, d):
    m = rng.standard_normal((n, d))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def best_of(func, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if "native" not in _kernels.available_backends():
        print("compiled kernel not built; nothing to compare")
        return

    rng = np.random.default_rng(1)
    scenarios = [
        ("nearest_scan  2k q x 20k e, d=64", "scan", 2000, 20000, 64),
        ("nearest_scan  500 q x 5k e, d=256", "scan", 500, 5000, 256),
        ("matvec        30 dev x d=64, 10k calls", "matvec", 30, 10000, 64),
    ]
    print(f"{'workload':<42} {'numpy':>10} {'native':>10} {'ratio':>7}")
    for label, kind, a, b, d in scenarios:
        if kind == "scan":
            queries = unit_rows(rng, a, d)
            entries = unit_rows(rng, b, d)
            runs = {}
            for backend in ("numpy", "native"):
                _kernels.use_backend(backend)
                runs[backend] = best_of(lambda: _kernels.nearest_scan(queries, entries),
                                        args.repeats)
            check_q, check_e = queries[:64], entries[:512]
            _kernels.use_backend("numpy")
            idx_a, _ = _kernels.nearest_scan(check_q, check_e)
            _kernels.use_backend("native")
            idx_b, _ = _kernels.nearest_scan(check_q, check_e)
            assert np.array_equal(idx_a, idx_b), "backends disagree"
        else:
            mat = unit_rows(rng, a, d)
            vecs = unit_rows(rng, b, d)
            runs = {}
            for backend in ("numpy", "native"):
                _kernels.use_backend(backend)

                def loop():
                    for v in vecs:
                        _kernels.matvec(mat, v)

                runs[backend] = best_of(loop, args.repeats)
        _kernels.use_backend("auto")
        ratio = runs["numpy"] / runs["native"]
        print(f"{label:<42} {runs['numpy'] * 1e3:>8.1f}ms {runs['native'] * 1e3:>8.1f}ms "
              f"{ratio:>6.2f}x")


if __name__ == "__main__":
    main()
