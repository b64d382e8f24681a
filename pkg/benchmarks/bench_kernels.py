"""Compare the compiled bit-packed kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--sizes 200x160 1000x800] [--rank 25]
"""
import argparse
import timeit

import numpy as np

from fdrbmf import _kernels_py

try:
    from fdrbmf import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def _bench(fn, args, repeat):
    t = timeit.repeat(lambda: fn(*args), number=1, repeat=repeat)
    return min(t)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", nargs="+", default=["200x160", "400x320", "1000x800"])
    parser.add_argument("--rank", type=int, default=25)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    if _kernels_c is None:
        print("compiled kernels not built; only the numpy fallback is available")
    rng = np.random.default_rng(args.seed)

    print(f"{'size':>10} {'kernel':>16} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}")
    for size in args.sizes:
        m, n = (int(v) for v in size.split("x"))
        D = (rng.random((m, n)) < 0.1).astype(np.uint8)
        X = (rng.random((n, args.rank)) < 0.1).astype(np.uint8)
        Y = (rng.random((m, args.rank)) < 0.1).astype(np.uint8)
        block = np.ascontiguousarray(D[: m // 10, : n // 10])
        cases = [
            ("boolean_product", (X, Y)),
            ("residual", (D, X, Y)),
            ("eta (full)", (D,)),
            ("eta (tile)", (block,)),
        ]
        for name, call_args in cases:
            attr = name.split()[0]
            t_py = _bench(getattr(_kernels_py, attr), call_args, args.repeat)
            if _kernels_c is not None:
                t_c = _bench(getattr(_kernels_c, attr), call_args, args.repeat)
                # both backends must agree before their times mean anything
                assert np.array_equal(
                    np.asarray(getattr(_kernels_py, attr)(*call_args)),
                    np.asarray(getattr(_kernels_c, attr)(*call_args)),
                ), name
                print(f"{size:>10} {name:>16} {t_py * 1e3:10.3f} {t_c * 1e3:10.3f} {t_py / t_c:8.2f}")
            else:
                print(f"{size:>10} {name:>16} {t_py * 1e3:10.3f} {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
