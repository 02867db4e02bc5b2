"""Time the compiled and pure-Python radial kernels on identical inputs.

Usage: python3 benchmarks/bench_kernels.py [--sizes 1024 4096 16384] [--repeat 50]
"""
import argparse
import timeit

import numpy as np

from radialflow import _pykernels

try:
    from radialflow import _ckernels
except ImportError:
    _ckernels = None


def inputs(size, rng):
    t = np.linspace(0.0, 12.0, size)
    f = np.exp(-t) * (1.0 + 0.1 * rng.standard_normal(size))
    resistance = np.cumsum(np.abs(f[::-1]))[::-1] * 1e-3 + 1e-6
    areas = np.cos(3 * t) + 0.01 * t
    return t, f, resistance, areas


def cases(mod, data):
    t, f, res, areas = data
    h = t[1] - t[0]
    base = np.ones(t.size)
    return {
        "reverse_cumulative_quad": lambda: mod.reverse_cumulative_quad(f, h),
        "flow_update": lambda: mod.flow_update(base.copy(), res, res[t.size // 3], 0.9, 0.05),
        "local_minima": lambda: mod.local_minima(areas),
    }


def bench(mod, data, repeat):
    return {name: min(timeit.repeat(fn, number=1, repeat=repeat)) for name, fn in cases(mod, data).items()}


def check_agreement(data):
    py, cy = cases(_pykernels, data), cases(_ckernels, data)
    for name in py:
        a, b = py[name](), cy[name]()
        pairs = zip(a, b) if isinstance(a, tuple) else [(a, b)]
        for x, y in pairs:
            x, y = np.asarray(x), np.asarray(y)
            if x.shape != y.shape or not np.allclose(x, y, rtol=1e-12, atol=1e-14):
                raise SystemExit(f"{name}: backends disagree")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[1024, 4096, 16384])
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    if _ckernels is None:
        print("compiled kernels not built; timing the Python fallback only")
    print(f"{'kernel':<26}{'size':>7}{'python [us]':>14}{'cython [us]':>14}{'speedup':>9}")
    for size in args.sizes:
        data = inputs(size, rng)
        if _ckernels:
            check_agreement(data)
        py = bench(_pykernels, data, args.repeat)
        cy = bench(_ckernels, data, args.repeat) if _ckernels else {}
        for name, tp in py.items():
            tc = cy.get(name)
            cols = f"{tp * 1e6:14.1f}" + (f"{tc * 1e6:14.1f}{tp / tc:9.1f}" if tc else f"{'-':>14}{'-':>9}")
            print(f"{name:<26}{size:>7}{cols}")


if __name__ == "__main__":
    main()
