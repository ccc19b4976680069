"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is fed identical inputs on both backends; the script also
reports the largest relative difference between their outputs.
"""

import argparse
import timeit

import numpy as np

from selfsim import _fallback

try:
    from selfsim import _kernels
except ImportError:  # extension not built
    _kernels = None


def _omega2_case():
    N, delta = 1.5, 0.5
    s = np.arange(-60, 90, dtype=float)
    scales = N**s
    weights = N ** (-delta * s)
    kh = np.linspace(0.01, 100.0, 2**15)
    return (kh, scales, weights), {}


def _lagrange_case():
    rng = np.random.default_rng(0)
    u = rng.standard_normal(4096)
    shifts = 1.5 ** np.arange(0, 20)
    weights = shifts ** -1.0
    return (u, shifts, weights, 5), {}


def _box_case():
    x = np.linspace(0.0, 1.0, 2**18 + 1)
    y = np.cumsum(np.random.default_rng(1).standard_normal(x.size))
    y = (y - y.min()) / np.ptp(y)
    sizes = 2.0 ** -np.arange(2, 13)
    return (x, y, sizes), {}


CASES = {
    "omega2_series": _omega2_case,
    "shift_sum_lagrange": _lagrange_case,
    "box_count": _box_case,
}


def bench(repeat: int) -> None:
    print(f"{'kernel':<20} {'fallback [ms]':>14} {'compiled [ms]':>14} {'speedup':>8} {'rel diff':>11}")
    for name, make in CASES.items():
        args, kw = make()
        slow = getattr(_fallback, name)
        t_slow = min(timeit.repeat(lambda: slow(*args, **kw), number=1, repeat=repeat))
        if _kernels is None:
            print(f"{name:<20} {1e3 * t_slow:14.2f} {'n/a':>14}")
            continue
        fast = getattr(_kernels, name)
        t_fast = min(timeit.repeat(lambda: fast(*args, **kw), number=1, repeat=repeat))
        a, b = np.asarray(slow(*args), float), np.asarray(fast(*args), float)
        diff = np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300)
        print(f"{name:<20} {1e3 * t_slow:14.2f} {1e3 * t_fast:14.2f} {t_slow / t_fast:8.1f} {diff:11.2e}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    bench(parser.parse_args().repeat)
