"""Compare the numba-compiled kernels against their pure-Python bodies.

    python3 benchmarks/bench_kernels.py [--departures N] [--seq-len L] [--repeat R]

Both paths run on identical inputs; results are checked for equality before
timings are reported. The first compiled call (JIT warm-up, or cache load)
is timed separately.
"""

import argparse
import time

import numpy as np

from tcintent import _accel, kernels
from tcintent.queue_twin import QueueParams, draw_traffic


def _time(fn, *args, repeat=1):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--departures", type=int, default=200_000, help="approximate packets in the queue run")
    ap.add_argument("--seq-len", type=int, default=400, help="token sequence length for LCS/Levenshtein")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    print(f"numba enabled: {_accel.USE_NUMBA}")
    params = QueueParams.from_target(400.0, 600.0, 0.9, 64)
    horizon = args.departures / (params.lambda_high + params.lambda_low)
    traffic = draw_traffic(params, horizon, seed=1)
    queue_args = (*traffic, params.capacity, horizon, 0.1 * horizon)

    rng = np.random.default_rng(2)
    a = rng.integers(0, 30, args.seq_len)
    b = rng.integers(0, 30, args.seq_len)

    rows = []
    for name, fn, fargs in (("priority_queue_kernel", kernels.priority_queue_kernel, queue_args),
                            ("lcs_length", kernels.lcs_length, (a, b)),
                            ("levenshtein", kernels.levenshtein, (a, b))):
        pure = _accel.python_impl(fn)
        first, _ = _time(fn, *fargs)
        fast, out_fast = _time(fn, *fargs, repeat=args.repeat)
        slow, out_slow = _time(pure, *fargs, repeat=1)
        if not np.array_equal(np.asarray(out_fast), np.asarray(out_slow)):
            raise SystemExit(f"{name}: compiled and pure results differ")
        rows.append((name, first, fast, slow))

    print(f"{'kernel':<24}{'first call':>12}{'compiled':>12}{'pure':>12}{'speed-up':>10}")
    for name, first, fast, slow in rows:
        print(f"{name:<24}{first:>11.4f}s{fast:>11.4f}s{slow:>11.4f}s{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
