"""Timing comparison of the numba kernels against the pure-numpy fallback.

Run:  python benchmarks/bench_backends.py

Covers the three hot paths: Bessel evaluation (dominates table builds),
batched bilinear lookup (dominates score-target assembly), and a full
kernel tabulation via subprocess with JDGEN_NUMBA toggled.
"""

import os
import subprocess
import sys
import time

import numpy as np

from jdgen.backends import numba_backend, numpy_backend


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm up / jit compile
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_primitives():
    rng = np.random.default_rng(0)
    x = rng.uniform(0.0, 500.0, 2_000_000)
    rows = []
    for name, fn_np, fn_nb in (
        ("j0 (2e6 pts)", numpy_backend.j0, numba_backend.j0),
        ("j1 (2e6 pts)", numpy_backend.j1, numba_backend.j1),
    ):
        t_np = timeit(fn_np, x)
        t_nb = timeit(fn_nb, x)
        rows.append((name, t_np, t_nb))

    a = rng.standard_normal((200, 200))
    b = rng.standard_normal((200, 200))
    pos_t = rng.uniform(0.0, 199.0, 2_000_000)
    pos_x = rng.uniform(0.0, 199.0, 2_000_000)
    t_np = timeit(numpy_backend.bilinear_pair, a, b, pos_t, pos_x)
    t_nb = timeit(numba_backend.bilinear_pair, a, b, pos_t, pos_x)
    rows.append(("bilinear pair (2e6 queries)", t_np, t_nb))
    return rows


def bench_tabulate():
    code = (
        "import time\n"
        "from jdgen.levy_noise import ModelConfig\n"
        "from jdgen.kernels import tabulate\n"
        "tabulate(ModelConfig(n_grid=50, n_quad=500))\n"  # warm the jit cache
        "t0 = time.perf_counter()\n"
        "tabulate(ModelConfig())\n"
        "print(time.perf_counter() - t0)\n"
    )
    rows = []
    times = {}
    for flag, label in (("0", "numpy"), ("1", "numba")):
        env = dict(os.environ)
        env["JDGEN_NUMBA"] = flag
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        times[label] = float(out.stdout.strip().splitlines()[-1])
    rows.append(("tabulate 200x200 (2000 nodes)", times["numpy"], times["numba"]))
    return rows


def main():
    print(f"{'kernel':<34}{'numpy':>10}{'numba':>10}{'speedup':>9}")
    for name, t_np, t_nb in bench_primitives() + bench_tabulate():
        print(f"{name:<34}{t_np * 1e3:>8.1f}ms{t_nb * 1e3:>8.1f}ms{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
