#!/usr/bin/env python3
"""Compare the compiled kernels against the numpy fallback.

Times the three hot kernels (dense minors, additive-compound assembly, and the
RK4 trajectory loop) at a CLI-like single-run size and at an ensemble size.
The two backends trade places: the compiled loop wins small batches where
per-step numpy dispatch dominates, while the fallback's vectorized tanh wins
large tanh-heavy ensembles.

Usage: python benchmarks/bench_backends.py [--quick]
"""

import argparse
import time

import numpy as np

from kcontract._backend import available_backends, backend_module
from kcontract.compound import _additive_plan, index_arrays
from kcontract.systems import NetworkSystem, Nonlinearity, sim_arrays


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_minors(mod, repeats):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((10, 10))
    rows = index_arrays(10, 5)
    return timeit(lambda: mod.minors(a, rows, rows), repeats)


def bench_additive(mod, repeats):
    rng = np.random.default_rng(1)
    a = rng.standard_normal((12, 12))
    plan = _additive_plan(12, 6)
    return timeit(lambda: mod.additive_apply(a, *plan), repeats)


def hopfield(n=10):
    return NetworkSystem(
        alpha=0.5, w=0.07 * np.ones((n, n)), f=Nonlinearity.scaled_tanh(1.0, n)
    )


def bench_rk4(mod, batch, t_end, with_frames, repeats):
    net = hopfield()
    a0, b0, c0, family, pw_x, pw_y = sim_arrays(net)
    rng = np.random.default_rng(2)
    x0 = rng.uniform(-3, 3, size=(batch, net.n))
    if with_frames:
        k = 2
        frame0 = np.broadcast_to(np.eye(net.n)[:, :k], (batch, net.n, k)).copy()
        rows = index_arrays(net.n, k)
        qk = np.eye(rows.shape[0])
    else:
        frame0 = np.zeros((batch, net.n, 0))
        rows = np.zeros((1, 0), dtype=np.intp)
        qk = np.eye(1)
    n_steps = int(round(t_end / 1e-3))
    steps = np.array([0, n_steps // 2, n_steps], dtype=np.int64)
    return timeit(
        lambda: mod.rk4_run(
            a0, b0, c0, family, pw_x, pw_y, x0, frame0, qk, rows,
            1e-3, steps, 1e9, 1e-300,
        ),
        repeats,
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--quick", action="store_true", help="shorter runs")
    args = parser.parse_args()

    t_single = 2.0 if args.quick else 10.0
    t_batch = 1.0 if args.quick else 5.0
    batch = 20 if args.quick else 100
    repeats = 2 if args.quick else 3

    backends = available_backends()
    cases = [
        ("minors 252x252 of 10x10 (k=5)", lambda m: bench_minors(m, repeats)),
        ("additive compound 924x924 (n=12, k=6)", lambda m: bench_additive(m, repeats)),
        (
            f"rk4 single trajectory, t={t_single:g}, no frames",
            lambda m: bench_rk4(m, 1, t_single, False, repeats),
        ),
        (
            f"rk4 ensemble x{batch}, t={t_batch:g}, no frames",
            lambda m: bench_rk4(m, batch, t_batch, False, 1),
        ),
        (
            f"rk4 ensemble x{batch}, t={t_batch:g}, 2-frames + volumes",
            lambda m: bench_rk4(m, batch, t_batch, True, 1),
        ),
    ]

    width = max(len(name) for name, _ in cases)
    header = f"{'case':<{width}}  " + "  ".join(f"{b:>10}" for b in backends)
    print(header)
    print("-" * len(header))
    for name, runner in cases:
        times = [runner(backend_module(b)) for b in backends]
        row = f"{name:<{width}}  " + "  ".join(f"{t * 1e3:>8.1f}ms" for t in times)
        if len(times) == 2 and min(times) > 0:
            row += f"  ({times[1] / times[0]:.2f}x)"
        print(row)


if __name__ == "__main__":
    main()
