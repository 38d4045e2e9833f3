"""Benchmark the numba kernels against the pure numpy fallbacks.

Run as ``python -m kpzlab.bench``.  Imports both backends directly, so the
comparison does not depend on the KPZLAB_DISABLE_NUMBA flag.
"""

from __future__ import annotations

import time

import numpy as np

from kpzlab import _kernels_np
from kpzlab.rng import RngStream


def _timeit(fn, repeats=5):
    fn()  # warm (and compile, for the jitted backend)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _cases():
    gen = RngStream(123, 0).generator()

    n_space, n_steps = 385, 2048
    z0 = np.zeros(n_space)
    z0[n_space // 2] = 32.0
    noise = gen.standard_normal((n_steps, n_space - 2))
    rec = np.array([n_steps], dtype=np.int64)
    yield ("she evolve 385x2048", lambda k: k.evolve_she(
        z0, 1 / 32, 1 / 2048, n_steps, noise, True, rec))

    inc = gen.standard_normal((200, 2000)) * 0.02
    yield ("lpp dp 200x2000", lambda k: k.lpp_last_row(inc))

    curves = np.zeros((2, 51))
    uniforms = gen.random((2, 49))
    zeros = np.zeros(51)
    yield ("gibbs sweep 2x51", lambda k: k.gibbs_sweep(
        curves.copy(), 0.02, 1.0, True, zeros, False, zeros, False,
        uniforms, 2048))


def main() -> None:
    try:
        from kpzlab import _kernels_nb
        backends = [("numba", _kernels_nb), ("numpy", _kernels_np)]
    except ImportError:
        print("numba unavailable; benchmarking the numpy backend only")
        backends = [("numpy", _kernels_np)]

    print(f"{'kernel':28s}" + "".join(f"{name:>12s}" for name, _ in backends)
          + f"{'speedup':>10s}")
    for label, call in _cases():
        times = [_timeit(lambda k=kmod: call(k)) for _, kmod in backends]
        ratio = times[-1] / times[0] if len(times) > 1 else float("nan")
        cells = "".join(f"{t * 1000:11.2f}m" for t in times)
        print(f"{label:28s}{cells}{ratio:9.1f}x")


if __name__ == "__main__":
    main()
