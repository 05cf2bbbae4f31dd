"""Timings of the hot kernels: numba lane vs pure-numpy lane.

Run:  python benchmarks/bench_kernels.py
The same comparison with the numba lane disabled end-to-end:
      DEEPTHERM_NUMBA=0 python benchmarks/bench_kernels.py
"""
from __future__ import annotations

import time

import numpy as np

import deeptherm._kernels as kernels


def timeit(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    rng = np.random.default_rng(7)
    rows = []

    z = (rng.standard_normal((20000, 8, 8)) + 1j * rng.standard_normal((20000, 8, 8))) / np.sqrt(2)
    t_np, q_np = timeit(kernels._haar_from_ginibre_numpy, z)
    if kernels.HAVE_NUMBA:
        kernels._haar_from_ginibre_numba(z[:10])  # compile
        t_nb, q_nb = timeit(kernels._haar_from_ginibre_numba, z)
        err = np.abs(q_np - q_nb).max()
    else:
        t_nb, err = float("nan"), float("nan")
    rows.append(("haar qr 20k x 8x8", t_np, t_nb, err))

    psi = rng.standard_normal((200000, 4)) + 1j * rng.standard_normal((200000, 4))
    w = rng.random(200000)
    t_np, m_np = timeit(
        lambda: kernels._moment_accumulate_numpy(psi, w, 2, np.zeros((16, 16), complex))
    )
    if kernels.HAVE_NUMBA:
        kernels._moment_accumulate_numba(psi[:10], w[:10], 2, np.zeros((16, 16), complex))
        t_nb, m_nb = timeit(
            lambda: kernels._moment_accumulate_numba(psi, w, 2, np.zeros((16, 16), complex))
        )
        err = np.abs(m_np - m_nb).max() / np.abs(m_np).max()
    else:
        t_nb, err = float("nan"), float("nan")
    rows.append(("moment accum 200k k=2", t_np, t_nb, err))

    src = rng.standard_normal((4096, 4096)) + 1j * rng.standard_normal((4096, 4096))
    orb = rng.integers(0, 84, 4096)
    t_np, a_np = timeit(kernels._orbit_aggregate_numpy, src, orb, 84)
    if kernels.HAVE_NUMBA:
        kernels._orbit_aggregate_numba(src[:10], orb[:10], 84)
        t_nb, a_nb = timeit(kernels._orbit_aggregate_numba, src, orb, 84)
        err = np.abs(a_np - a_nb).max() / np.abs(a_np).max()
    else:
        t_nb, err = float("nan"), float("nan")
    rows.append(("orbit aggregate 4096^2", t_np, t_nb, err))

    print(f"numba available: {kernels.HAVE_NUMBA} (active lane: {kernels.active_lane()})")
    print(f"{'kernel':<26}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}{'max rel diff':>14}")
    for name, t_np, t_nb, err in rows:
        speed = t_np / t_nb if t_nb == t_nb else float("nan")
        print(f"{name:<26}{t_np * 1e3:>12.1f}{t_nb * 1e3:>12.1f}{speed:>9.2f}{err:>14.2e}")


if __name__ == "__main__":
    main()
