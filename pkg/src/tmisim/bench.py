"""Benchmark the compiled and pure-Python curve kernels.

Times the three kernel entry points on each available backend, then
measures end-to-end sessions per second under each. Run with:

    python -m tmisim.bench [--sessions N] [--reps N]
"""

from __future__ import annotations

import argparse
import time

from . import backend
from .sim import ScenarioConfig, run_full_session


def _time_per_call(fn, args_list, reps):
    start = time.perf_counter()
    for i in range(reps):
        fn(*args_list[i % len(args_list)])
    return (time.perf_counter() - start) / reps


def bench_kernels(reps: int):
    from .primitives import SeededRng, random_scalar

    rng = SeededRng(2024, "bench")
    scalars = [random_scalar(rng).value for _ in range(64)]
    points = [backend.base_mult(k) for k in scalars[:8]]
    rows = []
    for name in backend.available_backends():
        impl = backend.use(name)
        rows.append((
            name,
            _time_per_call(impl.base_mult, [(k,) for k in scalars], reps),
            _time_per_call(impl.scalar_mult,
                           [(k, p[0], p[1]) for k in scalars for p in points[:2]],
                           reps),
            _time_per_call(impl.double_base_mult,
                           [(u, v, p[0], p[1])
                            for u, v in zip(scalars[::2], scalars[1::2])
                            for p in points[:2]],
                           reps),
        ))
    return rows


def bench_sessions(n_sessions: int):
    rows = []
    for name in backend.available_backends():
        backend.use(name)
        start = time.perf_counter()
        for seed in range(n_sessions):
            outcome = run_full_session(ScenarioConfig(seed=1000 + seed))
            assert outcome.completed
        elapsed = time.perf_counter() - start
        rows.append((name, elapsed / n_sessions, n_sessions / elapsed))
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sessions", type=int, default=25)
    parser.add_argument("--reps", type=int, default=200)
    args = parser.parse_args(argv)

    default = backend.active_name()
    print(f"backends available: {', '.join(backend.available_backends())} "
          f"(default: {default})")
    print()
    print(f"{'backend':<10} {'base_mult':>12} {'scalar_mult':>12} {'double_mult':>12}")
    for name, t_base, t_mul, t_dbl in bench_kernels(args.reps):
        print(f"{name:<10} {t_base * 1e6:>10.1f}us {t_mul * 1e6:>10.1f}us "
              f"{t_dbl * 1e6:>10.1f}us")
    print()
    print(f"{'backend':<10} {'per session':>12} {'sessions/s':>12}")
    for name, per, rate in bench_sessions(args.sessions):
        print(f"{name:<10} {per * 1e3:>10.1f}ms {rate:>12.1f}")
    backend.use(default)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
